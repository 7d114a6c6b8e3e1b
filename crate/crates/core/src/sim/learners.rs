//! The three learners: the knowledge-augmented prefix memorizer `(φ, A)`, the
//! prefix-optimal learner without a knowledge base, and the verbatim memorizer.

use std::collections::HashMap;

use rand::Rng;

use super::task::{BitString, Sample, TaskInstance};

pub(crate) fn ceil_log2(x: usize) -> u64 {
    if x <= 1 {
        0
    } else {
        u64::from(usize::BITS - (x - 1).leading_zeros())
    }
}

/// What `A` keeps for one subpopulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemorizedEntry {
    pub stored_prefix: BitString,
}

impl MemorizedEntry {
    pub fn len(&self) -> usize {
        self.stored_prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stored_prefix.is_empty()
    }
}

/// Output of `A`: at most one truncated prefix per subpopulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemorizedState {
    pub entries: Vec<Option<MemorizedEntry>>,
    /// Prefix bits plus `ceil(log2 N)` index bits per entry.
    pub total_bits: u64,
    /// Prefix bits plus one bit per entry.
    pub proof_bits: u64,
}

impl MemorizedState {
    pub fn entry_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }
}

/// Keeps the first `min(m, l_x)` bits of the longest-prefix training sample in
/// each subpopulation that has one.
pub fn learn_kard(task: &TaskInstance, m: usize) -> MemorizedState {
    let n_refs = task.references.len();
    let longest = longest_per_subpopulation(&task.training, n_refs);
    let index_bits = ceil_log2(n_refs);
    let mut total_bits = 0;
    let mut proof_bits = 0;
    let entries = longest
        .into_iter()
        .map(|s| {
            s.map(|s| {
                let keep = m.min(s.prefix_len());
                total_bits += keep as u64 + index_bits;
                proof_bits += keep as u64 + 1;
                MemorizedEntry {
                    stored_prefix: s.prefix[..keep].to_vec(),
                }
            })
        })
        .collect();
    MemorizedState {
        entries,
        total_bits,
        proof_bits,
    }
}

fn longest_per_subpopulation(training: &[Sample], n_refs: usize) -> Vec<Option<&Sample>> {
    let mut best: Vec<Option<&Sample>> = vec![None; n_refs];
    for s in training {
        let slot = &mut best[s.subpopulation];
        if slot.is_none_or(|b| s.prefix_len() > b.prefix_len()) {
            *slot = Some(s);
        }
    }
    best
}

/// Knowledge base strings grouped by their first `m` bits.
#[derive(Debug, Clone)]
pub struct KbIndex<'a> {
    kb: &'a [BitString],
    m: usize,
    by_prefix: HashMap<&'a [u8], Vec<usize>>,
}

impl<'a> KbIndex<'a> {
    pub fn new(kb: &'a [BitString], m: usize) -> Self {
        let mut by_prefix: HashMap<&[u8], Vec<usize>> = HashMap::new();
        for (i, s) in kb.iter().enumerate() {
            by_prefix.entry(&s[..m.min(s.len())]).or_default().push(i);
        }
        Self { kb, m, by_prefix }
    }

    /// KB strings whose first `m` bits equal `prefix`.
    pub fn matches(&self, prefix: &[u8]) -> &[usize] {
        debug_assert_eq!(prefix.len(), self.m);
        self.by_prefix.get(prefix).map_or(&[], Vec::as_slice)
    }

    pub fn get(&self, i: usize) -> &BitString {
        &self.kb[i]
    }
}

/// Which branch of the inference rule produced a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InferenceCase {
    /// (a) nothing memorized for the subpopulation.
    Unseen,
    /// (b) a full `m`-bit prefix was memorized; the KB is searched.
    KbLookup { matches: usize },
    /// (c) a shorter prefix covers the test position.
    Covered,
    /// (d) a shorter prefix does not cover the test position.
    Uncovered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KardPrediction {
    pub bit: u8,
    pub case: InferenceCase,
}

/// The inference rule `φ(Z, A(X), S)`.
pub fn infer_kard<R: Rng>(
    state: &MemorizedState,
    kb: &KbIndex<'_>,
    test_subpopulation: usize,
    test_prefix_len: usize,
    m: usize,
    rng: &mut R,
) -> KardPrediction {
    let coin = |rng: &mut R| rng.gen_range(0..=1u8);
    let Some(entry) = &state.entries[test_subpopulation] else {
        return KardPrediction {
            bit: coin(rng),
            case: InferenceCase::Unseen,
        };
    };
    if entry.len() == m {
        let matches = kb.matches(&entry.stored_prefix);
        // the true reference is always in the KB, so there is at least one match
        let pick = matches[rng.gen_range(0..matches.len())];
        KardPrediction {
            bit: kb.get(pick)[test_prefix_len],
            case: InferenceCase::KbLookup {
                matches: matches.len(),
            },
        }
    } else if test_prefix_len < entry.len() {
        KardPrediction {
            bit: entry.stored_prefix[test_prefix_len],
            case: InferenceCase::Covered,
        }
    } else {
        KardPrediction {
            bit: coin(rng),
            case: InferenceCase::Uncovered,
        }
    }
}

/// Longest observed prefix per subpopulation: all the prefix information the
/// training set holds about each reference.
#[derive(Debug, Clone)]
pub struct OptState {
    longest: Vec<Option<BitString>>,
}

pub fn learn_opt(task: &TaskInstance) -> OptState {
    OptState {
        longest: longest_per_subpopulation(&task.training, task.references.len())
            .into_iter()
            .map(|s| s.map(|s| s.prefix.clone()))
            .collect(),
    }
}

/// Reads the bit when some training prefix in the subpopulation is longer than
/// the test prefix, otherwise flips a fair coin.
pub fn infer_opt<R: Rng>(
    state: &OptState,
    test_subpopulation: usize,
    test_prefix_len: usize,
    rng: &mut R,
) -> u8 {
    match &state.longest[test_subpopulation] {
        Some(p) if p.len() > test_prefix_len => p[test_prefix_len],
        _ => rng.gen_range(0..=1u8),
    }
}

/// Verbatim memorizer: keeps every training sample.
#[derive(Debug, Clone)]
pub struct NaiveState {
    samples: Vec<Sample>,
    pub bits: u64,
}

/// Stores every sample; each costs `l_x + 1 + ceil(log2 N) + ceil(log2 d)` bits.
pub fn learn_naive(task: &TaskInstance) -> NaiveState {
    let n_refs = task.references.len();
    let d = task.references.first().map_or(0, Vec::len);
    let per_sample = 1 + ceil_log2(n_refs) + ceil_log2(d);
    let bits = task
        .training
        .iter()
        .map(|s| s.prefix_len() as u64 + per_sample)
        .sum();
    NaiveState {
        samples: task.training.clone(),
        bits,
    }
}

/// Same decision rule as [`infer_opt`], evaluated by scanning every stored sample.
pub fn infer_naive<R: Rng>(
    state: &NaiveState,
    test_subpopulation: usize,
    test_prefix_len: usize,
    rng: &mut R,
) -> u8 {
    state
        .samples
        .iter()
        .find(|s| s.subpopulation == test_subpopulation && s.prefix_len() > test_prefix_len)
        .map_or_else(|| rng.gen_range(0..=1u8), |s| s.prefix[test_prefix_len])
}
