use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::SimConfig;

/// A string over {0, 1}, one byte per symbol.
pub type BitString = Vec<u8>;

/// One `(Z, Y)` draw: `Z = (subpopulation, prefix)`, `Y = label`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub subpopulation: usize,
    pub prefix: BitString,
    pub label: u8,
}

impl Sample {
    pub fn prefix_len(&self) -> usize {
        self.prefix.len()
    }
}

/// A sampled memorization task.
#[derive(Debug, Clone)]
pub struct TaskInstance {
    /// Reference strings `c_1..c_N`, each of length `d`.
    pub references: Vec<BitString>,
    /// References plus `R` distractors, shuffled; carries no subpopulation labels.
    pub kb: Vec<BitString>,
    pub training: Vec<Sample>,
}

pub(crate) fn random_bits<R: Rng>(len: usize, rng: &mut R) -> BitString {
    (0..len).map(|_| rng.gen_range(0..=1u8)).collect()
}

/// Draws `Z = (j, c_j(1:l))`, `Y = c_j(l+1)` with `j ~ U[N]`, `l ~ U{0..d-1}`.
pub fn draw_sample<R: Rng>(references: &[BitString], rng: &mut R) -> Sample {
    let j = rng.gen_range(0..references.len());
    let c = &references[j];
    let l = rng.gen_range(0..c.len());
    Sample {
        subpopulation: j,
        prefix: c[..l].to_vec(),
        label: c[l],
    }
}

/// Samples references, the knowledge base and `n` training draws.
pub fn sample_task<R: Rng>(config: &SimConfig, rng: &mut R) -> TaskInstance {
    let references: Vec<BitString> = (0..config.num_references)
        .map(|_| random_bits(config.length, rng))
        .collect();
    let mut taken: HashSet<BitString> = references.iter().cloned().collect();
    let mut kb = references.clone();
    for _ in 0..config.distractors {
        loop {
            let s = random_bits(config.length, rng);
            if taken.insert(s.clone()) {
                kb.push(s);
                break;
            }
        }
    }
    kb.shuffle(rng);
    let training = (0..config.num_samples)
        .map(|_| draw_sample(&references, rng))
        .collect();
    TaskInstance {
        references,
        kb,
        training,
    }
}
