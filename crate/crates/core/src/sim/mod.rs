//! Monte-Carlo study of memorization in the next-symbol prediction problem.
//!
//! `N` uniformly random reference strings of `d` bits define a task. A sample
//! picks a subpopulation `j` and a prefix length `l`, shows `(j, c_j(1:l))` and
//! asks for `c_j(l+1)`. The knowledge-augmented learner memorizes at most `m`
//! bits per subpopulation and recovers the rest from an unlabeled knowledge
//! base of `N + R` strings; it is compared with the best prefix-based learner
//! without a knowledge base and a learner that stores the training set verbatim.

mod learners;
mod task;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use learners::{
    infer_kard, infer_naive, infer_opt, learn_kard, learn_naive, learn_opt, InferenceCase,
    KardPrediction, KbIndex, MemorizedEntry, MemorizedState, NaiveState, OptState,
};
pub use task::{draw_sample, sample_task, BitString, Sample, TaskInstance};

use learners::ceil_log2;

#[derive(thiserror::Error, Debug, PartialEq)]
pub enum SimError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("bad sweep spec {0:?}: expected param=start:end:step")]
    BadSweep(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of reference strings (subpopulations), `N`.
    #[serde(rename = "N")]
    pub num_references: usize,
    /// Training samples, `n`.
    #[serde(rename = "n")]
    pub num_samples: usize,
    /// Reference length in bits, `d`.
    #[serde(rename = "d")]
    pub length: usize,
    /// Irrelevant knowledge-base entries, `R`.
    #[serde(rename = "R")]
    pub distractors: usize,
    #[serde(rename = "eps")]
    pub epsilon: f64,
    pub trials: usize,
    pub tests_per_trial: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_references: 100,
            num_samples: 100,
            length: 128,
            distractors: 100,
            epsilon: 0.1,
            trials: 200,
            tests_per_trial: 500,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(SimError::InvalidEpsilon(self.epsilon));
        }
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.num_references == 0 || self.num_samples == 0 || self.length == 0 {
            return bad("N, n and d must be at least 1");
        }
        if self.trials == 0 || self.tests_per_trial == 0 {
            return bad("trials and tests must be at least 1");
        }
        let slots = self.num_references + self.distractors;
        if self.length < usize::BITS as usize && (1usize << self.length) < slots {
            return bad("d is too small to hold N + R distinct strings");
        }
        Ok(())
    }
}

/// The prefix budget `m = log2((1 - ((N-1)/N)^n) * ((N+R)^2 - (N+R)) / (2 eps))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrefixBudget {
    /// Real-valued formula (may be `-inf` when `N + R < 2`).
    pub raw: f64,
    /// `ceil(raw)`, at least 1.
    pub bits: usize,
    /// The pair count `(N+R)^2 - (N+R)` is zero, so the bound says nothing.
    pub degenerate: bool,
}

impl PrefixBudget {
    /// Budget usable for strings of length `d`.
    pub fn clamped(&self, d: usize) -> usize {
        self.bits.clamp(1, d.max(1))
    }
}

pub fn compute_m(
    num_references: usize,
    num_samples: usize,
    distractors: usize,
    epsilon: f64,
) -> Result<PrefixBudget, SimError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SimError::InvalidEpsilon(epsilon));
    }
    if num_references == 0 || num_samples == 0 {
        return Err(SimError::InvalidConfig("N and n must be at least 1".into()));
    }
    let n_refs = num_references as f64;
    let kb = (num_references + distractors) as f64;
    let coverage = 1.0 - ((n_refs - 1.0) / n_refs).powf(num_samples as f64);
    let pairs = kb * kb - kb;
    let raw = (coverage * pairs / (2.0 * epsilon)).log2();
    let degenerate = pairs == 0.0;
    let bits = if raw.is_finite() && raw > 1.0 {
        raw.ceil() as usize
    } else {
        1
    };
    Ok(PrefixBudget {
        raw,
        bits,
        degenerate,
    })
}

/// `err(A_OPT) = 1/2 * P(no training prefix in the test subpopulation is longer
/// than the test prefix)`, in closed form.
pub fn analytic_err_opt(num_references: usize, num_samples: usize, length: usize) -> f64 {
    let nd = (num_references * length) as f64;
    let mean: f64 = (0..length)
        .map(|lt| (1.0 - (length - 1 - lt) as f64 / nd).powi(num_samples as i32))
        .sum::<f64>()
        / length as f64;
    0.5 * mean
}

/// An error rate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub se: f64,
    pub errors: u64,
    pub count: u64,
}

impl RateEstimate {
    fn new(errors: u64, count: u64) -> Self {
        let rate = errors as f64 / count as f64;
        Self {
            rate,
            se: (rate * (1.0 - rate) / count as f64).sqrt(),
            errors,
            count,
        }
    }
}

/// How often each inference branch fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CaseCounts {
    pub unseen: u64,
    pub kb_unique: u64,
    pub kb_ambiguous: u64,
    pub covered: u64,
    pub uncovered: u64,
    /// Wrong predictions from a unique KB match; always 0.
    pub kb_unique_errors: u64,
}

impl CaseCounts {
    fn add(&mut self, o: &CaseCounts) {
        self.unseen += o.unseen;
        self.kb_unique += o.kb_unique;
        self.kb_ambiguous += o.kb_ambiguous;
        self.covered += o.covered;
        self.uncovered += o.uncovered;
        self.kb_unique_errors += o.kb_unique_errors;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub m: usize,
    pub m_raw: f64,
    pub m_degenerate: bool,
    pub err_phi: RateEstimate,
    pub err_opt: RateEstimate,
    pub err_naive: RateEstimate,
    pub err_opt_analytic: f64,
    /// `err_phi - err_opt`.
    pub gap: f64,
    /// `se_phi + se_opt`.
    pub gap_se: f64,
    /// Mean over trials, prefix + `ceil(log2 N)` bits per entry.
    pub mean_bits_phi: f64,
    /// Mean over trials, prefix + 1 bit per entry.
    pub mean_bits_phi_proof: f64,
    pub max_bits_phi: u64,
    /// `min(N, n) * (m + ceil(log2 N))`.
    pub bit_budget: u64,
    /// `min(N, n) * (m + 1)`.
    pub bit_budget_proof: u64,
    /// Trials whose stored bits exceeded `bit_budget`; always 0.
    pub budget_violations: u64,
    pub bits_naive: f64,
    pub cases: CaseCounts,
}

#[derive(Debug, Default)]
struct TrialStats {
    errors_phi: u64,
    errors_opt: u64,
    errors_naive: u64,
    bits_phi: u64,
    proof_bits_phi: u64,
    bits_naive: u64,
    cases: CaseCounts,
}

/// Independent RNG for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn run_trial(config: &SimConfig, m: usize, trial: usize) -> TrialStats {
    let mut rng = trial_rng(config.seed, trial);
    let task = sample_task(config, &mut rng);
    let kard = learn_kard(&task, m);
    let kb = KbIndex::new(&task.kb, m);
    let opt = learn_opt(&task);
    let naive = learn_naive(&task);

    let mut stats = TrialStats {
        bits_phi: kard.total_bits,
        proof_bits_phi: kard.proof_bits,
        bits_naive: naive.bits,
        ..TrialStats::default()
    };
    for _ in 0..config.tests_per_trial {
        let test = draw_sample(&task.references, &mut rng);
        let (j, lt) = (test.subpopulation, test.prefix_len());

        let p = infer_kard(&kard, &kb, j, lt, m, &mut rng);
        let wrong = p.bit != test.label;
        stats.errors_phi += u64::from(wrong);
        match p.case {
            InferenceCase::Unseen => stats.cases.unseen += 1,
            InferenceCase::KbLookup { matches: 1 } => {
                stats.cases.kb_unique += 1;
                stats.cases.kb_unique_errors += u64::from(wrong);
            }
            InferenceCase::KbLookup { .. } => stats.cases.kb_ambiguous += 1,
            InferenceCase::Covered => stats.cases.covered += 1,
            InferenceCase::Uncovered => stats.cases.uncovered += 1,
        }
        stats.errors_opt += u64::from(infer_opt(&opt, j, lt, &mut rng) != test.label);
        stats.errors_naive += u64::from(infer_naive(&naive, j, lt, &mut rng) != test.label);
    }
    stats
}

/// Runs `config.trials` independent trials (in parallel) and aggregates them.
/// The result depends only on the config, not on thread scheduling.
pub fn run_simulation(config: &SimConfig) -> Result<SimReport, SimError> {
    config.validate()?;
    let budget = compute_m(
        config.num_references,
        config.num_samples,
        config.distractors,
        config.epsilon,
    )?;
    let m = budget.clamped(config.length);
    let trials: Vec<TrialStats> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, m, t))
        .collect();

    let entries = config.num_references.min(config.num_samples) as u64;
    let bit_budget = entries * (m as u64 + ceil_log2(config.num_references));
    let bit_budget_proof = entries * (m as u64 + 1);
    let count = (config.trials * config.tests_per_trial) as u64;
    let mut cases = CaseCounts::default();
    let (mut e_phi, mut e_opt, mut e_naive) = (0, 0, 0);
    let (mut bits, mut proof_bits, mut naive_bits, mut max_bits, mut violations) = (0, 0, 0, 0, 0);
    for t in &trials {
        e_phi += t.errors_phi;
        e_opt += t.errors_opt;
        e_naive += t.errors_naive;
        bits += t.bits_phi;
        proof_bits += t.proof_bits_phi;
        naive_bits += t.bits_naive;
        max_bits = max_bits.max(t.bits_phi);
        violations += u64::from(t.bits_phi > bit_budget);
        cases.add(&t.cases);
    }
    let err_phi = RateEstimate::new(e_phi, count);
    let err_opt = RateEstimate::new(e_opt, count);
    let n_trials = config.trials as f64;
    Ok(SimReport {
        config: *config,
        m,
        m_raw: budget.raw,
        m_degenerate: budget.degenerate,
        err_phi,
        err_opt,
        err_naive: RateEstimate::new(e_naive, count),
        err_opt_analytic: analytic_err_opt(
            config.num_references,
            config.num_samples,
            config.length,
        ),
        gap: err_phi.rate - err_opt.rate,
        gap_se: err_phi.se + err_opt.se,
        mean_bits_phi: bits as f64 / n_trials,
        mean_bits_phi_proof: proof_bits as f64 / n_trials,
        max_bits_phi: max_bits,
        bit_budget,
        bit_budget_proof,
        budget_violations: violations,
        bits_naive: naive_bits as f64 / n_trials,
        cases,
    })
}

/// Which config field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    NumReferences,
    NumSamples,
    Length,
    Distractors,
    Epsilon,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::NumReferences => "N",
            SweepParam::NumSamples => "n",
            SweepParam::Length => "d",
            SweepParam::Distractors => "R",
            SweepParam::Epsilon => "eps",
        }
    }

    fn apply(self, config: &mut SimConfig, value: f64) {
        match self {
            SweepParam::NumReferences => config.num_references = value as usize,
            SweepParam::NumSamples => config.num_samples = value as usize,
            SweepParam::Length => config.length = value as usize,
            SweepParam::Distractors => config.distractors = value as usize,
            SweepParam::Epsilon => config.epsilon = value,
        }
    }
}

/// `param=start:end:step`, inclusive of `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl std::str::FromStr for Sweep {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SimError::BadSweep(s.to_string());
        let (name, range) = s.split_once('=').ok_or_else(bad)?;
        let param = match name.trim() {
            "N" => SweepParam::NumReferences,
            "n" => SweepParam::NumSamples,
            "d" => SweepParam::Length,
            "R" => SweepParam::Distractors,
            "eps" => SweepParam::Epsilon,
            _ => return Err(bad()),
        };
        let parts: Vec<f64> = range
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let [start, end, step] = parts[..] else {
            return Err(bad());
        };
        if step.is_nan() || step <= 0.0 || end < start {
            return Err(bad());
        }
        Ok(Sweep {
            param,
            start,
            end,
            step,
        })
    }
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// Runs the base config once per sweep value.
pub fn run_sweep(base: &SimConfig, sweep: &Sweep) -> Result<Vec<(f64, SimReport)>, SimError> {
    sweep
        .values()
        .into_iter()
        .map(|v| {
            let mut c = *base;
            sweep.param.apply(&mut c, v);
            run_simulation(&c).map(|r| (v, r))
        })
        .collect()
}

pub fn sweep_csv(param: SweepParam, rows: &[(f64, SimReport)]) -> String {
    let mut out = format!(
        "{},m,err_phi,se_phi,err_opt,se_opt,err_naive,gap,mean_bits_phi,bit_budget,bits_naive\n",
        param.name()
    );
    for (v, r) in rows {
        let _ = writeln!(
            out,
            "{v},{},{},{},{},{},{},{},{},{},{}",
            r.m,
            r.err_phi.rate,
            r.err_phi.se,
            r.err_opt.rate,
            r.err_opt.se,
            r.err_naive.rate,
            r.gap,
            r.mean_bits_phi,
            r.bit_budget,
            r.bits_naive
        );
    }
    out
}

/// Empirical fraction of one-bits over `draws` uniformly random strings of length `d`.
pub fn bit_frequency<R: Rng>(d: usize, draws: usize, rng: &mut R) -> f64 {
    let ones: usize = (0..draws)
        .map(|_| {
            task::random_bits(d, rng)
                .iter()
                .filter(|&&b| b == 1)
                .count()
        })
        .sum();
    ones as f64 / (d * draws) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_config_m_is_17() {
        let b = compute_m(100, 100, 100, 0.1).unwrap();
        assert_eq!(b.bits, 17);
        assert!(!b.degenerate);
    }

    #[test]
    fn degenerate_bound_returns_one() {
        let b = compute_m(1, 1, 0, 0.5).unwrap();
        assert_eq!(b.bits, 1);
        assert!(b.degenerate);
    }

    #[test]
    fn epsilon_checked() {
        assert_eq!(compute_m(2, 2, 0, 0.0), Err(SimError::InvalidEpsilon(0.0)));
        assert_eq!(compute_m(2, 2, 0, 1.0), Err(SimError::InvalidEpsilon(1.0)));
    }

    #[test]
    fn clamp_to_length() {
        let b = compute_m(100, 100, 100, 0.1).unwrap();
        assert_eq!(b.clamped(8), 8);
        assert_eq!(b.clamped(128), 17);
    }

    #[test]
    fn sweep_parsing() {
        let s: Sweep = "R=0:300:100".parse().unwrap();
        assert_eq!(s.param, SweepParam::Distractors);
        assert_eq!(s.values(), vec![0.0, 100.0, 200.0, 300.0]);
        assert!("Q=1:2:1".parse::<Sweep>().is_err());
        assert!("R=1:2".parse::<Sweep>().is_err());
        assert!("R=3:2:1".parse::<Sweep>().is_err());
    }

    #[test]
    fn tiny_d_rejected_when_kb_cannot_be_distinct() {
        let c = SimConfig {
            num_references: 2,
            distractors: 1,
            length: 1,
            ..SimConfig::default()
        };
        assert!(matches!(c.validate(), Err(SimError::InvalidConfig(_))));
    }
}
