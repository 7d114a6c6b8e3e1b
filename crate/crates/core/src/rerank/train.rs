//! KL distillation of BM25 rationale scores into the question-side reranker.
//!
//! For one candidate set the loss is `KL(Q || P)` with
//! `Q = softmax(teacher / tau1)` and `P = softmax(f(d, question) / tau2)`.
//! Its derivative with respect to the student score of candidate `i` is
//! `(P_i - Q_i) / tau2`; that is chained through the bilinear score into both
//! projections and the bias.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::{argmax, kl_terms, log_softmax};
use super::model::{dot, RerankerModel};
use super::{CandidateSet, RerankError};
use crate::corpus::Corpus;

/// A candidate set with its texts featurized once.
#[derive(Debug, Clone)]
pub struct PreparedSet {
    pub set: CandidateSet,
    query_features: Vec<f64>,
    doc_features: Vec<Vec<f64>>,
}

impl PreparedSet {
    /// Resolves doc texts through `corpus` and featurizes them for `model`.
    pub fn new(
        set: CandidateSet,
        corpus: &Corpus,
        model: &RerankerModel,
    ) -> Result<Self, RerankError> {
        let texts = set
            .doc_ids
            .iter()
            .map(|id| {
                corpus
                    .get(id)
                    .map(|d| d.indexed_text())
                    .ok_or_else(|| RerankError::MissingDocument(id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_texts(set, &texts, model))
    }

    /// Uses explicit document texts aligned with `set.doc_ids`.
    pub fn from_texts<S: AsRef<str>>(
        set: CandidateSet,
        doc_texts: &[S],
        model: &RerankerModel,
    ) -> Self {
        let query_features = model.featurize(&set.question);
        let doc_features = doc_texts
            .iter()
            .map(|t| model.featurize(t.as_ref()))
            .collect();
        Self {
            set,
            query_features,
            doc_features,
        }
    }

    fn student_scores(&self, model: &RerankerModel) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        let u = model.project_query(&self.query_features);
        let vs: Vec<Vec<f64>> = self
            .doc_features
            .iter()
            .map(|f| model.project_doc(f))
            .collect();
        let scores = vs.iter().map(|v| dot(&u, v) + model.bias).collect();
        (u, vs, scores)
    }
}

/// Same shape as the model weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub query_projection: Vec<f64>,
    pub doc_projection: Vec<f64>,
    pub bias: f64,
}

impl Gradient {
    pub fn zeros(dim: usize) -> Self {
        Self {
            query_projection: vec![0.0; dim * dim],
            doc_projection: vec![0.0; dim * dim],
            bias: 0.0,
        }
    }

    fn add_scaled(&mut self, other: &Gradient, c: f64) {
        for (a, b) in self
            .query_projection
            .iter_mut()
            .zip(&other.query_projection)
        {
            *a += c * b;
        }
        for (a, b) in self.doc_projection.iter_mut().zip(&other.doc_projection) {
            *a += c * b;
        }
        self.bias += c * other.bias;
    }

    pub fn max_abs(&self) -> f64 {
        self.query_projection
            .iter()
            .chain(&self.doc_projection)
            .chain(std::iter::once(&self.bias))
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

fn check_temperature(tau: f64) -> Result<(), RerankError> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(RerankError::NonPositiveTemperature(tau))
    }
}

/// Loss of one candidate set under `model`.
pub fn set_loss(
    model: &RerankerModel,
    prepared: &PreparedSet,
    tau1: f64,
    tau2: f64,
) -> Result<f64, RerankError> {
    let (_, _, scores) = prepared.student_scores(model);
    let log_q = log_softmax(&prepared.set.teacher_scores, tau1)?;
    let log_p = log_softmax(&scores, tau2)?;
    let q: Vec<f64> = log_q.iter().map(|l| l.exp()).collect();
    Ok(kl_terms(&q, &log_q, &log_p))
}

/// Loss and analytic gradient for one candidate set.
pub fn loss_gradient(
    model: &RerankerModel,
    prepared: &PreparedSet,
    tau1: f64,
    tau2: f64,
) -> Result<(f64, Gradient), RerankError> {
    check_temperature(tau1)?;
    check_temperature(tau2)?;
    prepared.set.validate()?;
    let dim = model.dim;
    let (u, vs, scores) = prepared.student_scores(model);
    let log_q = log_softmax(&prepared.set.teacher_scores, tau1)?;
    let log_p = log_softmax(&scores, tau2)?;
    let q: Vec<f64> = log_q.iter().map(|l| l.exp()).collect();
    let loss = kl_terms(&q, &log_q, &log_p);

    // dL/ds_i
    let g: Vec<f64> = log_p
        .iter()
        .zip(&q)
        .map(|(lp, qi)| (lp.exp() - qi) / tau2)
        .collect();

    // dL/dWq = (sum_i g_i v_i) ⊗ f_q ; dL/dWd = u ⊗ (sum_i g_i f_d,i)
    let mut weighted_v = vec![0.0; dim];
    let mut weighted_fd = vec![0.0; dim];
    for ((gi, v), fd) in g.iter().zip(&vs).zip(&prepared.doc_features) {
        for (w, x) in weighted_v.iter_mut().zip(v) {
            *w += gi * x;
        }
        for (w, x) in weighted_fd.iter_mut().zip(fd) {
            *w += gi * x;
        }
    }
    let mut grad = Gradient::zeros(dim);
    let rows = grad
        .query_projection
        .chunks_mut(dim)
        .zip(grad.doc_projection.chunks_mut(dim));
    for (a, (q_row, d_row)) in rows.enumerate() {
        for (w, f) in q_row.iter_mut().zip(&prepared.query_features) {
            *w = weighted_v[a] * f;
        }
        for (w, f) in d_row.iter_mut().zip(&weighted_fd) {
            *w = u[a] * f;
        }
    }
    grad.bias = g.iter().sum();
    Ok((loss, grad))
}

/// Mean loss over `sets`.
pub fn mean_loss(
    model: &RerankerModel,
    sets: &[PreparedSet],
    tau1: f64,
    tau2: f64,
) -> Result<f64, RerankError> {
    let mut total = 0.0;
    for s in sets {
        total += set_loss(model, s, tau1, tau2)?;
    }
    Ok(total / sets.len() as f64)
}

/// Fraction of sets where the student's top document is the teacher's top document.
pub fn argmax_agreement(model: &RerankerModel, sets: &[PreparedSet]) -> f64 {
    let hits = sets
        .iter()
        .filter(|s| {
            let (_, _, scores) = s.student_scores(model);
            argmax(&scores) == argmax(&s.set.teacher_scores)
        })
        .count();
    hits as f64 / sets.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    /// `w -= lr * g`.
    GradientDescent,
    /// Adam with bias correction.
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub seed: u64,
    /// Shuffle the gradient accumulation order each epoch (seeded).
    pub shuffle: bool,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 1e-2,
            tau1: 1.0,
            tau2: 100.0,
            seed: 0,
            shuffle: false,
            optimizer: Optimizer::GradientDescent,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: RerankerModel,
    /// Mean loss over all sets at the start of each epoch.
    pub loss_trace: Vec<f64>,
    pub final_loss: f64,
}

/// Full-batch training: one step per epoch on the mean gradient over `sets`.
pub fn train(
    model: &RerankerModel,
    sets: &[PreparedSet],
    config: &TrainConfig,
) -> Result<TrainOutcome, RerankError> {
    if sets.is_empty() {
        return Err(RerankError::NoTrainingData);
    }
    check_temperature(config.tau1)?;
    check_temperature(config.tau2)?;
    if config.learning_rate.is_nan() || config.learning_rate < 0.0 {
        return Err(RerankError::NonFinite("learning rate"));
    }
    for s in sets {
        s.set.validate()?;
    }
    let mut model = model.clone();
    let dim = model.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..sets.len()).collect();
    let mut first_moment = Gradient::zeros(dim);
    let mut second_moment = Gradient::zeros(dim);
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let scale = 1.0 / sets.len() as f64;

    for _ in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut grad = Gradient::zeros(dim);
        let mut total = 0.0;
        for &i in &order {
            let (loss, g) = loss_gradient(&model, &sets[i], config.tau1, config.tau2)?;
            total += loss;
            grad.add_scaled(&g, scale);
        }
        loss_trace.push(total * scale);
        model.step += 1;
        apply_step(
            &mut model,
            &grad,
            config,
            &mut first_moment,
            &mut second_moment,
        );
        if !model.is_finite() {
            return Err(RerankError::NonFinite("weight after update"));
        }
    }
    model.learning_rate = config.learning_rate;
    model.seed = config.seed;
    let final_loss = mean_loss(&model, sets, config.tau1, config.tau2)?;
    Ok(TrainOutcome {
        model,
        loss_trace,
        final_loss,
    })
}

fn apply_step(
    model: &mut RerankerModel,
    grad: &Gradient,
    config: &TrainConfig,
    m: &mut Gradient,
    v: &mut Gradient,
) {
    let lr = config.learning_rate;
    match config.optimizer {
        Optimizer::GradientDescent => {
            for (w, g) in model
                .query_projection
                .iter_mut()
                .zip(&grad.query_projection)
            {
                *w -= lr * g;
            }
            for (w, g) in model.doc_projection.iter_mut().zip(&grad.doc_projection) {
                *w -= lr * g;
            }
            model.bias -= lr * grad.bias;
        }
        Optimizer::Adam { beta1, beta2, eps } => {
            let t = model.step as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            let update = |w: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            };
            for i in 0..model.query_projection.len() {
                update(
                    &mut model.query_projection[i],
                    grad.query_projection[i],
                    &mut m.query_projection[i],
                    &mut v.query_projection[i],
                );
                update(
                    &mut model.doc_projection[i],
                    grad.doc_projection[i],
                    &mut m.doc_projection[i],
                    &mut v.doc_projection[i],
                );
            }
            update(&mut model.bias, grad.bias, &mut m.bias, &mut v.bias);
        }
    }
}
