use super::RerankError;

/// A probability distribution over candidate documents.
///
/// Log-probabilities are kept alongside so that KL terms stay finite when a
/// probability underflows.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub doc_ids: Vec<String>,
    pub probabilities: Vec<f64>,
    log_probabilities: Vec<f64>,
}

impl Distribution {
    /// Softmax of `scores / tau` over `doc_ids`.
    pub fn from_scores(
        doc_ids: Vec<String>,
        scores: &[f64],
        tau: f64,
    ) -> Result<Self, RerankError> {
        if doc_ids.len() != scores.len() {
            return Err(RerankError::MisalignedDistributions);
        }
        let log_probabilities = log_softmax(scores, tau)?;
        Ok(Self {
            doc_ids,
            probabilities: log_probabilities.iter().map(|l| l.exp()).collect(),
            log_probabilities,
        })
    }

    /// Wraps explicit probabilities (e.g. a one-hot target).
    pub fn from_probabilities(
        doc_ids: Vec<String>,
        probabilities: Vec<f64>,
    ) -> Result<Self, RerankError> {
        if doc_ids.len() != probabilities.len() || probabilities.is_empty() {
            return Err(RerankError::MisalignedDistributions);
        }
        Ok(Self {
            doc_ids,
            log_probabilities: probabilities.iter().map(|p| p.ln()).collect(),
            probabilities,
        })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Index of the most probable document (first on ties).
    pub fn argmax(&self) -> usize {
        argmax(&self.probabilities)
    }
}

/// `p_i = exp(s_i / tau) / sum_j exp(s_j / tau)`, computed with max subtraction.
pub fn softmax_normalize(scores: &[f64], tau: f64) -> Result<Vec<f64>, RerankError> {
    Ok(log_softmax(scores, tau)?
        .into_iter()
        .map(f64::exp)
        .collect())
}

pub(crate) fn log_softmax(scores: &[f64], tau: f64) -> Result<Vec<f64>, RerankError> {
    if tau <= 0.0 || !tau.is_finite() {
        return Err(RerankError::NonPositiveTemperature(tau));
    }
    if scores.is_empty() {
        return Err(RerankError::EmptyScores);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(RerankError::NonFinite("score"));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = scores.iter().map(|s| (s - max) / tau).collect();
    let lse = shifted.iter().map(|z| z.exp()).sum::<f64>().ln();
    Ok(shifted.into_iter().map(|z| z - lse).collect())
}

/// `KL(Q || P) = sum_i q_i ln(q_i / p_i)`, with `0 ln 0 = 0`.
pub fn kl_loss(q: &Distribution, p: &Distribution) -> Result<f64, RerankError> {
    if q.doc_ids != p.doc_ids || q.len() != p.len() {
        return Err(RerankError::MisalignedDistributions);
    }
    Ok(kl_terms(
        &q.probabilities,
        &q.log_probabilities,
        &p.log_probabilities,
    ))
}

pub(crate) fn kl_terms(q: &[f64], log_q: &[f64], log_p: &[f64]) -> f64 {
    q.iter()
        .zip(log_q)
        .zip(log_p)
        .map(|((&qi, &lq), &lp)| if qi > 0.0 { qi * (lq - lp) } else { 0.0 })
        .sum()
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
