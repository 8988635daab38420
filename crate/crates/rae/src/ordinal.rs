//! Cumulative-logit (proportional-odds) ordinal model with per-group random
//! intercepts: category probabilities, log-likelihood and its gradient, and
//! generative sampling.
//!
//! The model: P(Y <= k | x) = logistic(c_k - eta) with
//! eta = alpha_j + x' beta and strictly increasing cutpoints c_1 < ... < c_{K-1}.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of rating categories.
pub const K: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrdinalError {
    #[error("linear predictor is not finite")]
    NonFiniteLinearPredictor,
    #[error("cutpoints must be strictly increasing")]
    InvalidCutpoints,
    #[error("rating {0} outside 1..={K}")]
    InvalidRating(u8),
    #[error("group index {0} outside the model's intercept table")]
    InvalidGroup(usize),
}

/// Cumulative-logit model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalModel {
    /// K-1 strictly increasing cutpoints.
    pub cutpoints: Vec<f64>,
    /// Named fixed-effect coefficients, aligned with `Covariates::x`.
    pub beta_names: Vec<String>,
    pub beta: Vec<f64>,
    /// Per-group random intercepts (may be empty for a flat model).
    pub alpha: Vec<f64>,
    /// Scale of the random intercepts; must be positive.
    pub sigma_alpha: f64,
}

impl OrdinalModel {
    pub fn validate(&self) -> Result<(), OrdinalError> {
        if !self.cutpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(OrdinalError::InvalidCutpoints);
        }
        if !(self.sigma_alpha > 0.0) {
            return Err(OrdinalError::InvalidCutpoints);
        }
        Ok(())
    }
}

/// One numeric design row: covariate values aligned with the model's beta
/// vector plus an optional group index into the intercept table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariates {
    pub x: Vec<f64>,
    pub group: Option<usize>,
}

impl Covariates {
    pub fn new(x: Vec<f64>, group: Option<usize>) -> Self {
        Covariates { x, group }
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Linear predictor eta = alpha_j + x' beta.
pub fn linear_predictor(model: &OrdinalModel, x: &Covariates) -> Result<f64, OrdinalError> {
    let mut eta = 0.0;
    if let Some(g) = x.group {
        eta += *model.alpha.get(g).ok_or(OrdinalError::InvalidGroup(g))?;
    }
    for (b, v) in model.beta.iter().zip(&x.x) {
        eta += b * v;
    }
    if eta.is_finite() {
        Ok(eta)
    } else {
        Err(OrdinalError::NonFiniteLinearPredictor)
    }
}

/// Category probabilities P(Y = k | x) for k = 1..=K.
pub fn category_probs(model: &OrdinalModel, x: &Covariates) -> Result<[f64; K], OrdinalError> {
    let eta = linear_predictor(model, x)?;
    category_probs_eta(&model.cutpoints, eta)
}

/// Category probabilities for a precomputed linear predictor.
pub fn category_probs_eta(cutpoints: &[f64], eta: f64) -> Result<[f64; K], OrdinalError> {
    if !eta.is_finite() {
        return Err(OrdinalError::NonFiniteLinearPredictor);
    }
    let mut probs = [0.0; K];
    let mut prev = 0.0;
    for k in 0..K {
        let cum = if k + 1 < K { logistic(cutpoints[k] - eta) } else { 1.0 };
        probs[k] = (cum - prev).max(0.0);
        prev = cum;
    }
    Ok(probs)
}

/// Sum of log P(Y = rating_i | x_i) over the data set.
pub fn log_likelihood(
    model: &OrdinalModel,
    data: &[(Covariates, u8)],
) -> Result<f64, OrdinalError> {
    let mut ll = 0.0;
    for (x, rating) in data {
        if !(1..=K as u8).contains(rating) {
            return Err(OrdinalError::InvalidRating(*rating));
        }
        let probs = category_probs(model, x)?;
        // log(0) maps to -inf; keep it finite-guarded for optimizers.
        ll += probs[(*rating - 1) as usize].max(1e-300).ln();
    }
    Ok(ll)
}

/// Gradient layout for [`log_likelihood_grad`]: cutpoints, then beta, then
/// alpha (natural parameterization; sigma_alpha does not enter the likelihood).
pub fn grad_len(model: &OrdinalModel) -> usize {
    model.cutpoints.len() + model.beta.len() + model.alpha.len()
}

/// Analytic gradient of the log-likelihood with respect to
/// (cutpoints, beta, alpha).
pub fn log_likelihood_grad(
    model: &OrdinalModel,
    data: &[(Covariates, u8)],
) -> Result<Vec<f64>, OrdinalError> {
    let nc = model.cutpoints.len();
    let nb = model.beta.len();
    let mut grad = vec![0.0; grad_len(model)];
    for (x, rating) in data {
        if !(1..=K as u8).contains(rating) {
            return Err(OrdinalError::InvalidRating(*rating));
        }
        let eta = linear_predictor(model, x)?;
        let k = (*rating - 1) as usize; // 0-based category
        let upper = if k + 1 < K {
            let s = logistic(model.cutpoints[k] - eta);
            Some((s, s * (1.0 - s)))
        } else {
            None
        };
        let lower = if k > 0 {
            let s = logistic(model.cutpoints[k - 1] - eta);
            Some((s, s * (1.0 - s)))
        } else {
            None
        };
        let p = (upper.map_or(1.0, |u| u.0) - lower.map_or(0.0, |l| l.0)).max(1e-300);
        // d log p / d c_k and d log p / d eta
        if let Some((_, du)) = upper {
            grad[k] += du / p;
        }
        if let Some((_, dl)) = lower {
            grad[k - 1] -= dl / p;
        }
        let deta = (lower.map_or(0.0, |l| l.1) - upper.map_or(0.0, |u| u.1)) / p;
        for (i, v) in x.x.iter().enumerate().take(nb) {
            grad[nc + i] += deta * v;
        }
        if let Some(g) = x.group {
            grad[nc + nb + g] += deta;
        }
    }
    Ok(grad)
}

/// Draw one rating from the model's category distribution. Deterministic
/// given the RNG state.
pub fn sample_rating<R: Rng>(
    model: &OrdinalModel,
    x: &Covariates,
    rng: &mut R,
) -> Result<u8, OrdinalError> {
    let probs = category_probs(model, x)?;
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (k, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return Ok((k + 1) as u8);
        }
    }
    Ok(K as u8)
}

/// Odds ratio exp(beta) for the coded-vs-reference contrast.
pub fn odds_ratio(beta_coef: f64) -> f64 {
    beta_coef.exp()
}

/// Odds ratio exp(-beta) for the reference-vs-coded contrast (e.g. Female vs
/// Male when Male is the coded level).
pub fn odds_ratio_inverted(beta_coef: f64) -> f64 {
    (-beta_coef).exp()
}

/// Map an unconstrained vector (first cutpoint, log-increments) to strictly
/// increasing cutpoints.
pub fn cutpoints_from_unconstrained(u: &[f64]) -> Vec<f64> {
    let mut c = Vec::with_capacity(u.len());
    let mut cur = u[0];
    c.push(cur);
    for v in &u[1..] {
        cur += v.exp();
        c.push(cur);
    }
    c
}
