//! Bayesian fitting of the cumulative-logit model by Hamiltonian MCMC, with
//! split R-hat, rank-normalized bulk ESS, HDI summaries, and posterior
//! predictive checks.
//!
//! The posterior targeted by [`fit`]:
//!
//! - beta ~ N(0, prior_scale)
//! - alpha_j ~ N(0, sigma_alpha), sigma_alpha ~ half-N(0, 1)
//! - cutpoints parameterized as (c_1, log-increments), N(0, 5) prior on the
//!   unconstrained values
//!
//! The sampler is plain HMC with dual-averaging step-size adaptation and a
//! diagonal mass matrix estimated during warmup. Chains run independently
//! (optionally in parallel); each owns an RNG stream derived from
//! (seed, chain index), so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::ordinal::{
    category_probs_eta, cutpoints_from_unconstrained, logistic, Covariates, OrdinalModel, K,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferError {
    #[error("degenerate data: fewer than two distinct rating categories")]
    DegenerateData,
    #[error("insufficient draws for the requested diagnostic")]
    InsufficientDraws,
    #[error("invalid MCMC configuration: {0}")]
    InvalidConfig(String),
    #[error("rating {0} outside 1..=5")]
    InvalidRating(u8),
    #[error("group index {0} out of range")]
    InvalidGroup(usize),
}

/// Sampler configuration. `chains >= 2` because split R-hat needs it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McmcConfig {
    pub chains: usize,
    pub warmup_draws: usize,
    pub post_warmup_draws: usize,
    pub seed: u64,
    pub target_accept: f64,
    pub prior_scale: f64,
    /// Probability mass for reported HDIs.
    pub hdi_mass: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            chains: 4,
            warmup_draws: 1000,
            post_warmup_draws: 2000,
            seed: 0,
            target_accept: 0.8,
            prior_scale: 1.0,
            hdi_mass: 0.94,
        }
    }
}

impl McmcConfig {
    fn validate(&self) -> Result<(), InferError> {
        if self.chains < 2 {
            return Err(InferError::InvalidConfig("chains must be >= 2".into()));
        }
        if self.post_warmup_draws == 0 || self.warmup_draws == 0 {
            return Err(InferError::InvalidConfig("draw counts must be positive".into()));
        }
        if !(0.0 < self.target_accept && self.target_accept < 1.0) {
            return Err(InferError::InvalidConfig("target_accept must be in (0,1)".into()));
        }
        if !(self.prior_scale > 0.0) {
            return Err(InferError::InvalidConfig("prior_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Posterior summary for one parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub hdi_low: f64,
    pub hdi_high: f64,
    pub rhat: f64,
    pub ess_bulk: f64,
}

/// Posterior draws (constrained scale) plus per-parameter diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub param_names: Vec<String>,
    pub chains: usize,
    pub iterations: usize,
    /// Row-major: [chain][iteration][parameter].
    draws: Vec<f64>,
    pub summaries: Vec<ParamSummary>,
    pub divergence_count: usize,
    pub hdi_mass: f64,
    /// Model structure needed to rebuild an [`OrdinalModel`] from one draw.
    pub n_cutpoints: usize,
    pub beta_names: Vec<String>,
    pub n_groups: usize,
}

impl FitResult {
    pub fn n_params(&self) -> usize {
        self.param_names.len()
    }

    pub fn value(&self, chain: usize, iter: usize, param: usize) -> f64 {
        self.draws[(chain * self.iterations + iter) * self.n_params() + param]
    }

    /// Per-chain draw vectors for one parameter.
    pub fn param_draws(&self, param: usize) -> Vec<Vec<f64>> {
        (0..self.chains)
            .map(|c| (0..self.iterations).map(|i| self.value(c, i, param)).collect())
            .collect()
    }

    pub fn summary(&self, name: &str) -> Option<&ParamSummary> {
        self.summaries.iter().find(|s| s.name == name)
    }

    /// Rebuild the ordinal model corresponding to one posterior draw.
    pub fn model_at(&self, chain: usize, iter: usize) -> OrdinalModel {
        let nc = self.n_cutpoints;
        let nb = self.beta_names.len();
        let at = |p: usize| self.value(chain, iter, p);
        OrdinalModel {
            cutpoints: (0..nc).map(at).collect(),
            beta_names: self.beta_names.clone(),
            beta: (nc..nc + nb).map(at).collect(),
            alpha: (nc + nb..nc + nb + self.n_groups).map(at).collect(),
            sigma_alpha: if self.n_groups > 0 { at(nc + nb + self.n_groups) } else { 1.0 },
        }
    }

    /// Serialize draws as CSV rows `parameter,chain,iteration,value`.
    pub fn write_draws_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "parameter,chain,iteration,value")?;
        for (p, name) in self.param_names.iter().enumerate() {
            for c in 0..self.chains {
                for i in 0..self.iterations {
                    writeln!(w, "{},{},{},{}", name, c, i, self.value(c, i, p))?;
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Posterior density

struct Posterior {
    /// Flattened covariate rows, stride `n_beta`.
    xs: Vec<f64>,
    groups: Vec<usize>, // usize::MAX = no group
    ratings: Vec<u8>,
    n_beta: usize,
    n_groups: usize,
    prior_scale: f64,
}

impl Posterior {
    fn n_rows(&self) -> usize {
        self.ratings.len()
    }

    fn dim(&self) -> usize {
        // cutpoints (unconstrained) + betas + alphas + log sigma_alpha
        K - 1 + self.n_beta + if self.n_groups > 0 { self.n_groups + 1 } else { 0 }
    }

    /// Log posterior and gradient on the unconstrained scale.
    fn log_post_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let nc = K - 1;
        let nb = self.n_beta;
        let ng = self.n_groups;
        grad.iter_mut().for_each(|g| *g = 0.0);

        let u = &theta[..nc];
        let cut = cutpoints_from_unconstrained(u);
        let beta = &theta[nc..nc + nb];
        let (alpha, tau) = if ng > 0 {
            (&theta[nc + nb..nc + nb + ng], theta[nc + nb + ng])
        } else {
            (&theta[0..0], 0.0)
        };

        let mut lp = 0.0;
        let mut dcut = [0.0f64; K - 1];

        for row in 0..self.n_rows() {
            let mut eta = 0.0;
            let x = &self.xs[row * nb..(row + 1) * nb];
            for (b, v) in beta.iter().zip(x) {
                eta += b * v;
            }
            let g = self.groups[row];
            if g != usize::MAX {
                eta += alpha[g];
            }
            let k = (self.ratings[row] - 1) as usize;
            let (su, du) = if k + 1 < K {
                let s = logistic(cut[k] - eta);
                (s, s * (1.0 - s))
            } else {
                (1.0, 0.0)
            };
            let (sl, dl) = if k > 0 {
                let s = logistic(cut[k - 1] - eta);
                (s, s * (1.0 - s))
            } else {
                (0.0, 0.0)
            };
            let p = (su - sl).max(1e-300);
            lp += p.ln();
            if k + 1 < K {
                dcut[k] += du / p;
            }
            if k > 0 {
                dcut[k - 1] -= dl / p;
            }
            let deta = (dl - du) / p;
            for (i, v) in x.iter().enumerate() {
                grad[nc + i] += deta * v;
            }
            if g != usize::MAX {
                grad[nc + nb + g] += deta;
            }
        }

        // chain rule cutpoints -> unconstrained (c_1, log increments)
        let mut suffix = 0.0;
        for m in (0..nc).rev() {
            suffix += dcut[m];
            grad[m] += if m == 0 { suffix } else { suffix * u[m].exp() };
        }

        // priors
        let cut_sd2 = 25.0; // N(0,5) on the unconstrained parameterization
        for m in 0..nc {
            lp += -u[m] * u[m] / (2.0 * cut_sd2);
            grad[m] += -u[m] / cut_sd2;
        }
        let ps2 = self.prior_scale * self.prior_scale;
        for (i, b) in beta.iter().enumerate() {
            lp += -b * b / (2.0 * ps2);
            grad[nc + i] += -b / ps2;
        }
        if ng > 0 {
            let sigma = tau.exp();
            let s2 = sigma * sigma;
            let mut sum_a2 = 0.0;
            for (j, a) in alpha.iter().enumerate() {
                sum_a2 += a * a;
                grad[nc + nb + j] += -a / s2;
            }
            // alpha | sigma, half-normal(0,1) on sigma, plus log-Jacobian tau
            lp += -(ng as f64) * tau - sum_a2 / (2.0 * s2);
            lp += -s2 / 2.0 + tau;
            grad[nc + nb + ng] += -(ng as f64) + sum_a2 / s2 - s2 + 1.0;
        }
        lp
    }

    /// Constrained parameter vector for reporting.
    fn constrain(&self, theta: &[f64], out: &mut [f64]) {
        let nc = K - 1;
        let nb = self.n_beta;
        let ng = self.n_groups;
        let cut = cutpoints_from_unconstrained(&theta[..nc]);
        out[..nc].copy_from_slice(&cut);
        out[nc..nc + nb].copy_from_slice(&theta[nc..nc + nb]);
        if ng > 0 {
            out[nc + nb..nc + nb + ng].copy_from_slice(&theta[nc + nb..nc + nb + ng]);
            out[nc + nb + ng] = theta[nc + nb + ng].exp();
        }
    }
}

// ---------------------------------------------------------------------------
// HMC with dual averaging and diagonal mass adaptation

struct ChainOutput {
    draws: Vec<f64>, // [iter][param], constrained
    divergences: usize,
}

struct DualAveraging {
    mu: f64,
    log_eps: f64,
    log_eps_bar: f64,
    h_bar: f64,
    count: usize,
    target: f64,
}

impl DualAveraging {
    fn new(eps0: f64, target: f64) -> Self {
        DualAveraging {
            mu: (10.0 * eps0).ln(),
            log_eps: eps0.ln(),
            log_eps_bar: eps0.ln(),
            h_bar: 0.0,
            count: 0,
            target,
        }
    }

    fn update(&mut self, accept_prob: f64) {
        self.count += 1;
        let m = self.count as f64;
        let gamma = 0.05;
        let t0 = 10.0;
        let kappa = 0.75;
        self.h_bar =
            (1.0 - 1.0 / (m + t0)) * self.h_bar + (self.target - accept_prob) / (m + t0);
        self.log_eps = self.mu - m.sqrt() / gamma * self.h_bar;
        let w = m.powf(-kappa);
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar;
    }

    fn eps(&self) -> f64 {
        self.log_eps.exp()
    }

    fn eps_final(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

fn run_chain(post: &Posterior, config: &McmcConfig, chain_idx: usize) -> ChainOutput {
    let dim = post.dim();
    let mut rng =
        ChaCha8Rng::seed_from_u64(config.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(chain_idx as u64 + 1)));

    // Mild random init around a reasonable starting shape.
    let mut theta = vec![0.0; dim];
    theta[0] = -1.5 + 0.2 * rng.gen_range(-1.0..1.0);
    for t in theta.iter_mut().take(K - 1).skip(1) {
        *t = 0.2 * rng.gen_range(-1.0..1.0);
    }
    for t in theta.iter_mut().skip(K - 1) {
        *t = 0.1 * rng.gen_range(-1.0..1.0);
    }
    if post.n_groups > 0 {
        theta[dim - 1] = -0.5; // log sigma_alpha
    }

    let mut grad = vec![0.0; dim];
    let mut lp = post.log_post_grad(&theta, &mut grad);

    let mut inv_mass: Vec<f64> = vec![1.0; dim]; // posterior variance estimates
    let mut eps = 0.1 / (dim as f64).powf(0.25);
    let mut da = DualAveraging::new(eps, config.target_accept);

    let warmup = config.warmup_draws;
    let mass_start = warmup / 5;
    let mass_end = warmup * 4 / 5;
    let mut welford_n = 0usize;
    let mut welford_mean = vec![0.0; dim];
    let mut welford_m2 = vec![0.0; dim];

    let total = warmup + config.post_warmup_draws;
    let mut out = ChainOutput {
        draws: Vec::with_capacity(config.post_warmup_draws * dim),
        divergences: 0,
    };
    let mut constrained = vec![0.0; dim];
    let mut theta_prop = vec![0.0; dim];
    let mut grad_prop = vec![0.0; dim];
    let mut momentum = vec![0.0; dim];

    for iter in 0..total {
        // momentum ~ N(0, M), M = 1 / inv_mass
        for (p, v) in momentum.iter_mut().zip(&inv_mass) {
            let z: f64 = {
                // Box-Muller keeps us independent of rand_distr.
                let u1: f64 = rng.gen::<f64>().max(1e-300);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            };
            *p = z / v.sqrt();
        }
        let kinetic = |p: &[f64]| -> f64 {
            p.iter().zip(&inv_mass).map(|(pi, vi)| pi * pi * vi / 2.0).sum()
        };
        let h0 = -lp + kinetic(&momentum);

        // Jittered leapfrog trajectory. The integration time (in mass-scaled
        // space) is generous because cutpoints and group intercepts share a
        // common-location ridge that short trajectories explore slowly.
        let l_target = ((5.0 / eps).round() as usize).clamp(1, 512);
        let l = rng.gen_range((l_target / 2).max(1)..=l_target);

        theta_prop.copy_from_slice(&theta);
        grad_prop.copy_from_slice(&grad);
        let mut lp_prop = lp;
        let mut diverged = false;
        for _ in 0..l {
            for (p, g) in momentum.iter_mut().zip(&grad_prop) {
                *p += 0.5 * eps * g;
            }
            for ((t, p), v) in theta_prop.iter_mut().zip(&momentum).zip(&inv_mass) {
                *t += eps * p * v;
            }
            lp_prop = post.log_post_grad(&theta_prop, &mut grad_prop);
            if !lp_prop.is_finite() {
                diverged = true;
                break;
            }
            for (p, g) in momentum.iter_mut().zip(&grad_prop) {
                *p += 0.5 * eps * g;
            }
        }

        let (accept_prob, accept) = if diverged {
            (0.0, false)
        } else {
            let h1 = -lp_prop + kinetic(&momentum);
            let delta = h0 - h1;
            if !delta.is_finite() || delta < -500.0 {
                diverged = true;
                (0.0, false)
            } else {
                let ap = delta.min(0.0).exp();
                (ap, rng.gen::<f64>() < ap)
            }
        };

        if accept {
            theta.copy_from_slice(&theta_prop);
            grad.copy_from_slice(&grad_prop);
            lp = lp_prop;
        }

        if iter < warmup {
            da.update(accept_prob);
            eps = da.eps().clamp(1e-6, 2.0);
            if iter >= mass_start && iter < mass_end {
                welford_n += 1;
                for i in 0..dim {
                    let d = theta[i] - welford_mean[i];
                    welford_mean[i] += d / welford_n as f64;
                    welford_m2[i] += d * (theta[i] - welford_mean[i]);
                }
            }
            if iter + 1 == mass_end && welford_n > 10 {
                let n = welford_n as f64;
                for i in 0..dim {
                    let var = welford_m2[i] / (n - 1.0);
                    // shrink toward unit scale, floor to keep M positive
                    inv_mass[i] = (var * n / (n + 5.0) + 1e-3 * 5.0 / (n + 5.0)).max(1e-8);
                }
                // restart step-size adaptation under the new metric
                da = DualAveraging::new(eps, config.target_accept);
            }
            if iter + 1 == warmup {
                eps = da.eps_final().clamp(1e-6, 2.0);
            }
        } else {
            if diverged {
                out.divergences += 1;
            }
            post.constrain(&theta, &mut constrained);
            out.draws.extend_from_slice(&constrained);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// fit

/// Fit the hierarchical cumulative-logit model. Deterministic given the
/// config seed. Non-convergence is not an error; diagnostics are reported
/// and the caller decides.
pub fn fit(
    data: &[(Covariates, u8)],
    beta_names: &[String],
    group_names: &[String],
    config: &McmcConfig,
) -> Result<FitResult, InferError> {
    config.validate()?;
    if data.is_empty() {
        return Err(InferError::DegenerateData);
    }
    let mut seen = [false; K];
    for (_, r) in data {
        if !(1..=K as u8).contains(r) {
            return Err(InferError::InvalidRating(*r));
        }
        seen[(*r - 1) as usize] = true;
    }
    if seen.iter().filter(|s| **s).count() < 2 {
        return Err(InferError::DegenerateData);
    }

    let n_beta = beta_names.len();
    let mut n_groups = 0usize;
    for (x, _) in data {
        if x.x.len() != n_beta {
            return Err(InferError::InvalidConfig(format!(
                "covariate row has {} values, expected {}",
                x.x.len(),
                n_beta
            )));
        }
        if let Some(g) = x.group {
            n_groups = n_groups.max(g + 1);
        }
    }
    if !group_names.is_empty() && group_names.len() < n_groups {
        return Err(InferError::InvalidGroup(n_groups - 1));
    }
    if n_groups > 0 {
        n_groups = n_groups.max(group_names.len());
    }

    let post = Posterior {
        xs: data.iter().flat_map(|(x, _)| x.x.iter().copied()).collect(),
        groups: data.iter().map(|(x, _)| x.group.unwrap_or(usize::MAX)).collect(),
        ratings: data.iter().map(|(_, r)| *r).collect(),
        n_beta,
        n_groups,
        prior_scale: config.prior_scale,
    };

    let outputs: Vec<ChainOutput> = (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(&post, config, c))
        .collect();

    let dim = post.dim();
    let mut param_names: Vec<String> = (1..K).map(|k| format!("c[{k}]")).collect();
    param_names.extend(beta_names.iter().cloned());
    for j in 0..n_groups {
        if j < group_names.len() {
            param_names.push(format!("alpha[{}]", group_names[j]));
        } else {
            param_names.push(format!("alpha[{j}]"));
        }
    }
    if n_groups > 0 {
        param_names.push("sigma_alpha".to_string());
    }
    debug_assert_eq!(param_names.len(), dim);

    let iterations = config.post_warmup_draws;
    let mut draws = Vec::with_capacity(config.chains * iterations * dim);
    let mut divergence_count = 0;
    for o in &outputs {
        draws.extend_from_slice(&o.draws);
        divergence_count += o.divergences;
    }

    let mut result = FitResult {
        param_names,
        chains: config.chains,
        iterations,
        draws,
        summaries: vec![],
        divergence_count,
        hdi_mass: config.hdi_mass,
        n_cutpoints: K - 1,
        beta_names: beta_names.to_vec(),
        n_groups,
    };

    let mut summaries = Vec::with_capacity(dim);
    for p in 0..dim {
        let per_chain = result.param_draws(p);
        let flat: Vec<f64> = per_chain.iter().flatten().copied().collect();
        let n = flat.len() as f64;
        let mean = flat.iter().sum::<f64>() / n;
        let sd = (flat.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        let (lo, hi) = hdi(&flat, config.hdi_mass)?;
        summaries.push(ParamSummary {
            name: result.param_names[p].clone(),
            mean,
            sd,
            hdi_low: lo,
            hdi_high: hi,
            rhat: split_rhat(&per_chain)?,
            ess_bulk: ess_bulk(&per_chain)?,
        });
    }
    result.summaries = summaries;
    Ok(result)
}

// ---------------------------------------------------------------------------
// Diagnostics

fn split_chains(chains: &[Vec<f64>]) -> Result<Vec<&[f64]>, InferError> {
    if chains.len() < 2 || chains.iter().any(|c| c.len() < 4) {
        return Err(InferError::InsufficientDraws);
    }
    let n = chains.iter().map(|c| c.len()).min().unwrap();
    let half = n / 2;
    let mut halves = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        halves.push(&c[..half]);
        halves.push(&c[half..2 * half]);
    }
    Ok(halves)
}

fn between_within(halves: &[&[f64]]) -> (f64, f64, f64) {
    let m = halves.len() as f64;
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|mu| (mu - grand) * (mu - grand)).sum::<f64>();
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, mu)| h.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    (b, w, n)
}

/// Split-chain potential scale reduction factor.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64, InferError> {
    let halves = split_chains(chains)?;
    let (b, w, n) = between_within(&halves);
    if w <= 0.0 {
        // all chains constant at the same value
        return Ok(if b <= 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok(((w * (n - 1.0) / n + b / n) / w).sqrt())
}

/// Rank-normalized bulk effective sample size with Geyer initial-monotone
/// truncation of the autocorrelation sum. Returns 0 for constant input.
pub fn ess_bulk(chains: &[Vec<f64>]) -> Result<f64, InferError> {
    let halves = split_chains(chains)?;
    let n = halves[0].len();
    let total = halves.len() * n;

    // rank-normalize pooled draws (average ranks for ties)
    let mut pooled: Vec<f64> = halves.iter().flat_map(|h| h.iter().copied()).collect();
    let ranks = crate::stats::midranks(&pooled);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let s = total as f64;
    for (v, r) in pooled.iter_mut().zip(&ranks) {
        *v = normal.inverse_cdf((r - 0.375) / (s + 0.25));
    }
    let z_halves: Vec<Vec<f64>> =
        (0..halves.len()).map(|i| pooled[i * n..(i + 1) * n].to_vec()).collect();

    let (b, w, nf) = {
        let refs: Vec<&[f64]> = z_halves.iter().map(|h| h.as_slice()).collect();
        between_within(&refs)
    };
    let var_plus = w * (nf - 1.0) / nf + b / nf;
    if var_plus <= 0.0 || w <= 0.0 {
        return Ok(0.0);
    }

    // mean within-chain autocovariance at each lag
    let m = z_halves.len() as f64;
    let means: Vec<f64> =
        z_halves.iter().map(|h| h.iter().sum::<f64>() / nf).collect();
    let acov = |lag: usize| -> f64 {
        z_halves
            .iter()
            .zip(&means)
            .map(|(h, mu)| {
                (0..n - lag).map(|i| (h[i] - mu) * (h[i + lag] - mu)).sum::<f64>() / nf
            })
            .sum::<f64>()
            / m
    };

    let rho = |lag: usize, acov_lag: f64| -> f64 {
        let _ = lag;
        1.0 - (w - acov_lag) / var_plus
    };

    // Geyer: sum consecutive pairs while positive, enforce monotone decrease.
    let mut tau = 1.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 1;
    while lag + 1 < n {
        let p = rho(lag, acov(lag)) + rho(lag + 1, acov(lag + 1));
        if p <= 0.0 {
            break;
        }
        let p = p.min(prev_pair);
        prev_pair = p;
        tau += 2.0 * p;
        lag += 2;
    }
    Ok((total as f64 / tau).min(total as f64 * 2.0))
}

/// Narrowest contiguous interval containing ceil(mass * n) sorted samples.
/// Ties break to the leftmost window.
pub fn hdi(samples: &[f64], mass: f64) -> Result<(f64, f64), InferError> {
    if samples.len() < 10 || !(0.0 < mass && mass < 1.0) {
        return Err(InferError::InsufficientDraws);
    }
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let window = ((mass * n as f64).ceil() as usize).clamp(1, n);
    let mut best = (sorted[0], sorted[window - 1]);
    let mut best_width = best.1 - best.0;
    for i in 1..=n - window {
        let width = sorted[i + window - 1] - sorted[i];
        if width < best_width {
            best_width = width;
            best = (sorted[i], sorted[i + window - 1]);
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Posterior predictive check

/// Per-category predicted frequency bands next to observed frequencies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpcResult {
    pub observed: [f64; K],
    pub predicted_mean: [f64; K],
    pub band_low: [f64; K],
    pub band_high: [f64; K],
    pub draws_used: usize,
}

impl PpcResult {
    pub fn observed_within_band(&self) -> bool {
        (0..K).all(|k| self.observed[k] >= self.band_low[k] && self.observed[k] <= self.band_high[k])
    }
}

/// Simulate `n_rep` replicated datasets from evenly spaced posterior draws
/// and tabulate category frequencies against the observed data.
pub fn posterior_predictive_check<R: Rng>(
    fit: &FitResult,
    data: &[(Covariates, u8)],
    rng: &mut R,
    n_rep: usize,
) -> Result<PpcResult, InferError> {
    let mut observed = [0.0; K];
    for (_, r) in data {
        observed[(*r - 1) as usize] += 1.0;
    }
    let n = data.len().max(1) as f64;
    observed.iter_mut().for_each(|v| *v /= n);

    if n_rep == 0 {
        return Ok(PpcResult {
            observed,
            predicted_mean: [0.0; K],
            band_low: [0.0; K],
            band_high: [0.0; K],
            draws_used: 0,
        });
    }

    let total = fit.chains * fit.iterations;
    let mut freqs: Vec<[f64; K]> = Vec::with_capacity(n_rep);
    for i in 0..n_rep {
        let idx = i * total / n_rep;
        let (chain, iter) = (idx / fit.iterations, idx % fit.iterations);
        let model = fit.model_at(chain, iter);
        let mut counts = [0.0; K];
        for (x, _) in data {
            let mut eta = 0.0;
            for (b, v) in model.beta.iter().zip(&x.x) {
                eta += b * v;
            }
            if let Some(g) = x.group {
                eta += *model.alpha.get(g).ok_or(InferError::InvalidGroup(g))?;
            }
            let probs = category_probs_eta(&model.cutpoints, eta)
                .map_err(|_| InferError::InvalidConfig("non-finite eta in ppc".into()))?;
            let u: f64 = rng.gen();
            let mut cum = 0.0;
            let mut cat = K - 1;
            for (k, p) in probs.iter().enumerate() {
                cum += p;
                if u < cum {
                    cat = k;
                    break;
                }
            }
            counts[cat] += 1.0;
        }
        counts.iter_mut().for_each(|v| *v /= n);
        freqs.push(counts);
    }

    let mut predicted_mean = [0.0; K];
    let mut band_low = [0.0; K];
    let mut band_high = [0.0; K];
    for k in 0..K {
        let series: Vec<f64> = freqs.iter().map(|f| f[k]).collect();
        predicted_mean[k] = series.iter().sum::<f64>() / series.len() as f64;
        if series.len() >= 10 {
            let (lo, hi) = hdi(&series, fit.hdi_mass)?;
            band_low[k] = lo;
            band_high[k] = hi;
        } else {
            band_low[k] = series.iter().copied().fold(f64::INFINITY, f64::min);
            band_high[k] = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
    }
    Ok(PpcResult { observed, predicted_mean, band_low, band_high, draws_used: n_rep })
}
