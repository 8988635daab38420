//! Non-parametric test battery and multiplicity corrections: Kruskal-Wallis,
//! Mann-Whitney U, Wilcoxon signed-rank (paired and one-sample, with an exact
//! small-sample mode), Spearman correlation, Bonferroni and Benjamini-Hochberg
//! adjustment, and the effect-size family (r, rank-biserial, CLES).
//!
//! Ties are handled with mid-ranks throughout; normal approximations use
//! tie-corrected variances and a 0.5 continuity correction.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty group supplied to a rank test")]
    EmptyGroup,
    #[error("need at least two groups")]
    TooFewGroups,
    #[error("all differences are ties (n' = 0)")]
    AllTies,
    #[error("constant input: zero variance after ranking")]
    ConstantInput,
    #[error("input length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {0} observations")]
    TooFewObservations(usize),
}

/// Common result shape for every test in the battery. Fields that do not
/// apply to a given test are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    /// Normal-approximation z, negative when the statistic falls below its
    /// null mean.
    pub z: Option<f64>,
    pub df: Option<usize>,
    /// Two-sided p-value (after any requested multiplicity adjustment).
    pub p_value: f64,
    /// One-sided exact p when the exact null distribution was enumerated.
    pub p_one_sided: Option<f64>,
    /// Whether the p-value came from the exact null distribution.
    pub exact: bool,
    /// n for omnibus tests; the non-tied n' for signed-rank tests.
    pub n_effective: usize,
    /// |z| / sqrt(total n).
    pub effect_r: Option<f64>,
    /// |z| / sqrt(n') variant.
    pub effect_r_ntied: Option<f64>,
    pub rank_biserial: Option<f64>,
    pub cles: Option<f64>,
    /// Per-group mean ranks (Kruskal-Wallis companion output).
    pub mean_ranks: Option<Vec<f64>>,
}

impl TestResult {
    fn new(statistic: f64, p_value: f64, n_effective: usize) -> Self {
        TestResult {
            statistic,
            z: None,
            df: None,
            p_value,
            p_one_sided: None,
            exact: false,
            n_effective,
            effect_r: None,
            effect_r_ntied: None,
            rank_biserial: None,
            cles: None,
            mean_ranks: None,
        }
    }
}

/// Mid-ranks of `values` (1-based average ranks for ties).
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Sum of (t^3 - t) over tie groups.
fn tie_term(values: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        sum += t * t * t - t;
        i = j + 1;
    }
    sum
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

fn two_sided_p(z: f64) -> f64 {
    (2.0 * std_normal().cdf(-z.abs())).min(1.0)
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(df as f64).unwrap().cdf(x)
}

/// r = |z| / sqrt(n).
pub fn effect_size_r(z: f64, n: usize) -> f64 {
    z.abs() / (n as f64).sqrt()
}

/// Bonferroni adjustment: min(1, m * p).
pub fn bonferroni(p: f64, m: usize) -> f64 {
    (p * m as f64).min(1.0)
}

/// Kruskal-Wallis omnibus test with mid-rank tie correction. Emits per-group
/// mean ranks alongside H and the chi-square p-value.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(StatsError::EmptyGroup);
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let ranks = midranks(&pooled);
    let mut mean_ranks = Vec::with_capacity(groups.len());
    let mut h = 0.0;
    let mut offset = 0;
    for g in groups {
        let r_sum: f64 = ranks[offset..offset + g.len()].iter().sum();
        mean_ranks.push(r_sum / g.len() as f64);
        h += r_sum * r_sum / g.len() as f64;
        offset += g.len();
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
    let correction = 1.0 - tie_term(&pooled) / (n * n * n - n);
    let h = if correction > 0.0 { h / correction } else { 0.0 };
    let df = groups.len() - 1;
    let p = chi_square_sf(h, df);
    let mut result = TestResult::new(h, p, pooled.len());
    result.df = Some(df);
    result.mean_ranks = Some(mean_ranks);
    Ok(result)
}

/// Mann-Whitney U with mid-ranks, tie-corrected normal approximation, and an
/// optional Bonferroni factor `adjust_m` applied to the two-sided p.
pub fn mann_whitney_u(a: &[f64], b: &[f64], adjust_m: usize) -> Result<TestResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptyGroup);
    }
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    let n = n1 + n2;
    let pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let ranks = midranks(&pooled);
    let r1: f64 = ranks[..a.len()].iter().sum();
    let u1 = r1 - n1 * (n1 + 1.0) / 2.0;
    let u2 = n1 * n2 - u1;
    let u = u1.min(u2);
    let mean = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term(&pooled) / (n * (n - 1.0)));
    let z = if var > 0.0 && u != mean {
        let cc = if u < mean { 0.5 } else { -0.5 };
        (u - mean + cc) / var.sqrt()
    } else {
        0.0
    };
    let p_raw = if z == 0.0 { 1.0 } else { two_sided_p(z) };
    let p = bonferroni(p_raw, adjust_m.max(1));
    let mut result = TestResult::new(u, p, pooled.len());
    result.z = Some(z);
    result.effect_r = Some(effect_size_r(z, pooled.len()));
    result.rank_biserial = Some(1.0 - 2.0 * u1 / (n1 * n2));
    result.cles = Some(u1 / (n1 * n2));
    Ok(result)
}

/// Reference side for the signed-rank test.
pub enum WilcoxonMode<'a> {
    /// Paired differences x[i] - y[i].
    Paired(&'a [f64]),
    /// One-sample differences x[i] - mu.
    OneSample(f64),
}

/// Wilcoxon signed-rank test. Zero differences are dropped (n' reported);
/// the exact null distribution is enumerated when n' <= 12, otherwise a
/// tie-corrected normal approximation with continuity correction is used.
pub fn wilcoxon_signed_rank(x: &[f64], mode: WilcoxonMode) -> Result<TestResult, StatsError> {
    let diffs: Vec<f64> = match mode {
        WilcoxonMode::Paired(y) => {
            if x.len() != y.len() {
                return Err(StatsError::LengthMismatch(x.len(), y.len()));
            }
            x.iter().zip(y).map(|(a, b)| a - b).collect()
        }
        WilcoxonMode::OneSample(mu) => x.iter().map(|a| a - mu).collect(),
    };
    let total_n = diffs.len();
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n_prime = nonzero.len();
    if n_prime == 0 {
        return Err(StatsError::AllTies);
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let mut w_plus = 0.0;
    let mut w_minus = 0.0;
    for (d, r) in nonzero.iter().zip(&ranks) {
        if *d > 0.0 {
            w_plus += r;
        } else {
            w_minus += r;
        }
    }
    let w = w_plus.min(w_minus);

    let nf = n_prime as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term(&abs) / 48.0;
    let z = if var > 0.0 && w_plus != w_minus {
        let cc = if w < mean { 0.5 } else { -0.5 };
        (w - mean + cc) / var.sqrt()
    } else {
        0.0
    };

    let (p, p_one, exact) = if n_prime <= 12 {
        // Enumerate all sign assignments over the observed mid-ranks.
        let total = 1u64 << n_prime;
        let mut count_le = 0u64;
        for mask in 0..total {
            let mut wp = 0.0;
            for (i, r) in ranks.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    wp += r;
                }
            }
            if wp <= w + 1e-9 {
                count_le += 1;
            }
        }
        let one = count_le as f64 / total as f64;
        ((2.0 * one).min(1.0), Some(one), true)
    } else {
        let p = if z == 0.0 { 1.0 } else { two_sided_p(z) };
        (p, None, false)
    };

    let mut result = TestResult::new(w, p, n_prime);
    result.z = Some(z);
    result.p_one_sided = p_one;
    result.exact = exact;
    result.effect_r = Some(effect_size_r(z, total_n));
    result.effect_r_ntied = Some(effect_size_r(z, n_prime));
    result.rank_biserial = Some((w_plus - w_minus) / (w_plus + w_minus));
    let favorable =
        diffs.iter().filter(|d| **d > 0.0).count() as f64 + 0.5 * (total_n - n_prime) as f64;
    result.cles = Some(favorable / total_n as f64);
    Ok(result)
}

/// Spearman rank correlation: Pearson correlation of mid-ranks, p via the
/// t approximation with n-2 degrees of freedom.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewObservations(3));
    }
    let rx = midranks(x);
    let ry = midranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = x.len() - 2;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df as f64 / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df as f64).unwrap();
        (2.0 * dist.cdf(-t.abs())).min(1.0)
    };
    let mut result = TestResult::new(rho, p, x.len());
    result.df = Some(df);
    Ok(result)
}

/// Benjamini-Hochberg step-up adjusted p-values and rejection flags at
/// level `q`, returned in the input order.
pub fn benjamini_hochberg(p_values: &[f64], q: f64) -> (Vec<f64>, Vec<bool>) {
    let m = p_values.len();
    if m == 0 {
        return (vec![], vec![]);
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).unwrap());
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for i in (0..m).rev() {
        let idx = order[i];
        let candidate = (p_values[idx] * m as f64 / (i + 1) as f64).min(1.0);
        running = running.min(candidate);
        adjusted[idx] = running;
    }
    let reject: Vec<bool> = adjusted.iter().map(|p| *p <= q).collect();
    (adjusted, reject)
}
