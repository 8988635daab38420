//! Adaptation engine for experience-aligned conversational recommenders.
//!
//! The crate is organised around the stages of the calibration workflow:
//!
//! - [`core`]: shared domain types (state vectors, aim weights, rating records).
//! - [`ordinal`]: the cumulative-logit ordinal model used everywhere a rating
//!   distribution is needed.
//! - [`infer`]: Bayesian fitting by Hamiltonian MCMC, convergence diagnostics,
//!   HDI summaries, and posterior predictive checks.
//! - [`stats`]: the non-parametric test battery (Kruskal-Wallis, Mann-Whitney,
//!   Wilcoxon, Spearman) with multiplicity corrections and effect sizes.
//! - [`pipeline`]: hypothesis runners over ingested rating data plus the
//!   calibration step that turns fit results into policy priors.
//! - [`policy`]: the state -> aim-weight mapping and initiative allocation.
//! - [`sim`]: synthetic-user populations and the policy evaluation harness.

pub mod core;
pub mod infer;
pub mod ordinal;
pub mod pipeline;
pub mod policy;
pub mod sim;
pub mod stats;
