//! Synthetic-user generator and policy-evaluation harness.
//!
//! Populations are sampled from configurable trait distributions; ratings
//! come from the cumulative-logit generative model, so every recovery
//! oracle in the test suite has known ground truth. Per-user RNG
//! substreams keyed by (seed, user index) make parallel and serial
//! generation identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{
    profile_for, AgeGroup, Aim, AimWeights, AutonomyPref, Domain, Gender, Initiative,
    ItemValue, RatingRecord, StateVector, UserTraits,
};
use crate::ordinal::{category_probs_eta, linear_predictor, Covariates, OrdinalModel, K};
use crate::policy::{decide, PolicyError, PolicyPriors, RuleTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid population spec: {0}")]
    InvalidSpec(String),
    #[error("unsupported coefficient name {0:?} (expected experience, gender, or age)")]
    UnknownCoefficient(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("ordinal model error: {0}")]
    Ordinal(String),
}

/// Categorical distribution over the 1-5 ordinal scale.
pub type OrdinalDist = [f64; 5];

/// Specification of a synthetic population and its generative truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub n_users: usize,
    pub experience_dist: OrdinalDist,
    pub gender_dist: Vec<(Gender, f64)>,
    pub age_dist: Vec<(AgeGroup, f64)>,
    /// Distribution shared by both autonomy-control items.
    pub autonomy_dist: OrdinalDist,
    /// Ground-truth model per aim, with per-domain alpha entries.
    pub true_models: Vec<(Aim, OrdinalModel)>,
    /// Added to the linear predictor for High-frame rows.
    pub value_shift: f64,
    pub seed: u64,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let check_sum = |name: &str, probs: &[f64]| -> Result<(), SimError> {
            if probs.iter().any(|p| *p < 0.0) {
                return Err(SimError::InvalidSpec(format!("{name} has a negative probability")));
            }
            let s: f64 = probs.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(SimError::InvalidSpec(format!("{name} sums to {s}, expected 1")));
            }
            Ok(())
        };
        check_sum("experience_dist", &self.experience_dist)?;
        check_sum("autonomy_dist", &self.autonomy_dist)?;
        let g: Vec<f64> = self.gender_dist.iter().map(|(_, p)| *p).collect();
        check_sum("gender_dist", &g)?;
        let a: Vec<f64> = self.age_dist.iter().map(|(_, p)| *p).collect();
        check_sum("age_dist", &a)?;
        for aim in Aim::ALL {
            let model = self
                .true_models
                .iter()
                .find(|(a, _)| *a == aim)
                .map(|(_, m)| m)
                .ok_or_else(|| SimError::InvalidSpec(format!("missing true model for {aim}")))?;
            model.validate().map_err(|e| SimError::Ordinal(e.to_string()))?;
            if !model.alpha.is_empty() && model.alpha.len() != Domain::ALL.len() {
                return Err(SimError::InvalidSpec(format!(
                    "true model for {aim} has {} alpha entries, expected 0 or {}",
                    model.alpha.len(),
                    Domain::ALL.len()
                )));
            }
        }
        Ok(())
    }

    pub fn model_for(&self, aim: Aim) -> &OrdinalModel {
        &self.true_models.iter().find(|(a, _)| *a == aim).expect("validated spec").1
    }
}

/// Per-aim alignment gaps and the initiative mismatch rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignmentScore {
    /// Mean |policy weight - expected importance| in aim order.
    pub per_aim_gap: [f64; 3],
    pub mean_gap: f64,
    pub initiative_mismatch_rate: f64,
    /// Number of evaluated states; 0 flags an empty population.
    pub n_states: usize,
}

fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d_u64.wrapping_mul(index + 1))
}

fn sample_categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}

fn sample_traits<R: Rng>(rng: &mut R, spec: &PopulationSpec) -> (UserTraits, AutonomyPref) {
    let crs_experience = sample_categorical(rng, &spec.experience_dist) as u8 + 1;
    let g: Vec<f64> = spec.gender_dist.iter().map(|(_, p)| *p).collect();
    let gender = spec.gender_dist[sample_categorical(rng, &g)].0;
    let a: Vec<f64> = spec.age_dist.iter().map(|(_, p)| *p).collect();
    let age_group = spec.age_dist[sample_categorical(rng, &a)].0;
    let autonomy = AutonomyPref {
        educative_control: sample_categorical(rng, &spec.autonomy_dist) as u8 + 1,
        explorative_control: sample_categorical(rng, &spec.autonomy_dist) as u8 + 1,
    };
    (UserTraits { crs_experience, gender, age_group }, autonomy)
}

/// Numeric design row matching a model's coefficient names. Experience is
/// centered at 3; gender is effect-coded (+1 Female, -1 Male, 0 otherwise);
/// age is the 0-based group code.
pub fn design_row(traits: &UserTraits, beta_names: &[String]) -> Result<Vec<f64>, SimError> {
    beta_names
        .iter()
        .map(|name| match name.as_str() {
            "experience" => Ok(traits.crs_experience as f64 - 3.0),
            "gender" => Ok(match traits.gender {
                Gender::Female => 1.0,
                Gender::Male => -1.0,
                Gender::Other | Gender::Undisclosed => 0.0,
            }),
            "age" => Ok(traits.age_group.code() as f64),
            other => Err(SimError::UnknownCoefficient(other.to_string())),
        })
        .collect()
}

fn draw_rating<R: Rng>(
    model: &OrdinalModel,
    x: &Covariates,
    eta_shift: f64,
    rng: &mut R,
) -> Result<u8, SimError> {
    let eta = linear_predictor(model, x).map_err(|e| SimError::Ordinal(e.to_string()))?;
    let probs = category_probs_eta(&model.cutpoints, eta + eta_shift)
        .map_err(|e| SimError::Ordinal(e.to_string()))?;
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (k, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return Ok(k as u8 + 1);
        }
    }
    Ok(K as u8)
}

/// Generate one rating per user x domain x aim x frame. Deterministic
/// given the spec seed.
pub fn generate_population(spec: &PopulationSpec) -> Result<Vec<RatingRecord>, SimError> {
    spec.validate()?;
    let mut records =
        Vec::with_capacity(spec.n_users * Domain::ALL.len() * Aim::ALL.len() * 2);
    for user in 0..spec.n_users {
        let mut rng = substream(spec.seed, user as u64);
        let (traits, autonomy) = sample_traits(&mut rng, spec);
        let participant_id = format!("u{:04}", user + 1);
        for domain in Domain::ALL {
            for aim in Aim::ALL {
                let model = spec.model_for(aim);
                let group = if model.alpha.is_empty() { None } else { Some(domain.index()) };
                let x = Covariates::new(design_row(&traits, &model.beta_names)?, group);
                for value_frame in [ItemValue::Low, ItemValue::High] {
                    let shift =
                        if value_frame == ItemValue::High { spec.value_shift } else { 0.0 };
                    let rating = draw_rating(model, &x, shift, &mut rng)?;
                    records.push(RatingRecord {
                        participant_id: participant_id.clone(),
                        domain,
                        aim,
                        value_frame,
                        rating,
                        traits,
                        autonomy: Some(autonomy),
                    });
                }
            }
        }
    }
    Ok(records)
}

/// Normalized expected rating (E[Y|x] - 1) / (K - 1), the user-side
/// alignment target in [0,1].
pub fn expected_importance(model: &OrdinalModel, x: &Covariates) -> Result<f64, SimError> {
    expected_importance_shifted(model, x, 0.0)
}

fn expected_importance_shifted(
    model: &OrdinalModel,
    x: &Covariates,
    eta_shift: f64,
) -> Result<f64, SimError> {
    let eta = linear_predictor(model, x).map_err(|e| SimError::Ordinal(e.to_string()))?;
    let probs = category_probs_eta(&model.cutpoints, eta + eta_shift)
        .map_err(|e| SimError::Ordinal(e.to_string()))?;
    let expectation: f64 =
        probs.iter().enumerate().map(|(k, p)| (k + 1) as f64 * p).sum();
    Ok((expectation - 1.0) / (K as f64 - 1.0))
}

fn autonomy_band(autonomy: &AutonomyPref) -> Initiative {
    let mean = autonomy.mean();
    if mean > 3.0 {
        Initiative::UserLed
    } else if mean < 3.0 {
        Initiative::SystemLed
    } else {
        Initiative::Mixed
    }
}

fn evaluate_with<F>(spec: &PopulationSpec, mut policy: F) -> Result<AlignmentScore, SimError>
where
    F: FnMut(&StateVector) -> Result<AimWeights, SimError>,
{
    spec.validate()?;
    let mut gap_sums = [0.0f64; 3];
    let mut mismatches = 0usize;
    let mut n_states = 0usize;
    for user in 0..spec.n_users {
        let mut rng = substream(spec.seed, user as u64);
        let (traits, autonomy) = sample_traits(&mut rng, spec);
        for domain in Domain::ALL {
            for item_value in [ItemValue::Low, ItemValue::High] {
                let state = StateVector {
                    domain_profile: profile_for(domain),
                    item_value,
                    user_traits: traits,
                    autonomy_pref: autonomy,
                    history: vec![],
                };
                let weights = policy(&state)?;
                let shift =
                    if item_value == ItemValue::High { spec.value_shift } else { 0.0 };
                for aim in Aim::ALL {
                    let model = spec.model_for(aim);
                    let group =
                        if model.alpha.is_empty() { None } else { Some(domain.index()) };
                    let x = Covariates::new(design_row(&traits, &model.beta_names)?, group);
                    let target = expected_importance_shifted(model, &x, shift)?;
                    gap_sums[aim.index()] += (weights.get(aim) - target).abs();
                }
                if weights.initiative != autonomy_band(&autonomy) {
                    mismatches += 1;
                }
                n_states += 1;
            }
        }
    }
    if n_states == 0 {
        return Ok(AlignmentScore {
            per_aim_gap: [0.0; 3],
            mean_gap: 0.0,
            initiative_mismatch_rate: 0.0,
            n_states: 0,
        });
    }
    let n = n_states as f64;
    let per_aim_gap = [gap_sums[0] / n, gap_sums[1] / n, gap_sums[2] / n];
    Ok(AlignmentScore {
        per_aim_gap,
        mean_gap: (per_aim_gap[0] + per_aim_gap[1] + per_aim_gap[2]) / 3.0,
        initiative_mismatch_rate: mismatches as f64 / n,
        n_states,
    })
}

/// Score the rule/prior policy against the population's generative truth.
pub fn evaluate_policy(
    rules: &RuleTable,
    priors: &PolicyPriors,
    spec: &PopulationSpec,
) -> Result<AlignmentScore, SimError> {
    evaluate_with(spec, |state| Ok(decide(state, rules, priors)?))
}

/// Score the flat baseline: every weight 0.5, Mixed initiative.
pub fn evaluate_flat_baseline(spec: &PopulationSpec) -> Result<AlignmentScore, SimError> {
    evaluate_with(spec, |_| {
        Ok(AimWeights {
            w_edu: 0.5,
            w_exp: 0.5,
            w_aff: 0.5,
            initiative: Initiative::Mixed,
            affective_system_init: true,
        })
    })
}
