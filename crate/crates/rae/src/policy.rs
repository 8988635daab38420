//! The state → policy → behaviour mapping: layered rule-based weighting
//! (domain priors → value modulation → trait modulation) and initiative
//! allocation.
//!
//! Layer order matters. Domain cluster rules set the baseline, high item
//! value raises floors, fitted trait coefficients nudge, and autonomy
//! preference allocates initiative last. `decide` is a pure function of
//! (state, rules, priors).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{
    Aim, AimWeights, AutonomyPref, Cluster, Domain, DomainProfile, Gender, Initiative,
    ItemValue, StateVector, UserTraits,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("rule table has no row for cluster {0:?}")]
    MissingCluster(Cluster),
    #[error("invalid policy configuration: {0}")]
    InvalidConfig(String),
}

/// Per-aim emphasis symbol from the adaptation rule table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Emphasis {
    Primary,
    Secondary,
    Deemphasized,
}

/// Preferred dialogue mode per cluster row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PreferredMode {
    SystemToUser,
    MixedInitiative,
    UserLedOrMixed,
    GentleSystemInit,
    UserLedNudges,
}

impl PreferredMode {
    fn initiative(self) -> Initiative {
        match self {
            PreferredMode::SystemToUser => Initiative::SystemLed,
            PreferredMode::MixedInitiative => Initiative::Mixed,
            _ => Initiative::UserLed,
        }
    }
}

/// One cluster row of the adaptation rule table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRow {
    pub cluster: Cluster,
    /// Emphasis for (educative, explorative, affective), in aim order.
    pub emphasis: [Emphasis; 3],
    pub preferred_mode: PreferredMode,
    pub triggers: String,
}

/// The cluster → emphasis/mode rule table; exactly one row per cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub rows: Vec<RuleRow>,
}

impl Default for RuleTable {
    fn default() -> Self {
        use Emphasis::{Deemphasized as D, Primary as P, Secondary as S};
        let row = |cluster, emphasis, preferred_mode, triggers: &str| RuleRow {
            cluster,
            emphasis,
            preferred_mode,
            triggers: triggers.to_string(),
        };
        RuleTable {
            rows: vec![
                row(
                    Cluster::HighStakesComplex,
                    [P, D, D],
                    PreferredMode::SystemToUser,
                    "High item value; extreme decision complexity",
                ),
                row(
                    Cluster::CrossCutting,
                    [S, S, S],
                    PreferredMode::MixedInitiative,
                    "Multi-criteria trade-offs; novelty seeking",
                ),
                row(
                    Cluster::HedonicLeisure,
                    [D, P, S],
                    PreferredMode::UserLedOrMixed,
                    "Visual novelty cues; trend-based browsing",
                ),
                row(
                    Cluster::AffectRichIdentity,
                    [S, S, P],
                    PreferredMode::GentleSystemInit,
                    "Emotional salience; expressed sentiment",
                ),
                row(
                    Cluster::SocialContextual,
                    [S, P, S],
                    PreferredMode::UserLedNudges,
                    "Occasion framing; group decision context",
                ),
                row(
                    Cluster::FunctionalPragmatic,
                    [P, D, D],
                    PreferredMode::SystemToUser,
                    "Specification comparison; expertise signals",
                ),
            ],
        }
    }
}

impl RuleTable {
    pub fn row(&self, cluster: Cluster) -> Option<&RuleRow> {
        self.rows.iter().find(|r| r.cluster == cluster)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        for c in Cluster::ALL {
            let n = self.rows.iter().filter(|r| r.cluster == c).count();
            if n != 1 {
                return Err(PolicyError::InvalidConfig(format!(
                    "expected exactly one row for cluster {c:?}, found {n}"
                )));
            }
        }
        Ok(())
    }
}

/// A fitted coefficient with its HDI bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub mean: f64,
    pub hdi_low: f64,
    pub hdi_high: f64,
}

impl Coefficient {
    /// Credible ⇔ the HDI excludes zero.
    pub fn credible(&self) -> bool {
        self.hdi_low > 0.0 || self.hdi_high < 0.0
    }

    fn validate(&self, name: &str) -> Result<(), PolicyError> {
        if !(self.hdi_low <= self.mean && self.mean <= self.hdi_high) {
            return Err(PolicyError::InvalidConfig(format!(
                "coefficient {name}: HDI bounds must bracket the mean"
            )));
        }
        Ok(())
    }
}

/// Numeric weights for the emphasis symbols. Must satisfy
/// primary > secondary > deemphasized, all in [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmphasisWeights {
    pub primary: f64,
    pub secondary: f64,
    pub deemphasized: f64,
}

impl Default for EmphasisWeights {
    fn default() -> Self {
        // The rule table is symbolic; these numeric defaults straddle the
        // 0.6-0.8 high-value band and are overridable via the priors.
        EmphasisWeights { primary: 0.85, secondary: 0.55, deemphasized: 0.25 }
    }
}

impl EmphasisWeights {
    fn weight(&self, e: Emphasis) -> f64 {
        match e {
            Emphasis::Primary => self.primary,
            Emphasis::Secondary => self.secondary,
            Emphasis::Deemphasized => self.deemphasized,
        }
    }
}

/// A per-domain gender override admitted during calibration. Gender is a
/// conditional modulator: it only acts where the calibration flagged the
/// specific (domain, aim) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderOverride {
    pub domain: Domain,
    pub aim: Aim,
    pub coefficient: Coefficient,
}

/// Per-domain per-aim intercept prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterceptPrior {
    pub domain: Domain,
    pub aim: Aim,
    pub coefficient: Coefficient,
}

/// Calibrated policy priors: emphasis numbers, the trait gain, admitted
/// global experience coefficients, conditional gender overrides, and
/// domain intercepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyPriors {
    pub emphasis: EmphasisWeights,
    /// Gain converting log-odds coefficients into weight deltas.
    pub trait_gain: f64,
    /// Global experience modulators, one per aim, present only when admitted.
    pub beta_exp: BTreeMap<Aim, Coefficient>,
    pub gender_overrides: Vec<GenderOverride>,
    pub intercepts: Vec<InterceptPrior>,
}

impl Default for PolicyPriors {
    fn default() -> Self {
        PolicyPriors {
            emphasis: EmphasisWeights::default(),
            trait_gain: 0.05,
            beta_exp: BTreeMap::new(),
            gender_overrides: Vec::new(),
            intercepts: Vec::new(),
        }
    }
}

impl PolicyPriors {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let e = &self.emphasis;
        let ordered = e.primary > e.secondary && e.secondary > e.deemphasized;
        let bounded = [e.primary, e.secondary, e.deemphasized]
            .iter()
            .all(|w| (0.0..=1.0).contains(w));
        if !ordered || !bounded {
            return Err(PolicyError::InvalidConfig(
                "emphasis weights must satisfy 1 >= primary > secondary > deemphasized >= 0"
                    .into(),
            ));
        }
        if !(self.trait_gain.is_finite() && self.trait_gain >= 0.0) {
            return Err(PolicyError::InvalidConfig("trait_gain must be non-negative".into()));
        }
        for (aim, c) in &self.beta_exp {
            c.validate(&format!("beta_exp[{aim}]"))?;
        }
        for o in &self.gender_overrides {
            o.coefficient.validate(&format!("gender[{}/{}]", o.domain, o.aim))?;
        }
        for i in &self.intercepts {
            i.coefficient.validate(&format!("intercept[{}/{}]", i.domain, i.aim))?;
        }
        Ok(())
    }
}

/// Pseudocode floors applied under a High item value, in aim order.
pub const VALUE_FLOORS: [f64; 3] = [0.8, 0.6, 0.7];

/// Layer 1: baseline weights and initiative from the cluster rule row.
pub fn base_weights(
    profile: &DomainProfile,
    rules: &RuleTable,
    priors: &PolicyPriors,
) -> Result<AimWeights, PolicyError> {
    let row = rules.row(profile.cluster).ok_or(PolicyError::MissingCluster(profile.cluster))?;
    Ok(AimWeights {
        w_edu: priors.emphasis.weight(row.emphasis[0]),
        w_exp: priors.emphasis.weight(row.emphasis[1]),
        w_aff: priors.emphasis.weight(row.emphasis[2]),
        initiative: row.preferred_mode.initiative(),
        // No autonomy item exists for the affective aim; affective
        // behaviours default to gentle system initiation throughout.
        affective_system_init: true,
    })
}

/// Layer 2: a High item value raises every weight to at least its
/// pseudocode floor. Never decreases a weight.
pub fn apply_value_modulation(mut weights: AimWeights, item_value: ItemValue) -> AimWeights {
    if item_value == ItemValue::High {
        for (aim, floor) in Aim::ALL.into_iter().zip(VALUE_FLOORS) {
            weights.set(aim, weights.get(aim).max(floor));
        }
    }
    weights
}

fn gender_code(gender: Gender) -> f64 {
    match gender {
        Gender::Female => 1.0,
        Gender::Male => -1.0,
        Gender::Other | Gender::Undisclosed => 0.0,
    }
}

/// Layer 3: trait modulation. Experience shifts every aim's weight by
/// δ = trait_gain · β_exp · (crs_experience − 3), clamped to [0,1]. Gender
/// acts only through per-domain override entries; age never modulates.
pub fn apply_trait_modulation(
    mut weights: AimWeights,
    traits: &UserTraits,
    domain: Domain,
    priors: &PolicyPriors,
) -> AimWeights {
    let centered = traits.crs_experience as f64 - 3.0;
    for aim in Aim::ALL {
        let mut delta = 0.0;
        if let Some(c) = priors.beta_exp.get(&aim) {
            delta += priors.trait_gain * c.mean * centered;
        }
        if let Some(o) = priors
            .gender_overrides
            .iter()
            .find(|o| o.domain == domain && o.aim == aim)
        {
            delta += priors.trait_gain * o.coefficient.mean * gender_code(traits.gender);
        }
        weights.set(aim, (weights.get(aim) + delta).clamp(0.0, 1.0));
    }
    weights
}

/// Layer 4: initiative from the autonomy midpoint band. Exception: under
/// High item value a SystemToUser baseline keeps at least Mixed
/// scaffolding instead of going fully user-led.
pub fn allocate_initiative(
    mut weights: AimWeights,
    autonomy: &AutonomyPref,
    item_value: ItemValue,
) -> AimWeights {
    let mean = autonomy.mean();
    let band = if mean > 3.0 {
        Initiative::UserLed
    } else if mean < 3.0 {
        Initiative::SystemLed
    } else {
        Initiative::Mixed
    };
    weights.initiative = if band == Initiative::UserLed
        && item_value == ItemValue::High
        && weights.initiative == Initiative::SystemLed
    {
        Initiative::Mixed
    } else {
        band
    };
    weights
}

/// The full policy π(s_t) → a_t: all four layers composed.
pub fn decide(
    state: &StateVector,
    rules: &RuleTable,
    priors: &PolicyPriors,
) -> Result<AimWeights, PolicyError> {
    let w = base_weights(&state.domain_profile, rules, priors)?;
    let w = apply_value_modulation(w, state.item_value);
    let w = apply_trait_modulation(w, &state.user_traits, state.domain_profile.domain, priors);
    Ok(allocate_initiative(w, &state.autonomy_pref, state.item_value))
}
