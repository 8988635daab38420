//! Shared domain types: state vectors, aim weights, rating records, and the
//! enumerations for domains, aims, traits, and clusters.
//!
//! Everything here is an immutable value type, safe to share across threads.

use std::fmt;
use std::str::FromStr;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("unknown domain: {0:?}")]
    UnknownDomain(String),
    #[error("invalid rating for {field}: {value} (expected 1..=5)")]
    InvalidRating { field: &'static str, value: i64 },
    #[error("unknown token for {field}: {value:?}")]
    UnknownToken { field: &'static str, value: String },
}

/// The ten study domains. Parsing any other string is an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Domain {
    Apparel,
    Beauty,
    Entertainment,
    Tech,
    Dining,
    Wellness,
    Travel,
    Education,
    Finance,
    Housing,
}

impl Domain {
    pub const ALL: [Domain; 10] = [
        Domain::Apparel,
        Domain::Beauty,
        Domain::Entertainment,
        Domain::Tech,
        Domain::Dining,
        Domain::Wellness,
        Domain::Travel,
        Domain::Education,
        Domain::Finance,
        Domain::Housing,
    ];

    /// Stable index into [`Domain::ALL`].
    pub fn index(self) -> usize {
        Domain::ALL.iter().position(|d| *d == self).unwrap()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Apparel => "Apparel",
            Domain::Beauty => "Beauty",
            Domain::Entertainment => "Entertainment",
            Domain::Tech => "Tech",
            Domain::Dining => "Dining",
            Domain::Wellness => "Wellness",
            Domain::Travel => "Travel",
            Domain::Education => "Education",
            Domain::Finance => "Finance",
            Domain::Housing => "Housing",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Domain::ALL
            .iter()
            .copied()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| CoreError::UnknownDomain(s.to_string()))
    }
}

/// The three experiential interaction aims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Aim {
    Educative,
    Explorative,
    Affective,
}

impl Aim {
    pub const ALL: [Aim; 3] = [Aim::Educative, Aim::Explorative, Aim::Affective];

    pub fn index(self) -> usize {
        match self {
            Aim::Educative => 0,
            Aim::Explorative => 1,
            Aim::Affective => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Aim::Educative => "Educative",
            Aim::Explorative => "Explorative",
            Aim::Affective => "Affective",
        }
    }
}

impl fmt::Display for Aim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aim {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Aim::ALL
            .iter()
            .copied()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| CoreError::UnknownToken { field: "aim", value: s.to_string() })
    }
}

/// Ordinal salience level used in domain profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    Low,
    Medium,
    High,
}

/// Functional domain clusters driving the rule table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Cluster {
    HighStakesComplex,
    CrossCutting,
    HedonicLeisure,
    AffectRichIdentity,
    SocialContextual,
    FunctionalPragmatic,
}

impl Cluster {
    pub const ALL: [Cluster; 6] = [
        Cluster::HighStakesComplex,
        Cluster::CrossCutting,
        Cluster::HedonicLeisure,
        Cluster::AffectRichIdentity,
        Cluster::SocialContextual,
        Cluster::FunctionalPragmatic,
    ];
}

/// A domain's ordinal levels of complexity, novelty orientation, and
/// emotional salience, plus its functional cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainProfile {
    pub domain: Domain,
    pub complexity: Level,
    pub novelty_orientation: Level,
    pub emotional_salience: Level,
    pub cluster: Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
    Other,
    Undisclosed,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "Female",
            Gender::Male => "Male",
            Gender::Other => "Other",
            Gender::Undisclosed => "Undisclosed",
        }
    }
}

impl FromStr for Gender {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Female" => Ok(Gender::Female),
            "Male" => Ok(Gender::Male),
            "Other" => Ok(Gender::Other),
            "Undisclosed" => Ok(Gender::Undisclosed),
            _ => Err(CoreError::UnknownToken { field: "gender", value: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeGroup {
    A18_24,
    A25_34,
    A35_44,
    A45_54,
    A55_64,
    A65Plus,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; 6] = [
        AgeGroup::A18_24,
        AgeGroup::A25_34,
        AgeGroup::A35_44,
        AgeGroup::A45_54,
        AgeGroup::A55_64,
        AgeGroup::A65Plus,
    ];

    /// 0-based ordinal code, 18-24 first.
    pub fn code(self) -> usize {
        AgeGroup::ALL.iter().position(|a| *a == self).unwrap()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgeGroup::A18_24 => "18-24",
            AgeGroup::A25_34 => "25-34",
            AgeGroup::A35_44 => "35-44",
            AgeGroup::A45_54 => "45-54",
            AgeGroup::A55_64 => "55-64",
            AgeGroup::A65Plus => "65+",
        }
    }
}

impl FromStr for AgeGroup {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgeGroup::ALL
            .iter()
            .copied()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| CoreError::UnknownToken { field: "age_group", value: s.to_string() })
    }
}

/// Persistent user traits carried in the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserTraits {
    /// Prior system experience on a 1-5 frequency scale.
    pub crs_experience: u8,
    pub gender: Gender,
    pub age_group: AgeGroup,
}

/// Dialogue-control preference, 1 = fully system-initiated, 5 = fully
/// user-initiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutonomyPref {
    pub educative_control: u8,
    pub explorative_control: u8,
}

impl AutonomyPref {
    pub fn mean(&self) -> f64 {
        (self.educative_control as f64 + self.explorative_control as f64) / 2.0
    }
}

/// Situational stakes frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ItemValue {
    Low,
    High,
}

impl ItemValue {
    pub fn as_str(self) -> &'static str {
        match self {
            ItemValue::Low => "Low",
            ItemValue::High => "High",
        }
    }
}

impl fmt::Display for ItemValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ItemValue {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Low" => Ok(ItemValue::Low),
            "High" => Ok(ItemValue::High),
            _ => Err(CoreError::UnknownToken { field: "value_frame", value: s.to_string() }),
        }
    }
}

/// Runtime conversational state fed to the policy.
///
/// `history` is carried but never interpreted; no rule currently consumes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub domain_profile: DomainProfile,
    pub item_value: ItemValue,
    pub user_traits: UserTraits,
    pub autonomy_pref: AutonomyPref,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<u8>,
}

/// Conversational initiative mode emitted alongside the aim weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Initiative {
    SystemLed,
    Mixed,
    UserLed,
}

/// Policy output: per-aim intensities in [0,1] plus an initiative mode.
///
/// The weights are independent intensities, not a simplex; they need not
/// sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AimWeights {
    pub w_edu: f64,
    pub w_exp: f64,
    pub w_aff: f64,
    pub initiative: Initiative,
    /// Affective behaviours default to gentle system initiation; there is no
    /// autonomy item for the affective aim, so this is tracked separately
    /// from `initiative`.
    pub affective_system_init: bool,
}

impl AimWeights {
    pub fn get(&self, aim: Aim) -> f64 {
        match aim {
            Aim::Educative => self.w_edu,
            Aim::Explorative => self.w_exp,
            Aim::Affective => self.w_aff,
        }
    }

    pub fn set(&mut self, aim: Aim, w: f64) {
        match aim {
            Aim::Educative => self.w_edu = w,
            Aim::Explorative => self.w_exp = w,
            Aim::Affective => self.w_aff = w,
        }
    }

    /// Normalized ternary blend coordinates w_i / sum(w); `None` when all
    /// three weights are zero.
    pub fn ternary(&self) -> Option<[f64; 3]> {
        let s = self.w_edu + self.w_exp + self.w_aff;
        if s > 0.0 {
            Some([self.w_edu / s, self.w_exp / s, self.w_aff / s])
        } else {
            None
        }
    }
}

/// One participant x domain x aim x value-frame ordinal rating with covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub participant_id: String,
    pub domain: Domain,
    pub aim: Aim,
    pub value_frame: ItemValue,
    pub rating: u8,
    pub traits: UserTraits,
    pub autonomy: Option<AutonomyPref>,
}

#[derive(Deserialize)]
struct ProfileTable {
    #[allow(dead_code)]
    notes: String,
    profiles: Vec<DomainProfile>,
}

static DEFAULT_PROFILES: Lazy<Vec<DomainProfile>> = Lazy::new(|| {
    let table: ProfileTable =
        serde_json::from_str(include_str!("../data/default_profiles.json"))
            .expect("shipped profile table is valid");
    assert_eq!(table.profiles.len(), Domain::ALL.len());
    table.profiles
});

/// The shipped default profile table: ten profiles, one per domain.
pub fn default_profiles() -> &'static [DomainProfile] {
    &DEFAULT_PROFILES
}

/// Look up a domain's shipped default profile.
pub fn profile_for(domain: Domain) -> DomainProfile {
    DEFAULT_PROFILES
        .iter()
        .copied()
        .find(|p| p.domain == domain)
        .expect("every domain has a default profile")
}

fn check_ordinal(field: &'static str, value: u8) -> Result<(), CoreError> {
    if (1..=5).contains(&value) {
        Ok(())
    } else {
        Err(CoreError::InvalidRating { field, value: value as i64 })
    }
}

/// Validate all state invariants and return the state unchanged.
pub fn validate_state(state: StateVector) -> Result<StateVector, CoreError> {
    check_ordinal("crs_experience", state.user_traits.crs_experience)?;
    check_ordinal("educative_control", state.autonomy_pref.educative_control)?;
    check_ordinal("explorative_control", state.autonomy_pref.explorative_control)?;
    Ok(state)
}

/// Validate a rating record's ordinal fields.
pub fn validate_record(record: &RatingRecord) -> Result<(), CoreError> {
    check_ordinal("rating", record.rating)?;
    check_ordinal("crs_experience", record.traits.crs_experience)?;
    if let Some(a) = &record.autonomy {
        check_ordinal("educative_control", a.educative_control)?;
        check_ordinal("explorative_control", a.explorative_control)?;
    }
    Ok(())
}
