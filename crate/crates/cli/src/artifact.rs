//! The priors artifact: the serialized bridge between calibration and the
//! runtime policy, with provenance for reproducibility audits.
//!
//! The artifact is deterministic for a given (input, seed): the provenance
//! timestamp is taken from the input file's modification time rather than
//! the wall clock, so re-running calibration on unchanged inputs yields a
//! byte-identical file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use rae::core::Aim;
use rae::policy::{Coefficient, EmphasisWeights, GenderOverride, InterceptPrior, PolicyPriors, RuleTable};

pub const SCHEMA_VERSION: &str = "rae-priors/1";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid priors artifact {path}: {reason}")]
    Invalid { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    /// SHA-256 of the calibration input bytes.
    pub input_sha256: String,
    pub seed: u64,
    /// Input file modification time, seconds since the Unix epoch.
    pub input_mtime_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorsArtifact {
    pub schema_version: String,
    pub emphasis_map: EmphasisWeights,
    pub trait_gain: f64,
    pub beta_exp: BTreeMap<Aim, Coefficient>,
    pub gender_overrides: Vec<GenderOverride>,
    pub intercepts: Vec<InterceptPrior>,
    /// Optional replacement for the shipped rule table.
    pub rule_table: Option<RuleTable>,
    pub provenance: Provenance,
}

impl PriorsArtifact {
    pub fn from_priors(priors: PolicyPriors, provenance: Provenance) -> Self {
        PriorsArtifact {
            schema_version: SCHEMA_VERSION.to_string(),
            emphasis_map: priors.emphasis,
            trait_gain: priors.trait_gain,
            beta_exp: priors.beta_exp,
            gender_overrides: priors.gender_overrides,
            intercepts: priors.intercepts,
            rule_table: None,
            provenance,
        }
    }

    pub fn to_policy_priors(&self) -> PolicyPriors {
        PolicyPriors {
            emphasis: self.emphasis_map,
            trait_gain: self.trait_gain,
            beta_exp: self.beta_exp.clone(),
            gender_overrides: self.gender_overrides.clone(),
            intercepts: self.intercepts.clone(),
        }
    }

    pub fn rule_table(&self) -> RuleTable {
        self.rule_table.clone().unwrap_or_default()
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        let bytes = fs::read(path).map_err(|source| ArtifactError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let artifact: PriorsArtifact =
            serde_json::from_slice(&bytes).map_err(|e| ArtifactError::Invalid {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
        if artifact.schema_version != SCHEMA_VERSION {
            return Err(ArtifactError::Invalid {
                path: path.display().to_string(),
                reason: format!(
                    "unsupported schema_version {:?} (expected {SCHEMA_VERSION:?})",
                    artifact.schema_version
                ),
            });
        }
        artifact.to_policy_priors().validate().map_err(|e| ArtifactError::Invalid {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        if let Some(rules) = &artifact.rule_table {
            rules.validate().map_err(|e| ArtifactError::Invalid {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
        }
        Ok(artifact)
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        let mut json = serde_json::to_string_pretty(self).expect("artifact serializes");
        json.push('\n');
        fs::write(path, json).map_err(|source| ArtifactError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Provenance for a calibration input file.
pub fn provenance_for(path: &Path, seed: u64) -> Result<Provenance, ArtifactError> {
    let bytes = fs::read(path).map_err(|source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let meta = fs::metadata(path).map_err(|source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mtime = meta
        .modified()
        .ok()
        .and_then(|t| t.duration_since(std::time::UNIX_EPOCH).ok())
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(Provenance {
        input_sha256: format!("{:x}", hasher.finalize()),
        seed,
        input_mtime_unix: mtime,
    })
}
