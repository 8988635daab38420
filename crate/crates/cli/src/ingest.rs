//! CSV ingestion against the fixed rating-record schema.
//!
//! The header must match [`HEADER`] byte for byte. Row-level problems are
//! collected with 1-based line numbers; strict mode aborts on the first
//! one. Empty autonomy columns mean "not collected" and must be empty
//! together.

use std::fs::File;
use std::path::Path;

use thiserror::Error;

use rae::core::{validate_record, AutonomyPref, RatingRecord, UserTraits};

pub const HEADER: &str = "participant_id,domain,aim,value_frame,rating,age_group,gender,\
                          crs_experience,autonomy_edu,autonomy_exp";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema mismatch: expected header {expected:?}, found {found:?}")]
    SchemaMismatch { expected: String, found: String },
    #[error("{}", format_rows(.0))]
    Rows(Vec<(usize, String)>),
}

fn format_rows(rows: &[(usize, String)]) -> String {
    let lines: Vec<String> =
        rows.iter().map(|(line, msg)| format!("line {line}: {msg}")).collect();
    lines.join("\n")
}

fn parse_row(fields: &csv::StringRecord) -> Result<RatingRecord, String> {
    let get = |i: usize| fields.get(i).unwrap_or("");
    if get(0).is_empty() {
        return Err("participant_id is empty".into());
    }
    let domain = get(1).parse().map_err(|e| format!("{e}"))?;
    let aim = get(2).parse().map_err(|e| format!("{e}"))?;
    let value_frame = get(3).parse().map_err(|e| format!("{e}"))?;
    let rating: u8 = get(4).parse().map_err(|_| format!("invalid rating {:?}", get(4)))?;
    let age_group = get(5).parse().map_err(|e| format!("{e}"))?;
    let gender = get(6).parse().map_err(|e| format!("{e}"))?;
    let crs_experience: u8 =
        get(7).parse().map_err(|_| format!("invalid crs_experience {:?}", get(7)))?;
    let autonomy = match (get(8), get(9)) {
        ("", "") => None,
        ("", _) | (_, "") => {
            return Err("autonomy_edu and autonomy_exp must be both present or both empty".into())
        }
        (e, x) => Some(AutonomyPref {
            educative_control: e
                .parse()
                .map_err(|_| format!("invalid autonomy_edu {e:?}"))?,
            explorative_control: x
                .parse()
                .map_err(|_| format!("invalid autonomy_exp {x:?}"))?,
        }),
    };
    let record = RatingRecord {
        participant_id: get(0).to_string(),
        domain,
        aim,
        value_frame,
        rating,
        traits: UserTraits { crs_experience, gender, age_group },
        autonomy,
    };
    validate_record(&record).map_err(|e| e.to_string())?;
    Ok(record)
}

/// Read and validate a ratings CSV.
pub fn ingest(path: &Path, strict: bool) -> Result<Vec<RatingRecord>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);

    let found = reader
        .headers()
        .map_err(|e| IngestError::SchemaMismatch {
            expected: HEADER.to_string(),
            found: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != HEADER {
        return Err(IngestError::SchemaMismatch { expected: HEADER.to_string(), found });
    }

    let mut records = Vec::new();
    let mut errors: Vec<(usize, String)> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let outcome = match row {
            Ok(fields) if fields.len() == 10 => parse_row(&fields),
            Ok(fields) => Err(format!("expected 10 fields, found {}", fields.len())),
            Err(e) => Err(e.to_string()),
        };
        match outcome {
            Ok(r) => records.push(r),
            Err(msg) => {
                errors.push((line, msg));
                if strict {
                    return Err(IngestError::Rows(errors));
                }
            }
        }
    }
    if errors.is_empty() {
        Ok(records)
    } else {
        Err(IngestError::Rows(errors))
    }
}

/// Write records in the same schema `ingest` reads.
pub fn write_records_csv(path: &Path, records: &[RatingRecord]) -> std::io::Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(File::create(path)?);
    writeln!(out, "{HEADER}")?;
    for r in records {
        let (edu, exp) = match &r.autonomy {
            Some(a) => (a.educative_control.to_string(), a.explorative_control.to_string()),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.participant_id,
            r.domain,
            r.aim,
            r.value_frame.as_str(),
            r.rating,
            r.traits.age_group.as_str(),
            r.traits.gender.as_str(),
            r.traits.crs_experience,
            edu,
            exp
        )?;
    }
    out.flush()
}
