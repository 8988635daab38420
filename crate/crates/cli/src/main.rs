//! `rae` command-line front end: ingestion, hypothesis analysis,
//! calibration, policy queries, simulation, and report rendering.
//!
//! Exit codes are stable for scripting: 0 success, 2 input or usage
//! error, 3 computation error.

mod artifact;
mod ingest;
mod render;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use rae::core::{
    profile_for, validate_state, Aim, AutonomyPref, StateVector, UserTraits,
};
use rae::infer::McmcConfig;
use rae::pipeline::{calibrate, run_h1_h3, run_h4, run_h5, run_h6, AnalysisReport};
use rae::policy::{decide, PolicyPriors, RuleTable};
use rae::sim::{
    evaluate_flat_baseline, evaluate_policy, generate_population, PopulationSpec,
};

use artifact::{provenance_for, PriorsArtifact, Provenance};

#[derive(Parser)]
#[command(name = "rae", version, about = "Adaptation engine for conversational recommenders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run hypothesis analyses over a ratings CSV and write JSON reports.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated selector from h1..h6.
        #[arg(long, default_value = "h1,h2,h3,h4,h5,h6")]
        hypotheses: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
        /// Abort on the first malformed row instead of collecting errors.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        warmup: Option<usize>,
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Produce a priors artifact from raw data or existing reports.
    Calibrate {
        #[arg(long, conflicts_with = "reports")]
        input: Option<PathBuf>,
        /// Pre-computed report JSON files (h1_h3 and h5 required).
        #[arg(long, num_args = 1..)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        warmup: Option<usize>,
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Map a single state to aim weights on standard output.
    Policy {
        #[arg(long)]
        priors: Option<PathBuf>,
        /// Full state as a JSON file; overrides the individual flags.
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        domain: Option<String>,
        #[arg(long, default_value = "Low")]
        value: String,
        #[arg(long, default_value_t = 3)]
        experience: u8,
        /// Autonomy controls as "educative,explorative".
        #[arg(long, default_value = "3,3")]
        controls: String,
        #[arg(long, default_value = "Undisclosed")]
        gender: String,
        #[arg(long, default_value = "25-34")]
        age: String,
    },
    /// Generate a synthetic population and score policies against it.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        priors: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
        /// Also score the flat 0.5-weights baseline.
        #[arg(long)]
        compare_flat: bool,
    },
    /// Render any JSON artifact as aligned-column text tables.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

enum AppError {
    Input(String),
    Compute(String),
}

impl From<ingest::IngestError> for AppError {
    fn from(e: ingest::IngestError) -> Self {
        AppError::Input(e.to_string())
    }
}

impl From<artifact::ArtifactError> for AppError {
    fn from(e: artifact::ArtifactError) -> Self {
        AppError::Input(e.to_string())
    }
}

impl From<rae::pipeline::PipelineError> for AppError {
    fn from(e: rae::pipeline::PipelineError) -> Self {
        AppError::Compute(e.to_string())
    }
}

/// Optional defaults file pointed at by RAE_CONFIG.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigDefaults {
    chains: Option<usize>,
    warmup_draws: Option<usize>,
    post_warmup_draws: Option<usize>,
    seed: Option<u64>,
    target_accept: Option<f64>,
    hdi_mass: Option<f64>,
}

fn load_defaults() -> Result<ConfigDefaults, AppError> {
    let Some(path) = std::env::var_os("RAE_CONFIG") else {
        return Ok(ConfigDefaults::default());
    };
    let path = PathBuf::from(path);
    let text = fs::read_to_string(&path)
        .map_err(|e| AppError::Input(format!("cannot read RAE_CONFIG {}: {e}", path.display())))?;
    let is_yaml = matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("yaml") | Some("yml")
    );
    let parsed = if is_yaml {
        serde_yaml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| AppError::Input(format!("invalid RAE_CONFIG {}: {e}", path.display())))
}

fn mcmc_config(
    defaults: &ConfigDefaults,
    chains: Option<usize>,
    warmup: Option<usize>,
    draws: Option<usize>,
    seed: Option<u64>,
) -> McmcConfig {
    let base = McmcConfig::default();
    McmcConfig {
        chains: chains.or(defaults.chains).unwrap_or(base.chains),
        warmup_draws: warmup.or(defaults.warmup_draws).unwrap_or(base.warmup_draws),
        post_warmup_draws: draws
            .or(defaults.post_warmup_draws)
            .unwrap_or(base.post_warmup_draws),
        seed: seed.or(defaults.seed).unwrap_or(base.seed),
        target_accept: defaults.target_accept.unwrap_or(base.target_accept),
        prior_scale: base.prior_scale,
        hdi_mass: defaults.hdi_mass.unwrap_or(base.hdi_mass),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), AppError> {
    let mut json = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::Compute(format!("serialization failed: {e}")))?;
    json.push('\n');
    fs::write(path, json)
        .map_err(|e| AppError::Input(format!("cannot write {}: {e}", path.display())))
}

fn aim_for_token(token: &str) -> Option<Aim> {
    match token {
        "h1" => Some(Aim::Educative),
        "h2" => Some(Aim::Explorative),
        "h3" => Some(Aim::Affective),
        _ => None,
    }
}

fn filter_by_aim(report: &AnalysisReport, aim: Aim, id: &str) -> AnalysisReport {
    let mut r = report.clone();
    r.hypothesis = id.to_string();
    r.omnibus.retain(|t| t.aim == aim);
    r.mean_ranks.retain(|m| m.aim == aim);
    r.pairwise.retain(|p| p.aim == aim);
    r.coefficients.retain(|c| c.aim == Some(aim));
    r.correlations.retain(|c| c.aim == aim);
    r.frame_distribution.retain(|d| d.aim == aim);
    r
}

fn cmd_analyze(
    input: &Path,
    hypotheses: &str,
    seed: Option<u64>,
    output_dir: &Path,
    strict: bool,
    chains: Option<usize>,
    warmup: Option<usize>,
    draws: Option<usize>,
) -> Result<(), AppError> {
    let tokens: Vec<String> =
        hypotheses.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect();
    let valid: BTreeSet<&str> = ["h1", "h2", "h3", "h4", "h5", "h6"].into();
    for t in &tokens {
        if !valid.contains(t.as_str()) {
            return Err(AppError::Input(format!(
                "unknown hypothesis {t:?} (expected h1..h6)"
            )));
        }
    }
    let records = ingest::ingest(input, strict)?;
    let defaults = load_defaults()?;
    let mcmc = mcmc_config(&defaults, chains, warmup, draws, seed);
    fs::create_dir_all(output_dir)
        .map_err(|e| AppError::Input(format!("cannot create {}: {e}", output_dir.display())))?;

    let needs_family = tokens.iter().any(|t| aim_for_token(t).is_some());
    let family = if needs_family { Some(run_h1_h3(&records, &mcmc)?) } else { None };

    for t in &tokens {
        let report = if let Some(aim) = aim_for_token(t) {
            filter_by_aim(family.as_ref().unwrap(), aim, t)
        } else {
            match t.as_str() {
                "h4" => run_h4(&records)?,
                "h5" => run_h5(&records, &mcmc)?,
                "h6" => run_h6(&records, &mcmc)?,
                _ => unreachable!(),
            }
        };
        write_json(&output_dir.join(format!("{t}.json")), &report)?;
    }
    Ok(())
}

fn cmd_calibrate(
    input: Option<&Path>,
    report_paths: &[PathBuf],
    output: &Path,
    seed: Option<u64>,
    strict: bool,
    chains: Option<usize>,
    warmup: Option<usize>,
    draws: Option<usize>,
) -> Result<(), AppError> {
    let defaults = load_defaults()?;
    let mcmc = mcmc_config(&defaults, chains, warmup, draws, seed);

    let (priors, provenance) = if !report_paths.is_empty() {
        let mut reports = Vec::new();
        let mut hasher = <sha2::Sha256 as sha2::Digest>::new();
        let mut mtime = 0u64;
        for path in report_paths {
            let bytes = fs::read(path).map_err(|e| {
                AppError::Input(format!("missing report {}: {e}", path.display()))
            })?;
            let report: AnalysisReport = serde_json::from_slice(&bytes).map_err(|e| {
                AppError::Input(format!("missing report {}: not a valid report ({e})", path.display()))
            })?;
            sha2::Digest::update(&mut hasher, &bytes);
            mtime = mtime.max(
                fs::metadata(path)
                    .ok()
                    .and_then(|m| m.modified().ok())
                    .and_then(|t| t.duration_since(std::time::UNIX_EPOCH).ok())
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            );
            reports.push(report);
        }
        let priors = calibrate(&reports)?;
        let provenance = Provenance {
            input_sha256: format!("{:x}", sha2::Digest::finalize(hasher)),
            seed: mcmc.seed,
            input_mtime_unix: mtime,
        };
        (priors, provenance)
    } else {
        let input = input.ok_or_else(|| {
            AppError::Input("calibrate needs --input or --reports".to_string())
        })?;
        let records = ingest::ingest(input, strict)?;
        let h1_h3 = run_h1_h3(&records, &mcmc)?;
        let h5 = run_h5(&records, &mcmc)?;
        let priors = calibrate(&[h1_h3, h5])?;
        (priors, provenance_for(input, mcmc.seed)?)
    };

    PriorsArtifact::from_priors(priors, provenance).save(output)?;
    Ok(())
}

fn load_policy_inputs(
    priors_path: Option<&Path>,
) -> Result<(RuleTable, PolicyPriors), AppError> {
    match priors_path {
        Some(path) => {
            let artifact = PriorsArtifact::load(path)?;
            Ok((artifact.rule_table(), artifact.to_policy_priors()))
        }
        None => Ok((RuleTable::default(), PolicyPriors::default())),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_policy(
    priors: Option<&Path>,
    state_path: Option<&Path>,
    domain: Option<&str>,
    value: &str,
    experience: u8,
    controls: &str,
    gender: &str,
    age: &str,
) -> Result<(), AppError> {
    let (rules, policy_priors) = load_policy_inputs(priors)?;

    let state: StateVector = if let Some(path) = state_path {
        let text = fs::read_to_string(path)
            .map_err(|e| AppError::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| AppError::Input(format!("invalid state {}: {e}", path.display())))?
    } else {
        let domain = domain
            .ok_or_else(|| AppError::Input("--domain is required without --state".into()))?
            .parse()
            .map_err(|e| AppError::Input(format!("{e}")))?;
        let (edu, exp) = controls
            .split_once(',')
            .ok_or_else(|| AppError::Input("--controls expects \"edu,exp\"".into()))?;
        let parse_ctrl = |s: &str| {
            s.trim()
                .parse::<u8>()
                .map_err(|_| AppError::Input(format!("invalid control value {s:?}")))
        };
        StateVector {
            domain_profile: profile_for(domain),
            item_value: value.parse().map_err(|e| AppError::Input(format!("{e}")))?,
            user_traits: UserTraits {
                crs_experience: experience,
                gender: gender.parse().map_err(|e| AppError::Input(format!("{e}")))?,
                age_group: age.parse().map_err(|e| AppError::Input(format!("{e}")))?,
            },
            autonomy_pref: AutonomyPref {
                educative_control: parse_ctrl(edu)?,
                explorative_control: parse_ctrl(exp)?,
            },
            history: vec![],
        }
    };
    let state = validate_state(state).map_err(|e| AppError::Input(e.to_string()))?;
    let weights =
        decide(&state, &rules, &policy_priors).map_err(|e| AppError::Compute(e.to_string()))?;
    println!(
        "{}",
        serde_json::to_string(&weights)
            .map_err(|e| AppError::Compute(format!("serialization failed: {e}")))?
    );
    Ok(())
}

fn cmd_simulate(
    spec_path: &Path,
    priors: Option<&Path>,
    seed: Option<u64>,
    output_dir: &Path,
    compare_flat: bool,
) -> Result<(), AppError> {
    let text = fs::read_to_string(spec_path)
        .map_err(|e| AppError::Input(format!("cannot read {}: {e}", spec_path.display())))?;
    let is_yaml = matches!(
        spec_path.extension().and_then(|e| e.to_str()),
        Some("yaml") | Some("yml")
    );
    let mut spec: PopulationSpec = if is_yaml {
        serde_yaml::from_str(&text)
            .map_err(|e| AppError::Input(format!("invalid spec {}: {e}", spec_path.display())))?
    } else {
        serde_json::from_str(&text)
            .map_err(|e| AppError::Input(format!("invalid spec {}: {e}", spec_path.display())))?
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate().map_err(|e| AppError::Input(e.to_string()))?;

    fs::create_dir_all(output_dir)
        .map_err(|e| AppError::Input(format!("cannot create {}: {e}", output_dir.display())))?;
    let records =
        generate_population(&spec).map_err(|e| AppError::Compute(e.to_string()))?;
    let records_path = output_dir.join("records.csv");
    ingest::write_records_csv(&records_path, &records)
        .map_err(|e| AppError::Input(format!("cannot write {}: {e}", records_path.display())))?;

    let (rules, policy_priors) = load_policy_inputs(priors)?;
    let score = evaluate_policy(&rules, &policy_priors, &spec)
        .map_err(|e| AppError::Compute(e.to_string()))?;
    write_json(&output_dir.join("alignment.json"), &score)?;
    if compare_flat {
        let flat =
            evaluate_flat_baseline(&spec).map_err(|e| AppError::Compute(e.to_string()))?;
        write_json(&output_dir.join("alignment_flat.json"), &flat)?;
    }
    Ok(())
}

fn cmd_report(input: &Path) -> Result<(), AppError> {
    let text = fs::read_to_string(input)
        .map_err(|e| AppError::Input(format!("cannot read {}: {e}", input.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| AppError::Input(format!("invalid JSON {}: {e}", input.display())))?;

    let rendered = if value.get("schema_version").is_some() {
        render::render_priors(&PriorsArtifact::load(input)?)
    } else if value.get("hypothesis").is_some() {
        let report: AnalysisReport = serde_json::from_value(value)
            .map_err(|e| AppError::Input(format!("invalid report: {e}")))?;
        render::render_report(&report)
    } else if value.get("per_aim_gap").is_some() {
        let score: rae::sim::AlignmentScore = serde_json::from_value(value)
            .map_err(|e| AppError::Input(format!("invalid alignment score: {e}")))?;
        render::render_alignment(&score)
    } else if value.get("w_edu").is_some() {
        let weights: rae::core::AimWeights = serde_json::from_value(value)
            .map_err(|e| AppError::Input(format!("invalid weight record: {e}")))?;
        render::render_weights(&weights)
    } else {
        return Err(AppError::Input(format!(
            "unrecognized artifact {}: expected a priors artifact, report, alignment score, \
             or weight record",
            input.display()
        )));
    };
    print!("{rendered}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Analyze {
            input,
            hypotheses,
            seed,
            output_dir,
            strict,
            chains,
            warmup,
            draws,
        } => cmd_analyze(&input, &hypotheses, seed, &output_dir, strict, chains, warmup, draws),
        Command::Calibrate {
            input,
            reports,
            output,
            seed,
            strict,
            chains,
            warmup,
            draws,
        } => cmd_calibrate(
            input.as_deref(),
            &reports,
            &output,
            seed,
            strict,
            chains,
            warmup,
            draws,
        ),
        Command::Policy {
            priors,
            state,
            domain,
            value,
            experience,
            controls,
            gender,
            age,
        } => cmd_policy(
            priors.as_deref(),
            state.as_deref(),
            domain.as_deref(),
            &value,
            experience,
            &controls,
            &gender,
            &age,
        ),
        Command::Simulate { spec, priors, seed, output_dir, compare_flat } => {
            cmd_simulate(&spec, priors.as_deref(), seed, &output_dir, compare_flat)
        }
        Command::Report { input } => cmd_report(&input),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(AppError::Input(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(AppError::Compute(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(3);
        }
    }
}
