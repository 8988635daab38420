//! Hypothesis runners over ingested rating data, plus the calibration step
//! that converts analysis reports into policy priors.
//!
//! Each runner produces a machine-readable [`AnalysisReport`]; unused
//! sections stay empty. Domain-block analyses (the omnibus/correlation
//! screens and the pooled trait fits) use the Low-frame rows as the
//! baseline block so the value manipulation does not contaminate them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{Aim, AgeGroup, Domain, Gender, ItemValue, RatingRecord};
use crate::infer::{fit, FitResult, InferError, McmcConfig};
use crate::ordinal::{odds_ratio_inverted, Covariates};
use crate::policy::{Coefficient, GenderOverride, InterceptPrior, PolicyPriors};
use crate::stats::{
    benjamini_hochberg, kruskal_wallis, mann_whitney_u, spearman,
    wilcoxon_signed_rank, StatsError, TestResult, WilcoxonMode,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("participant {participant} lacks a {frame} frame for {domain}/{aim}")]
    MissingPair { participant: String, domain: Domain, aim: Aim, frame: ItemValue },
    #[error("missing report: {0}")]
    MissingReport(String),
    #[error("too few participants with autonomy data: {0} (need at least 10)")]
    TooFewParticipants(usize),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Infer(#[from] InferError),
}

/// An omnibus or one-sample test outcome for one aim. Degenerate inputs
/// (all ties, constant columns) are recorded rather than aborting the
/// sibling aims.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AimTest {
    pub aim: Aim,
    pub label: String,
    pub result: Option<TestResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanRankRow {
    pub aim: Aim,
    pub domain: Domain,
    pub mean_rank: f64,
}

/// One Bonferroni-adjusted pairwise Mann-Whitney comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub aim: Aim,
    pub domain_a: Domain,
    pub domain_b: Domain,
    pub p_adjusted: f64,
    pub effect_r: f64,
}

/// Posterior summary attached to a report, with the credible flag
/// (HDI excludes zero).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BayesSummary {
    pub name: String,
    pub aim: Option<Aim>,
    pub domain: Option<Domain>,
    pub mean: f64,
    pub hdi_low: f64,
    pub hdi_high: f64,
    pub credible: bool,
    pub rhat: f64,
    pub ess_bulk: f64,
}

/// One cell of the exploratory correlation screen.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub predictor: String,
    pub domain: Domain,
    pub aim: Aim,
    pub rho: Option<f64>,
    pub p_raw: Option<f64>,
    pub p_adjusted: Option<f64>,
    pub significant: bool,
    pub error: Option<String>,
}

/// Percentage of ratings per category for one aim x frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameDistribution {
    pub aim: Aim,
    pub frame: ItemValue,
    pub percent: [f64; 5],
}

/// Machine-readable output of one hypothesis runner. Sections that do not
/// apply to a given hypothesis are empty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub hypothesis: String,
    pub effective_n: usize,
    pub omnibus: Vec<AimTest>,
    pub mean_ranks: Vec<MeanRankRow>,
    pub pairwise: Vec<PairwiseRow>,
    pub coefficients: Vec<BayesSummary>,
    pub correlations: Vec<CorrelationCell>,
    pub frame_distribution: Vec<FrameDistribution>,
    pub odds_ratios: Vec<(String, f64)>,
}

impl AnalysisReport {
    fn empty(hypothesis: &str) -> Self {
        AnalysisReport {
            hypothesis: hypothesis.to_string(),
            effective_n: 0,
            omnibus: vec![],
            mean_ranks: vec![],
            pairwise: vec![],
            coefficients: vec![],
            correlations: vec![],
            frame_distribution: vec![],
            odds_ratios: vec![],
        }
    }
}

fn baseline_rows(records: &[RatingRecord]) -> Vec<&RatingRecord> {
    records.iter().filter(|r| r.value_frame == ItemValue::Low).collect()
}

fn summaries_from_fit(fit: &FitResult, aim: Aim) -> Vec<BayesSummary> {
    fit.summaries
        .iter()
        .map(|s| {
            let domain = s
                .name
                .strip_prefix("alpha[")
                .and_then(|rest| rest.strip_suffix(']'))
                .and_then(|d| d.parse::<Domain>().ok());
            BayesSummary {
                name: format!("{}:{}", aim, s.name),
                aim: Some(aim),
                domain,
                mean: s.mean,
                hdi_low: s.hdi_low,
                hdi_high: s.hdi_high,
                credible: s.hdi_low > 0.0 || s.hdi_high < 0.0,
                rhat: s.rhat,
                ess_bulk: s.ess_bulk,
            }
        })
        .collect()
}

/// H1-H3: per-aim domain differences. Kruskal-Wallis omnibus with mean
/// ranks, Bonferroni-adjusted pairwise Mann-Whitney comparisons (summary
/// filtered at r >= 0.20), and a hierarchical ordinal fit with domain
/// intercepts.
pub fn run_h1_h3(
    records: &[RatingRecord],
    mcmc: &McmcConfig,
) -> Result<AnalysisReport, PipelineError> {
    let rows = baseline_rows(records);
    let mut report = AnalysisReport::empty("h1_h3");
    report.effective_n = rows.len();
    let group_names: Vec<String> = Domain::ALL.iter().map(|d| d.to_string()).collect();

    for aim in Aim::ALL {
        // group ratings by domain, skipping domains without data
        let mut present: Vec<(Domain, Vec<f64>)> = Vec::new();
        for domain in Domain::ALL {
            let g: Vec<f64> = rows
                .iter()
                .filter(|r| r.aim == aim && r.domain == domain)
                .map(|r| r.rating as f64)
                .collect();
            if !g.is_empty() {
                present.push((domain, g));
            }
        }
        let groups: Vec<Vec<f64>> = present.iter().map(|(_, g)| g.clone()).collect();
        match kruskal_wallis(&groups) {
            Ok(kw) => {
                if let Some(ranks) = &kw.mean_ranks {
                    for ((domain, _), rank) in present.iter().zip(ranks) {
                        report.mean_ranks.push(MeanRankRow {
                            aim,
                            domain: *domain,
                            mean_rank: *rank,
                        });
                    }
                }
                report.omnibus.push(AimTest {
                    aim,
                    label: "kruskal_wallis".into(),
                    result: Some(kw),
                    error: None,
                });
            }
            Err(e) => report.omnibus.push(AimTest {
                aim,
                label: "kruskal_wallis".into(),
                result: None,
                error: Some(e.to_string()),
            }),
        }

        // all pairwise comparisons, Bonferroni over the tested pairs
        let n_pairs = present.len() * (present.len().saturating_sub(1)) / 2;
        for i in 0..present.len() {
            for j in i + 1..present.len() {
                let Ok(mwu) = mann_whitney_u(&present[i].1, &present[j].1, n_pairs) else {
                    continue;
                };
                let r = mwu.effect_r.unwrap_or(0.0);
                if r >= 0.20 {
                    report.pairwise.push(PairwiseRow {
                        aim,
                        domain_a: present[i].0,
                        domain_b: present[j].0,
                        p_adjusted: mwu.p_value,
                        effect_r: r,
                    });
                }
            }
        }

        // hierarchical fit: domain intercepts only
        let data: Vec<(Covariates, u8)> = rows
            .iter()
            .filter(|r| r.aim == aim)
            .map(|r| (Covariates::new(vec![], Some(r.domain.index())), r.rating))
            .collect();
        if !data.is_empty() {
            let f = fit(&data, &[], &group_names, mcmc)?;
            report.coefficients.extend(summaries_from_fit(&f, aim));
        }
    }
    sort_report(&mut report);
    Ok(report)
}

/// H4: paired Low/High value-frame Wilcoxon tests per aim, plus the
/// stacked rating-distribution table per frame.
pub fn run_h4(records: &[RatingRecord]) -> Result<AnalysisReport, PipelineError> {
    let mut report = AnalysisReport::empty("h4");

    // pair up frames per participant x domain x aim
    let mut cells: BTreeMap<(&str, Domain, Aim), (Option<u8>, Option<u8>)> = BTreeMap::new();
    for r in records {
        let entry = cells
            .entry((r.participant_id.as_str(), r.domain, r.aim))
            .or_insert((None, None));
        match r.value_frame {
            ItemValue::Low => entry.0 = Some(r.rating),
            ItemValue::High => entry.1 = Some(r.rating),
        }
    }
    for ((participant, domain, aim), (low, high)) in &cells {
        let missing = match (low, high) {
            (None, _) => Some(ItemValue::Low),
            (_, None) => Some(ItemValue::High),
            _ => None,
        };
        if let Some(frame) = missing {
            return Err(PipelineError::MissingPair {
                participant: participant.to_string(),
                domain: *domain,
                aim: *aim,
                frame,
            });
        }
    }

    for aim in Aim::ALL {
        let mut low = Vec::new();
        let mut high = Vec::new();
        for ((_, _, a), (l, h)) in &cells {
            if *a == aim {
                low.push(l.unwrap() as f64);
                high.push(h.unwrap() as f64);
            }
        }
        report.effective_n = report.effective_n.max(low.len());
        match wilcoxon_signed_rank(&high, WilcoxonMode::Paired(&low)) {
            Ok(w) => report.omnibus.push(AimTest {
                aim,
                label: "wilcoxon_paired".into(),
                result: Some(w),
                error: None,
            }),
            Err(e) => report.omnibus.push(AimTest {
                aim,
                label: "wilcoxon_paired".into(),
                result: None,
                error: Some(e.to_string()),
            }),
        }

        for (frame, ratings) in [(ItemValue::Low, &low), (ItemValue::High, &high)] {
            let mut percent = [0.0f64; 5];
            for r in ratings {
                percent[(*r as usize) - 1] += 1.0;
            }
            let n = ratings.len().max(1) as f64;
            percent.iter_mut().for_each(|p| *p *= 100.0 / n);
            report.frame_distribution.push(FrameDistribution { aim, frame, percent });
        }
    }
    Ok(report)
}

fn gender_effect_code(g: Gender) -> Option<f64> {
    match g {
        Gender::Female => Some(1.0),
        Gender::Male => Some(-1.0),
        Gender::Other | Gender::Undisclosed => None,
    }
}

/// H5: exploratory 30-cell correlation screen per predictor family with
/// BH correction at q = .05 per family, then pooled hierarchical fits per
/// aim emitting experience/gender/age coefficients.
pub fn run_h5(
    records: &[RatingRecord],
    mcmc: &McmcConfig,
) -> Result<AnalysisReport, PipelineError> {
    let rows = baseline_rows(records);
    let mut report = AnalysisReport::empty("h5");
    report.effective_n = rows.len();
    let group_names: Vec<String> = Domain::ALL.iter().map(|d| d.to_string()).collect();

    let predictors: [(&str, fn(&RatingRecord) -> Option<f64>); 3] = [
        ("experience", |r| Some(r.traits.crs_experience as f64)),
        ("gender", |r| gender_effect_code(r.traits.gender)),
        ("age", |r| Some(r.traits.age_group.code() as f64)),
    ];

    for (name, extract) in predictors {
        // one family: 10 domains x 3 aims, BH applied within the family
        let mut family: Vec<CorrelationCell> = Vec::new();
        let mut family_p: Vec<f64> = Vec::new();
        let mut family_idx: Vec<usize> = Vec::new();
        for domain in Domain::ALL {
            for aim in Aim::ALL {
                let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                    .iter()
                    .filter(|r| r.domain == domain && r.aim == aim)
                    .filter_map(|r| extract(r).map(|x| (x, r.rating as f64)))
                    .unzip();
                match spearman(&xs, &ys) {
                    Ok(t) => {
                        family_p.push(t.p_value);
                        family_idx.push(family.len());
                        family.push(CorrelationCell {
                            predictor: name.into(),
                            domain,
                            aim,
                            rho: Some(t.statistic),
                            p_raw: Some(t.p_value),
                            p_adjusted: None,
                            significant: false,
                            error: None,
                        });
                    }
                    Err(e) => family.push(CorrelationCell {
                        predictor: name.into(),
                        domain,
                        aim,
                        rho: None,
                        p_raw: None,
                        p_adjusted: None,
                        significant: false,
                        error: Some(e.to_string()),
                    }),
                }
            }
        }
        let (adjusted, rejected) = benjamini_hochberg(&family_p, 0.05);
        for (k, cell_idx) in family_idx.iter().enumerate() {
            family[*cell_idx].p_adjusted = Some(adjusted[k]);
            family[*cell_idx].significant = rejected[k];
        }
        report.correlations.extend(family);
    }

    // pooled hierarchical fits; gender-coded, so Other/Undisclosed excluded
    let beta_names: Vec<String> =
        ["experience", "gender", "age"].iter().map(|s| s.to_string()).collect();
    for aim in Aim::ALL {
        let data: Vec<(Covariates, u8)> = rows
            .iter()
            .filter(|r| r.aim == aim)
            .filter_map(|r| {
                let g = gender_effect_code(r.traits.gender)?;
                let x = vec![
                    r.traits.crs_experience as f64 - 3.0,
                    g,
                    r.traits.age_group.code() as f64,
                ];
                Some((Covariates::new(x, Some(r.domain.index())), r.rating))
            })
            .collect();
        if !data.is_empty() {
            let f = fit(&data, &beta_names, &group_names, mcmc)?;
            report.coefficients.extend(summaries_from_fit(&f, aim));
        }
    }
    sort_report(&mut report);
    Ok(report)
}

/// H6: one-sample Wilcoxon tests of the autonomy controls against the
/// midpoint 3, and two ordinal regressions (Male dummy, age categorical
/// vs 18-24, centered experience) predicting each control.
pub fn run_h6(
    records: &[RatingRecord],
    mcmc: &McmcConfig,
) -> Result<AnalysisReport, PipelineError> {
    let mut report = AnalysisReport::empty("h6");

    // one autonomy row per participant
    let mut participants: BTreeMap<&str, &RatingRecord> = BTreeMap::new();
    for r in records {
        if r.autonomy.is_some() {
            participants.entry(r.participant_id.as_str()).or_insert(r);
        }
    }
    if participants.len() < 10 {
        return Err(PipelineError::TooFewParticipants(participants.len()));
    }
    report.effective_n = participants.len();

    let controls: [(&str, Aim, fn(&RatingRecord) -> f64); 2] = [
        ("educative_control", Aim::Educative, |r| {
            r.autonomy.unwrap().educative_control as f64
        }),
        ("explorative_control", Aim::Explorative, |r| {
            r.autonomy.unwrap().explorative_control as f64
        }),
    ];

    let beta_names: Vec<String> = std::iter::once("male".to_string())
        .chain(
            AgeGroup::ALL[1..]
                .iter()
                .map(|a| format!("age_{}", a.as_str().replace(['-', '+'], "_"))),
        )
        .chain(std::iter::once("experience".to_string()))
        .collect();

    for (label, aim, extract) in controls {
        let values: Vec<f64> = participants.values().map(|r| extract(r)).collect();
        match wilcoxon_signed_rank(&values, WilcoxonMode::OneSample(3.0)) {
            Ok(w) => report.omnibus.push(AimTest {
                aim,
                label: format!("{label}_vs_midpoint"),
                result: Some(w),
                error: None,
            }),
            Err(e) => report.omnibus.push(AimTest {
                aim,
                label: format!("{label}_vs_midpoint"),
                result: None,
                error: Some(e.to_string()),
            }),
        }

        // regression sample: gender-coded rows only
        let data: Vec<(Covariates, u8)> = participants
            .values()
            .filter(|r| matches!(r.traits.gender, Gender::Female | Gender::Male))
            .map(|r| {
                let mut x = vec![if r.traits.gender == Gender::Male { 1.0 } else { 0.0 }];
                for (i, _) in AgeGroup::ALL[1..].iter().enumerate() {
                    x.push(if r.traits.age_group.code() == i + 1 { 1.0 } else { 0.0 });
                }
                x.push(r.traits.crs_experience as f64 - 3.0);
                (Covariates::new(x, None), extract(r) as u8)
            })
            .collect();
        match fit(&data, &beta_names, &[], mcmc) {
            Ok(f) => {
                for mut s in summaries_from_fit(&f, aim) {
                    s.name = format!("{label}:{}", s.name.split(':').nth(1).unwrap_or(&s.name));
                    if s.name.ends_with(":male") {
                        // Male dummy: OR reported as Female vs Male
                        report
                            .odds_ratios
                            .push((s.name.clone(), odds_ratio_inverted(s.mean)));
                    }
                    report.coefficients.push(s);
                }
            }
            Err(InferError::DegenerateData) => report.omnibus.push(AimTest {
                aim,
                label: format!("{label}_regression"),
                result: None,
                error: Some(InferError::DegenerateData.to_string()),
            }),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(report)
}

fn sort_report(report: &mut AnalysisReport) {
    report.mean_ranks.sort_by_key(|r| (r.domain, r.aim));
    report.pairwise.sort_by_key(|r| (r.domain_a, r.domain_b, r.aim));
    report.correlations.sort_by(|a, b| {
        (&a.predictor, a.domain, a.aim).cmp(&(&b.predictor, b.domain, b.aim))
    });
}

fn find_report<'a>(
    reports: &'a [AnalysisReport],
    hypothesis: &str,
) -> Result<&'a AnalysisReport, PipelineError> {
    reports
        .iter()
        .find(|r| r.hypothesis == hypothesis)
        .ok_or_else(|| PipelineError::MissingReport(hypothesis.to_string()))
}

/// Convert analysis reports into policy priors.
///
/// Admission rules: per-domain per-aim intercepts always carry over;
/// experience coefficients become global modulators only when their HDI
/// excludes zero; gender enters only as per-domain override flags for
/// BH-significant screen cells; age is never admitted.
pub fn calibrate(reports: &[AnalysisReport]) -> Result<PolicyPriors, PipelineError> {
    let h1_h3 = find_report(reports, "h1_h3")?;
    let h5 = find_report(reports, "h5")?;

    let mut priors = PolicyPriors::default();

    for s in &h1_h3.coefficients {
        if let (Some(aim), Some(domain)) = (s.aim, s.domain) {
            priors.intercepts.push(InterceptPrior {
                domain,
                aim,
                coefficient: Coefficient {
                    mean: s.mean,
                    hdi_low: s.hdi_low,
                    hdi_high: s.hdi_high,
                },
            });
        }
    }

    for s in &h5.coefficients {
        let Some(aim) = s.aim else { continue };
        if s.name.ends_with(":experience") && s.credible {
            priors.beta_exp.insert(
                aim,
                Coefficient { mean: s.mean, hdi_low: s.hdi_low, hdi_high: s.hdi_high },
            );
        }
    }

    for cell in &h5.correlations {
        if cell.predictor == "gender" && cell.significant {
            if let Some(rho) = cell.rho {
                priors.gender_overrides.push(GenderOverride {
                    domain: cell.domain,
                    aim: cell.aim,
                    coefficient: Coefficient { mean: rho, hdi_low: rho, hdi_high: rho },
                });
            }
        }
    }

    Ok(priors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{AutonomyPref, UserTraits};
    use crate::ordinal::OrdinalModel;
    use crate::sim::{generate_population, PopulationSpec};

    fn small_mcmc(seed: u64) -> McmcConfig {
        McmcConfig {
            chains: 2,
            warmup_draws: 200,
            post_warmup_draws: 300,
            seed,
            ..Default::default()
        }
    }

    fn model_with(beta: Vec<(&str, f64)>, alpha: Vec<f64>) -> OrdinalModel {
        OrdinalModel {
            cutpoints: vec![-2.0, -0.7, 0.7, 2.0],
            beta_names: beta.iter().map(|(n, _)| n.to_string()).collect(),
            beta: beta.iter().map(|(_, b)| *b).collect(),
            alpha,
            sigma_alpha: 1.0,
        }
    }

    fn spec_with_education_intercept(seed: u64) -> PopulationSpec {
        let mut alpha = vec![0.0; 10];
        alpha[Domain::Education.index()] = 1.25;
        PopulationSpec {
            n_users: 60,
            experience_dist: [0.2; 5],
            gender_dist: vec![(Gender::Female, 0.5), (Gender::Male, 0.5)],
            age_dist: vec![(AgeGroup::A18_24, 0.5), (AgeGroup::A35_44, 0.5)],
            autonomy_dist: [0.05, 0.1, 0.15, 0.4, 0.3],
            true_models: Aim::ALL
                .into_iter()
                .map(|a| (a, model_with(vec![("experience", 0.2)], alpha.clone())))
                .collect(),
            value_shift: 0.8,
            seed,
        }
    }

    #[test]
    fn h1_h3_recovers_education_intercept() {
        let records = generate_population(&spec_with_education_intercept(31)).unwrap();
        let report = run_h1_h3(&records, &small_mcmc(7)).unwrap();
        let edu = report
            .coefficients
            .iter()
            .find(|c| c.aim == Some(Aim::Educative) && c.domain == Some(Domain::Education))
            .expect("education intercept present");
        assert!(edu.hdi_low <= 1.25 && 1.25 <= edu.hdi_high, "HDI [{}, {}]", edu.hdi_low, edu.hdi_high);
        assert!(edu.credible);
        // omnibus tests present for all three aims with mean ranks
        assert_eq!(report.omnibus.len(), 3);
        assert_eq!(report.mean_ranks.len(), 30);
    }

    #[test]
    fn h1_h3_identical_distributions_pass_no_pairwise_filter() {
        // every domain gets the same multiset of ratings, so every
        // pairwise U is exactly its null mean and r = 0
        let traits = UserTraits {
            crs_experience: 3,
            gender: Gender::Female,
            age_group: AgeGroup::A25_34,
        };
        let mut records = Vec::new();
        for p in 0..30 {
            for domain in Domain::ALL {
                for aim in Aim::ALL {
                    for frame in [ItemValue::Low, ItemValue::High] {
                        records.push(RatingRecord {
                            participant_id: format!("p{p:02}"),
                            domain,
                            aim,
                            value_frame: frame,
                            rating: 1 + (p % 5) as u8,
                            traits,
                            autonomy: None,
                        });
                    }
                }
            }
        }
        let report = run_h1_h3(&records, &small_mcmc(3)).unwrap();
        assert!(report.pairwise.is_empty(), "{:?}", report.pairwise);
    }

    fn paired_records(shift: u8) -> Vec<RatingRecord> {
        let traits = UserTraits {
            crs_experience: 3,
            gender: Gender::Female,
            age_group: AgeGroup::A25_34,
        };
        let mut out = Vec::new();
        for p in 0..12 {
            for aim in Aim::ALL {
                let low = 1 + (p % 3) as u8;
                for (frame, rating) in
                    [(ItemValue::Low, low), (ItemValue::High, (low + shift).min(5))]
                {
                    out.push(RatingRecord {
                        participant_id: format!("p{p:02}"),
                        domain: Domain::Travel,
                        aim,
                        value_frame: frame,
                        rating,
                        traits,
                        autonomy: None,
                    });
                }
            }
        }
        out
    }

    #[test]
    fn h4_detects_uniform_positive_shift() {
        let report = run_h4(&paired_records(1)).unwrap();
        for t in &report.omnibus {
            let r = t.result.as_ref().expect("test ran");
            assert!(r.p_value < 0.01, "p={}", r.p_value);
            assert_eq!(r.rank_biserial, Some(1.0));
        }
        assert_eq!(report.frame_distribution.len(), 6);
        for fd in &report.frame_distribution {
            assert!((fd.percent.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn h4_identical_frames_surface_all_ties_per_aim() {
        let report = run_h4(&paired_records(0)).unwrap();
        for t in &report.omnibus {
            assert!(t.result.is_none());
            assert_eq!(t.error.as_deref(), Some(StatsError::AllTies.to_string().as_str()));
        }
    }

    #[test]
    fn h4_missing_pair_is_an_error() {
        let mut records = paired_records(1);
        records.remove(0); // drop one Low frame
        let err = run_h4(&records).unwrap_err();
        assert!(matches!(err, PipelineError::MissingPair { frame: ItemValue::Low, .. }));
    }

    #[test]
    fn h5_constant_trait_column_surfaces_per_cell() {
        let mut spec = spec_with_education_intercept(13);
        spec.experience_dist = [0.0, 0.0, 1.0, 0.0, 0.0];
        spec.n_users = 20;
        let records = generate_population(&spec).unwrap();
        let report = run_h5(&records, &small_mcmc(5)).unwrap();
        let exp_cells: Vec<_> =
            report.correlations.iter().filter(|c| c.predictor == "experience").collect();
        assert_eq!(exp_cells.len(), 30);
        assert!(exp_cells.iter().all(|c| c.error.is_some()));
    }

    #[test]
    fn h5_emits_trait_coefficients_per_aim() {
        let records = generate_population(&spec_with_education_intercept(17)).unwrap();
        let report = run_h5(&records, &small_mcmc(9)).unwrap();
        for aim in Aim::ALL {
            assert!(report
                .coefficients
                .iter()
                .any(|c| c.aim == Some(aim) && c.name.ends_with(":experience")));
        }
        assert_eq!(report.correlations.len(), 90);
    }

    fn autonomy_records(n: usize, all_mid: bool, seed: u64) -> Vec<RatingRecord> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|p| {
                let male = p % 2 == 0;
                let (edu, exp) = if all_mid {
                    (3, 3)
                } else {
                    // women prefer more user-led control in this fixture
                    let base = if male { 2 } else { 4 };
                    (
                        (base + rng.gen_range(0..2)).min(5),
                        (base + rng.gen_range(0..2)).min(5),
                    )
                };
                RatingRecord {
                    participant_id: format!("p{p:03}"),
                    domain: Domain::Travel,
                    aim: Aim::Educative,
                    value_frame: ItemValue::Low,
                    rating: 3,
                    traits: UserTraits {
                        crs_experience: 1 + (p % 5) as u8,
                        gender: if male { Gender::Male } else { Gender::Female },
                        age_group: AgeGroup::ALL[p % 6],
                    },
                    autonomy: Some(AutonomyPref {
                        educative_control: edu,
                        explorative_control: exp,
                    }),
                }
            })
            .collect()
    }

    #[test]
    fn h6_all_midpoint_controls_are_all_ties() {
        let report = run_h6(&autonomy_records(40, true, 1), &small_mcmc(2)).unwrap();
        let tie_tests: Vec<_> =
            report.omnibus.iter().filter(|t| t.label.ends_with("_vs_midpoint")).collect();
        assert_eq!(tie_tests.len(), 2);
        assert!(tie_tests.iter().all(|t| t.error.is_some()));
    }

    #[test]
    fn h6_recovers_negative_male_coefficient() {
        let report = run_h6(&autonomy_records(120, false, 3), &small_mcmc(4)).unwrap();
        let male = report
            .coefficients
            .iter()
            .find(|c| c.name == "educative_control:male")
            .expect("male coefficient");
        assert!(male.mean < 0.0, "mean {}", male.mean);
        let (_, or) = report
            .odds_ratios
            .iter()
            .find(|(n, _)| n == "educative_control:male")
            .unwrap();
        assert!((or - (-male.mean).exp()).abs() < 1e-12);
        assert!(*or > 1.0);
    }

    #[test]
    fn h6_requires_ten_participants() {
        let err = run_h6(&autonomy_records(5, false, 1), &small_mcmc(1)).unwrap_err();
        assert_eq!(err, PipelineError::TooFewParticipants(5));
    }

    #[test]
    fn calibrate_applies_admission_gates() {
        let mut h1_h3 = AnalysisReport::empty("h1_h3");
        h1_h3.coefficients.push(BayesSummary {
            name: "Educative:alpha[Education]".into(),
            aim: Some(Aim::Educative),
            domain: Some(Domain::Education),
            mean: 1.25,
            hdi_low: 0.47,
            hdi_high: 1.96,
            credible: true,
            rhat: 1.0,
            ess_bulk: 2000.0,
        });
        let mut h5 = AnalysisReport::empty("h5");
        // credible experience effect -> admitted
        h5.coefficients.push(BayesSummary {
            name: "Affective:experience".into(),
            aim: Some(Aim::Affective),
            domain: None,
            mean: 0.40,
            hdi_low: 0.32,
            hdi_high: 0.49,
            credible: true,
            rhat: 1.0,
            ess_bulk: 2000.0,
        });
        // non-credible experience effect -> rejected
        h5.coefficients.push(BayesSummary {
            name: "Educative:experience".into(),
            aim: Some(Aim::Educative),
            domain: None,
            mean: 0.05,
            hdi_low: -0.05,
            hdi_high: 0.15,
            credible: false,
            rhat: 1.0,
            ess_bulk: 2000.0,
        });
        // credible age effect -> never admitted
        h5.coefficients.push(BayesSummary {
            name: "Affective:age".into(),
            aim: Some(Aim::Affective),
            domain: None,
            mean: -0.2,
            hdi_low: -0.3,
            hdi_high: -0.1,
            credible: true,
            rhat: 1.0,
            ess_bulk: 2000.0,
        });
        // one BH-significant gender cell -> exactly one override
        h5.correlations.push(CorrelationCell {
            predictor: "gender".into(),
            domain: Domain::Finance,
            aim: Aim::Explorative,
            rho: Some(0.24),
            p_raw: Some(0.001),
            p_adjusted: Some(0.04),
            significant: true,
            error: None,
        });
        h5.correlations.push(CorrelationCell {
            predictor: "gender".into(),
            domain: Domain::Travel,
            aim: Aim::Educative,
            rho: Some(0.10),
            p_raw: Some(0.3),
            p_adjusted: Some(0.6),
            significant: false,
            error: None,
        });

        let priors = calibrate(&[h1_h3, h5]).unwrap();
        assert_eq!(priors.intercepts.len(), 1);
        assert_eq!(priors.beta_exp.len(), 1);
        assert!(priors.beta_exp.contains_key(&Aim::Affective));
        assert_eq!(priors.gender_overrides.len(), 1);
        assert_eq!(priors.gender_overrides[0].domain, Domain::Finance);
    }

    #[test]
    fn calibrate_missing_report_is_an_error() {
        let h1_h3 = AnalysisReport::empty("h1_h3");
        assert_eq!(
            calibrate(&[h1_h3]).unwrap_err(),
            PipelineError::MissingReport("h5".into())
        );
    }
}
