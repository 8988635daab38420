//! Plain-text rendering of JSON artifacts as aligned-column tables.

use rae::core::AimWeights;
use rae::pipeline::AnalysisReport;
use rae::sim::AlignmentScore;

use crate::artifact::PriorsArtifact;

fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i < widths.len() {
                widths[i] = widths[i].max(cell.len());
            }
        }
    }
    let fmt_row = |cells: &[String]| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:<width$}", c, width = widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = String::new();
    let header_cells: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
    out.push_str(&fmt_row(&header_cells));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&fmt_row(row));
        out.push('\n');
    }
    out
}

fn f(v: f64) -> String {
    format!("{v:.3}")
}

fn opt(v: Option<f64>) -> String {
    v.map(f).unwrap_or_else(|| "-".into())
}

pub fn render_report(report: &AnalysisReport) -> String {
    let mut out = format!("Report: {} (n = {})\n\n", report.hypothesis, report.effective_n);

    if !report.omnibus.is_empty() {
        let rows: Vec<Vec<String>> = report
            .omnibus
            .iter()
            .map(|t| match (&t.result, &t.error) {
                (Some(r), _) => vec![
                    t.aim.to_string(),
                    t.label.clone(),
                    f(r.statistic),
                    opt(r.z),
                    f(r.p_value),
                    r.n_effective.to_string(),
                    opt(r.effect_r),
                ],
                (None, err) => vec![
                    t.aim.to_string(),
                    t.label.clone(),
                    err.clone().unwrap_or_default(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ],
            })
            .collect();
        out.push_str(&table(&["aim", "test", "statistic", "z", "p", "n", "r"], &rows));
        out.push('\n');
    }

    if !report.mean_ranks.is_empty() {
        let rows: Vec<Vec<String>> = report
            .mean_ranks
            .iter()
            .map(|m| vec![m.aim.to_string(), m.domain.to_string(), f(m.mean_rank)])
            .collect();
        out.push_str(&table(&["aim", "domain", "mean rank"], &rows));
        out.push('\n');
    }

    if !report.pairwise.is_empty() {
        let rows: Vec<Vec<String>> = report
            .pairwise
            .iter()
            .map(|p| {
                vec![
                    p.aim.to_string(),
                    format!("{} vs {}", p.domain_a, p.domain_b),
                    f(p.p_adjusted),
                    f(p.effect_r),
                ]
            })
            .collect();
        out.push_str(&table(&["aim", "pair", "adj p", "r"], &rows));
        out.push('\n');
    }

    if !report.coefficients.is_empty() {
        let rows: Vec<Vec<String>> = report
            .coefficients
            .iter()
            .map(|c| {
                vec![
                    c.name.clone(),
                    f(c.mean),
                    format!("[{}, {}]", f(c.hdi_low), f(c.hdi_high)),
                    if c.credible { "yes" } else { "no" }.into(),
                    f(c.rhat),
                    format!("{:.0}", c.ess_bulk),
                ]
            })
            .collect();
        out.push_str(&table(
            &["coefficient", "mean", "94% HDI", "credible", "rhat", "ess"],
            &rows,
        ));
        out.push('\n');
    }

    if !report.correlations.is_empty() {
        let rows: Vec<Vec<String>> = report
            .correlations
            .iter()
            .map(|c| {
                vec![
                    c.predictor.clone(),
                    c.domain.to_string(),
                    c.aim.to_string(),
                    opt(c.rho),
                    opt(c.p_adjusted),
                    if c.significant { "*" } else { "" }.into(),
                    c.error.clone().unwrap_or_default(),
                ]
            })
            .collect();
        out.push_str(&table(
            &["predictor", "domain", "aim", "rho", "adj p", "sig", "note"],
            &rows,
        ));
        out.push('\n');
    }

    if !report.frame_distribution.is_empty() {
        let rows: Vec<Vec<String>> = report
            .frame_distribution
            .iter()
            .map(|d| {
                let mut row = vec![d.aim.to_string(), d.frame.to_string()];
                row.extend(d.percent.iter().map(|p| format!("{p:.1}%")));
                row
            })
            .collect();
        out.push_str(&table(&["aim", "frame", "1", "2", "3", "4", "5"], &rows));
        out.push('\n');
    }

    if !report.odds_ratios.is_empty() {
        let rows: Vec<Vec<String>> = report
            .odds_ratios
            .iter()
            .map(|(name, or)| vec![name.clone(), format!("{or:.2}")])
            .collect();
        out.push_str(&table(&["coefficient", "odds ratio"], &rows));
        out.push('\n');
    }
    out
}

pub fn render_priors(artifact: &PriorsArtifact) -> String {
    let mut out = format!(
        "Priors artifact {} (seed {}, input sha256 {})\n\n",
        artifact.schema_version,
        artifact.provenance.seed,
        &artifact.provenance.input_sha256[..16.min(artifact.provenance.input_sha256.len())],
    );
    out.push_str(&format!(
        "Emphasis map: primary {} / secondary {} / deemphasized {}; trait gain {}\n\n",
        f(artifact.emphasis_map.primary),
        f(artifact.emphasis_map.secondary),
        f(artifact.emphasis_map.deemphasized),
        f(artifact.trait_gain),
    ));

    if !artifact.beta_exp.is_empty() {
        let rows: Vec<Vec<String>> = artifact
            .beta_exp
            .iter()
            .map(|(aim, c)| {
                vec![aim.to_string(), f(c.mean), format!("[{}, {}]", f(c.hdi_low), f(c.hdi_high))]
            })
            .collect();
        out.push_str(&table(&["experience modulator (aim)", "mean", "94% HDI"], &rows));
        out.push('\n');
    }

    if !artifact.gender_overrides.is_empty() {
        let rows: Vec<Vec<String>> = artifact
            .gender_overrides
            .iter()
            .map(|o| vec![o.domain.to_string(), o.aim.to_string(), f(o.coefficient.mean)])
            .collect();
        out.push_str(&table(&["gender override domain", "aim", "coefficient"], &rows));
        out.push('\n');
    }

    if !artifact.intercepts.is_empty() {
        let rows: Vec<Vec<String>> = artifact
            .intercepts
            .iter()
            .map(|i| {
                vec![
                    i.domain.to_string(),
                    i.aim.to_string(),
                    f(i.coefficient.mean),
                    format!("[{}, {}]", f(i.coefficient.hdi_low), f(i.coefficient.hdi_high)),
                ]
            })
            .collect();
        out.push_str(&table(&["intercept domain", "aim", "mean", "94% HDI"], &rows));
        out.push('\n');
    }
    out
}

pub fn render_alignment(score: &AlignmentScore) -> String {
    let rows = vec![
        vec!["educative gap".into(), f(score.per_aim_gap[0])],
        vec!["explorative gap".into(), f(score.per_aim_gap[1])],
        vec!["affective gap".into(), f(score.per_aim_gap[2])],
        vec!["mean gap".into(), f(score.mean_gap)],
        vec!["initiative mismatch".into(), f(score.initiative_mismatch_rate)],
        vec!["states".into(), score.n_states.to_string()],
    ];
    table(&["metric", "value"], &rows)
}

pub fn render_weights(w: &AimWeights) -> String {
    let mut rows = vec![
        vec!["w_edu".into(), f(w.w_edu)],
        vec!["w_exp".into(), f(w.w_exp)],
        vec!["w_aff".into(), f(w.w_aff)],
        vec!["initiative".into(), format!("{:?}", w.initiative)],
        vec!["affective_system_init".into(), w.affective_system_init.to_string()],
    ];
    if let Some([e, x, a]) = w.ternary() {
        rows.push(vec!["ternary edu".into(), f(e)]);
        rows.push(vec!["ternary exp".into(), f(x)]);
        rows.push(vec!["ternary aff".into(), f(a)]);
    }
    table(&["field", "value"], &rows)
}
