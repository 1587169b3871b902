use anyhow::Result;
use qvp_core::eval::metrics::WeightScheme;
use qvp_core::study::{run_study, StudyConfig, StudyReport};
use qvp_core::ModelKind;

use crate::config::{Common, SimulateArgs};
use crate::output::{num, Output};

pub fn study_config(common: &Common, args: &SimulateArgs) -> StudyConfig {
    StudyConfig {
        dgp: args.dgp,
        n_sim: args.nsim,
        t: args.t,
        n_test: args.n_test,
        q: common.quantiles,
        correlation: args.correlation,
        models: args.compare.clone(),
        savs: common.savs,
        sampler: common.sampler(),
        seed: common.seed,
    }
}

/// Table of crossing incidence and weighted scores, relative to the
/// independent baseline when it was run.
pub fn format_report(r: &StudyReport) -> String {
    let reference = r.model(ModelKind::Bqr.name());
    let mut s = format!(
        "DGP-{}  {:<12}{:>10}{:>10}{:>10}{:>10}{:>10}{:>10}\n",
        r.dgp, "model", "crossing%", "QS", "Centre", "Left", "Right", "RMSE"
    );
    for m in &r.models {
        s.push_str(&format!("       {:<12}{:>10.2}", m.label, 100.0 * m.crossing));
        for k in 0..4 {
            match reference {
                Some(b) if b.label != m.label => s.push_str(&format!("{:>9.1}%", 100.0 * m.qwqs[k] / b.qwqs[k])),
                _ => s.push_str(&format!("{:>10.4}", m.qwqs[k])),
            }
        }
        s.push_str(&format!("{:>10.4}\n", m.rmse));
    }
    s
}

pub fn run(common: &Common, args: &SimulateArgs, out: &Output) -> Result<()> {
    let cfg = study_config(common, args);
    log::info!("DGP-{}: {} replicates of T = {}", args.dgp, args.nsim, args.t);
    let report = run_study(&cfg)?;
    out.json("study.json", &report)?;
    out.csv(
        "crossing.csv",
        &["model", "crossing"],
        report.models.iter().map(|m| vec![m.label.clone(), num(m.crossing)]),
    )?;
    let mut rows = Vec::new();
    for m in &report.models {
        for (k, s) in WeightScheme::ALL.iter().enumerate() {
            rows.push(vec![m.label.clone(), s.label().to_string(), num(m.qwqs[k])]);
        }
    }
    out.csv("scores.csv", &["model", "scheme", "qwqs"], rows)?;
    let mut rows = Vec::new();
    for m in &report.models {
        for (tau, qs) in report.taus.iter().zip(&m.qs_by_tau) {
            rows.push(vec![m.label.clone(), num(*tau), num(*qs)]);
        }
    }
    out.csv("scores_by_tau.csv", &["model", "tau", "quantile_score"], rows)?;
    out.csv(
        "rmse.csv",
        &["model", "rmse"],
        report.models.iter().map(|m| vec![m.label.clone(), num(m.rmse)]),
    )?;
    let mut rows = Vec::new();
    for m in &report.models {
        if let Some(v) = &m.rmse_null_by_quantile {
            for (tau, e) in report.taus.iter().zip(v) {
                rows.push(vec![m.label.clone(), num(*tau), num(*e)]);
            }
        }
    }
    if !rows.is_empty() {
        out.csv("rmse_null_by_tau.csv", &["model", "tau", "rmse"], rows)?;
    }
    let mut rows = Vec::new();
    for m in &report.models {
        if let Some(v) = &m.inclusion0 {
            for (j, inc) in v.iter().enumerate() {
                rows.push(vec![m.label.clone(), (j + 1).to_string(), num(*inc)]);
            }
        }
    }
    if !rows.is_empty() {
        out.csv("inclusion.csv", &["model", "covariate", "inclusion"], rows)?;
    }
    let table = format_report(&report);
    out.text("summary.txt", &table)?;
    print!("{table}");
    Ok(())
}
