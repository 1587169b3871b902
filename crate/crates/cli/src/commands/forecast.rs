use anyhow::{bail, Result};
use qvp_core::eval::metrics::WeightScheme;
use qvp_core::qvar::{backtest, forecast_paths, BacktestConfig, BacktestModel, BacktestReport, QvarSpec, Scenario};
use qvp_core::ModelKind;

use super::{fan_rows, fit_system, load_system};
use crate::config::{Common, ForecastArgs};
use crate::output::{num, Output};

fn label(common: &Common) -> String {
    if common.savs {
        format!("{}_savs", common.model.name())
    } else {
        common.model.name().to_string()
    }
}

/// The chosen model and, unless it is the baseline itself, the independent
/// baseline as reference.
pub fn backtest_config(common: &Common, args: &ForecastArgs, t: usize) -> Result<BacktestConfig> {
    if args.eval_windows + 1 >= t {
        bail!("{} evaluation windows leave no estimation sample in {t} observations", args.eval_windows);
    }
    let mut models = vec![BacktestModel {
        label: label(common),
        spec: common.qvar_spec(),
    }];
    if common.model != ModelKind::Bqr {
        let mut spec = QvarSpec::new(ModelKind::Bqr);
        spec.interpolate = common.interpolate;
        models.push(BacktestModel {
            label: ModelKind::Bqr.name().into(),
            spec,
        });
    }
    let mut cfg = BacktestConfig::new(models, common.sampler());
    cfg.start = t - args.eval_windows;
    cfg.horizons = (1..=args.horizon).collect();
    cfg.n_paths = args.paths;
    cfg.seed = common.seed;
    Ok(cfg)
}

pub fn write_backtest(out: &Output, report: &BacktestReport) -> Result<()> {
    out.json("backtest.json", report)?;
    let mut rows = Vec::new();
    for c in &report.cells {
        let eq = c
            .equation
            .map(|i| report.variables[i].clone())
            .unwrap_or_else(|| "overall".into());
        for (k, s) in WeightScheme::ALL.iter().enumerate() {
            rows.push(vec![
                c.model.clone(),
                c.horizon.to_string(),
                eq.clone(),
                s.label().to_string(),
                num(c.qwqs[k]),
                c.n_windows.to_string(),
            ]);
        }
    }
    out.csv("scores.csv", &["model", "horizon", "equation", "scheme", "qwqs", "windows"], rows)?;
    let table = report.format_table(Some(ModelKind::Bqr.name()));
    out.text("scores_table.txt", &table)?;
    print!("{table}");
    Ok(())
}

pub fn run(common: &Common, args: &ForecastArgs, out: &Output) -> Result<()> {
    let (data, names) = load_system(&args.system)?;
    let model = fit_system(common, &data, &names, out)?;
    let last = data.row(data.nrows() - 1);
    let f = forecast_paths(&model, last, args.horizon, args.paths, common.seed, &Scenario::free())?;
    if f.n_diverged() > 0 {
        log::warn!("{} of {} paths diverged and were dropped", f.n_diverged(), f.n_paths());
    }
    out.csv(
        "fan.csv",
        &["step", "variable", "level", "value"],
        fan_rows(&f, &names, &args.fan, None)?,
    )?;
    out.json(
        "forecast.json",
        &serde_json::json!({ "paths": f.n_paths(), "diverged": f.n_diverged(), "horizon": args.horizon }),
    )?;
    if args.eval_windows > 0 {
        let cfg = backtest_config(common, args, data.nrows())?;
        log::info!("expanding-window evaluation from origin {}", cfg.start);
        let report = backtest(data.view(), &names, &common.grid()?, &cfg)?;
        write_backtest(out, &report)?;
    }
    Ok(())
}
