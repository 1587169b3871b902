pub mod diagnose;
pub mod fit;
pub mod forecast;
pub mod qirf;
pub mod simulate;
pub mod stress;

use anyhow::{bail, Result};
use ndarray::{Array2, Array3};
use qvp_core::eval::metrics::empirical_quantile;
use qvp_core::eval::ConvergenceReport;
use qvp_core::qvar::{fit_qvar, ForecastPaths, QvarModel};
use qvp_core::{read_table, PosteriorDraws};

use crate::config::{Common, SystemArgs};
use crate::output::{num, Output};

/// Mean and central 95% interval.
pub(crate) fn mean_band(values: &mut [f64]) -> [f64; 3] {
    values.sort_by(|a, b| a.total_cmp(b));
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    [mean, empirical_quantile(values, 0.025), empirical_quantile(values, 0.975)]
}

/// Read the system data in causal order, `T x m`.
pub(crate) fn load_system(args: &SystemArgs) -> Result<(Array2<f64>, Vec<String>)> {
    let table = read_table(&args.input)?;
    let names = match &args.variables {
        Some(v) => v.clone(),
        None => table.names.clone(),
    };
    if names.is_empty() {
        bail!("no variables selected");
    }
    let mut data = Array2::zeros((table.values.nrows(), names.len()));
    for (j, n) in names.iter().enumerate() {
        let c = table.column_index(n)?;
        data.column_mut(j).assign(&table.values.column(c));
    }
    Ok((data, names))
}

/// Fit the system and save each equation's draws.
pub(crate) fn fit_system(common: &Common, data: &Array2<f64>, names: &[String], out: &Output) -> Result<QvarModel> {
    log::info!("fitting {} equations on {} observations", names.len(), data.nrows());
    let model = fit_qvar(data.view(), names, &common.grid()?, &common.qvar_spec(), &common.sampler())?;
    for (i, eq) in model.equations.iter().enumerate() {
        out.draws(&format!("draws/equation{}", i + 1), &eq.draws)?;
    }
    Ok(model)
}

/// Long-format fan rows: `step, variable, level, value`.
pub(crate) fn fan_rows(f: &ForecastPaths, names: &[String], levels: &[f64], tag: Option<&str>) -> Result<Vec<Vec<String>>> {
    let q: Array3<f64> = f.quantiles(levels)?;
    let mut rows = Vec::new();
    for step in 0..q.shape()[0] {
        for (i, n) in names.iter().enumerate() {
            for (li, l) in levels.iter().enumerate() {
                let mut r = Vec::with_capacity(5);
                if let Some(t) = tag {
                    r.push(t.to_string());
                }
                r.extend([(step + 1).to_string(), n.clone(), num(*l), num(q[[step, i, li]])]);
                rows.push(r);
            }
        }
    }
    Ok(rows)
}

/// Write `convergence.csv` and `convergence.json`; needs two or more chains.
pub(crate) fn write_convergence(draws: &PosteriorDraws, out: &Output, prefix: &str) -> Result<Option<ConvergenceReport>> {
    if draws.n_chains() < 2 {
        log::warn!("R-hat needs at least two chains; skipping convergence report");
        return Ok(None);
    }
    let report = ConvergenceReport::from_traces(&draws.scalar_traces())?;
    out.csv(
        &format!("{prefix}convergence.csv"),
        &["parameter", "rhat", "ess_bulk"],
        report.parameters.iter().map(|p| vec![p.name.clone(), num(p.rhat), num(p.ess_bulk)]),
    )?;
    out.json(
        &format!("{prefix}convergence.json"),
        &serde_json::json!({
            "share_rhat_below_1_01": report.share_below(1.01),
            "share_rhat_below_1_1": report.share_below(1.1),
            "max_rhat": report.max_rhat(),
            "parameters": report.parameters.len(),
        }),
    )?;
    Ok(Some(report))
}
