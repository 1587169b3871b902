//! Expanding-window forecast evaluation of competing QVAR specifications.

use std::fmt::Write as _;

use ndarray::{s, Array3, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_qvar, forecast_paths, QvarSpec, Scenario};
use crate::ald::{check_loss, QuantileGrid};
use crate::error::{param, Result};
use crate::eval::metrics::{weighted_qs, WeightScheme};
use crate::rng::derive_seed;
use crate::sampler::SamplerConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacktestModel {
    pub label: String,
    pub spec: QvarSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    /// Length of the first estimation window.
    pub start: usize,
    pub step: usize,
    pub horizons: Vec<usize>,
    pub n_paths: usize,
    pub models: Vec<BacktestModel>,
    pub sampler: SamplerConfig,
    pub seed: u64,
}

impl BacktestConfig {
    pub fn new(models: Vec<BacktestModel>, sampler: SamplerConfig) -> Self {
        Self {
            start: 96,
            step: 1,
            horizons: vec![1, 3, 6],
            n_paths: 1000,
            models,
            sampler,
            seed: 1,
        }
    }

    fn validate(&self, t: usize) -> Result<()> {
        if self.step == 0 || self.n_paths == 0 || self.models.is_empty() {
            return Err(param("step, paths and model list must be non-empty"));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(param("horizons must be positive"));
        }
        if self.start < 2 || self.start >= t {
            return Err(param(format!("initial window {} must lie in [2, {t})", self.start)));
        }
        Ok(())
    }
}

/// Weighted scores of one model at one horizon for one equation, or for
/// all equations pooled when `equation` is `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacktestCell {
    pub model: String,
    pub horizon: usize,
    pub equation: Option<usize>,
    pub qs_by_tau: Vec<f64>,
    /// Equal, centre, left, right.
    pub qwqs: [f64; 4],
    pub n_windows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub variables: Vec<String>,
    pub taus: Vec<f64>,
    pub horizons: Vec<usize>,
    pub models: Vec<String>,
    pub cells: Vec<BacktestCell>,
}

/// Per-origin tick losses, `[horizon, variable, tau]`, `NaN` where the
/// target lies beyond the sample.
fn origin_losses(
    data: ArrayView2<f64>,
    names: &[String],
    grid: &QuantileGrid,
    model: &BacktestModel,
    cfg: &BacktestConfig,
    origin: usize,
    mi: usize,
) -> Result<Array3<f64>> {
    let (t, m) = data.dim();
    let mut sc = cfg.sampler.clone();
    sc.seed = derive_seed(derive_seed(cfg.seed, origin as u64), mi as u64);
    let fitted = fit_qvar(data.slice(s![..origin, ..]), names, grid, &model.spec, &sc)?;
    let h_max = *cfg.horizons.iter().max().expect("validated");
    let paths = forecast_paths(&fitted, data.row(origin - 1), h_max, cfg.n_paths, sc.seed, &Scenario::free())?;
    let qf = paths.quantiles(grid.taus())?;
    let mut out = Array3::from_elem((cfg.horizons.len(), m, grid.len()), f64::NAN);
    for (hi, &h) in cfg.horizons.iter().enumerate() {
        let target = origin - 1 + h;
        if target >= t {
            continue;
        }
        for i in 0..m {
            for (qi, &tau) in grid.taus().iter().enumerate() {
                out[[hi, i, qi]] = check_loss(data[[target, i]] - qf[[h - 1, i, qi]], tau);
            }
        }
    }
    Ok(out)
}

/// Fit every model on the windows `1..T_r` for `T_r = start, start + step,
/// ...`, forecast from the last in-sample observation and score the
/// percentiles of the simulated paths against the realisations.
pub fn backtest(data: ArrayView2<f64>, names: &[String], grid: &QuantileGrid, cfg: &BacktestConfig) -> Result<BacktestReport> {
    let (t, m) = data.dim();
    cfg.validate(t)?;
    let origins: Vec<usize> = (cfg.start..t).step_by(cfg.step).collect();
    let mut cells = Vec::new();
    for (mi, model) in cfg.models.iter().enumerate() {
        let losses = origins
            .par_iter()
            .map(|&o| origin_losses(data, names, grid, model, cfg, o, mi))
            .collect::<Result<Vec<_>>>()?;
        for (hi, &h) in cfg.horizons.iter().enumerate() {
            let mut per_eq = vec![vec![0.0; grid.len()]; m];
            let mut n = 0usize;
            for l in &losses {
                if l[[hi, 0, 0]].is_nan() {
                    continue;
                }
                n += 1;
                for i in 0..m {
                    for qi in 0..grid.len() {
                        per_eq[i][qi] += l[[hi, i, qi]];
                    }
                }
            }
            if n == 0 {
                continue;
            }
            let mut pooled = vec![0.0; grid.len()];
            for (i, qs) in per_eq.iter_mut().enumerate() {
                for (qi, v) in qs.iter_mut().enumerate() {
                    *v /= n as f64;
                    pooled[qi] += *v / m as f64;
                }
                cells.push(cell(&model.label, h, Some(i), qs.clone(), grid, n)?);
            }
            cells.push(cell(&model.label, h, None, pooled, grid, n)?);
        }
    }
    Ok(BacktestReport {
        variables: names.to_vec(),
        taus: grid.taus().to_vec(),
        horizons: cfg.horizons.clone(),
        models: cfg.models.iter().map(|m| m.label.clone()).collect(),
        cells,
    })
}

fn cell(model: &str, horizon: usize, equation: Option<usize>, qs: Vec<f64>, grid: &QuantileGrid, n: usize) -> Result<BacktestCell> {
    let mut qwqs = [0.0; 4];
    for (k, s) in WeightScheme::ALL.iter().enumerate() {
        qwqs[k] = weighted_qs(&qs, grid.taus(), *s)?;
    }
    Ok(BacktestCell {
        model: model.to_string(),
        horizon,
        equation,
        qs_by_tau: qs,
        qwqs,
        n_windows: n,
    })
}

impl BacktestReport {
    pub fn cell(&self, model: &str, horizon: usize, equation: Option<usize>) -> Option<&BacktestCell> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.horizon == horizon && c.equation == equation)
    }

    /// Plain-text table: one block per equation plus an overall block, the
    /// reference model in absolute terms and the others as a percentage of
    /// it. Without a reference every entry is absolute.
    pub fn format_table(&self, reference: Option<&str>) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<24}", "");
        for h in &self.horizons {
            let _ = write!(out, "| h={:<37}", h);
        }
        out.push('\n');
        let _ = write!(out, "{:<24}", "");
        for _ in &self.horizons {
            let _ = write!(out, "| {:>9}{:>9}{:>9}{:>9} ", "CRPS", "Centre", "Left", "Right");
        }
        out.push('\n');
        let blocks: Vec<(String, Option<usize>)> = self
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("Equation {}: {v}", i + 1), Some(i)))
            .chain(std::iter::once(("Overall".to_string(), None)))
            .collect();
        let reference = reference.filter(|r| self.models.iter().any(|m| m == r));
        let mut order: Vec<&String> = self.models.iter().collect();
        if let Some(r) = reference {
            order.sort_by_key(|m| *m != r);
        }
        for (title, eq) in blocks {
            let _ = writeln!(out, "{title}");
            for model in &order {
                let _ = write!(out, "  {:<22}", model);
                for &h in &self.horizons {
                    out.push_str("| ");
                    let c = self.cell(model, h, eq);
                    let r = reference.and_then(|r| self.cell(r, h, eq));
                    for k in 0..4 {
                        match (c, r) {
                            (Some(c), Some(r)) if Some(model.as_str()) != reference => {
                                let _ = write!(out, "{:>8.1}%", 100.0 * c.qwqs[k] / r.qwqs[k]);
                            }
                            (Some(c), _) => {
                                let _ = write!(out, "{:>9.3}", c.qwqs[k]);
                            }
                            (None, _) => {
                                let _ = write!(out, "{:>9}", "-");
                            }
                        }
                    }
                    out.push(' ');
                }
                out.push('\n');
            }
        }
        out
    }
}
