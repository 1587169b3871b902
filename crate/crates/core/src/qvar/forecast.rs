//! Simulation of multi-step quantile forecasts and stress scenarios.

use ndarray::{Array1, Array2, Array3, ArrayView1, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{QvarModel, ResolvedLevel};
use crate::error::{dim, param, Result};
use crate::eval::metrics::empirical_quantile;
use crate::rng::RngStream;

/// Paths whose state exceeds this norm are flagged as divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Quantile levels imposed on the simulation. `steps[l][i] = Some(tau)`
/// fixes variable `i` at step `l + 1`; `None`, or a step beyond the listed
/// ones, draws the level uniformly over the grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub steps: Vec<Vec<Option<f64>>>,
}

impl Scenario {
    pub fn free() -> Self {
        Self::default()
    }

    /// Every variable at `level` for `h` steps.
    pub fn constant(level: f64, m: usize, h: usize) -> Self {
        Self {
            steps: vec![vec![Some(level); m]; h],
        }
    }

    pub fn median(m: usize, h: usize) -> Self {
        Self::constant(0.5, m, h)
    }

    /// Variable `var` at `level` for the first `duration` steps, everything
    /// else at the median.
    pub fn tail_stress(var: usize, level: f64, duration: usize, m: usize, h: usize) -> Self {
        let mut s = Self::median(m, h);
        for step in s.steps.iter_mut().take(duration) {
            step[var] = Some(level);
        }
        s
    }

    fn resolve(&self, model: &QvarModel, h: usize) -> Result<Vec<Vec<Option<ResolvedLevel>>>> {
        let m = model.n_vars();
        (0..h)
            .map(|l| match self.steps.get(l) {
                None => Ok(vec![None; m]),
                Some(row) if row.len() != m => Err(dim(format!("scenario step {} lists {} variables, model has {m}", l + 1, row.len()))),
                Some(row) => row.iter().map(|lv| lv.map(|u| model.resolve(u)).transpose()).collect(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastPaths {
    /// `[path, step, variable]`; step `l` holds `Y_{T + l + 1}`.
    pub paths: Array3<f64>,
    pub diverged: Vec<bool>,
}

impl ForecastPaths {
    pub fn n_paths(&self) -> usize {
        self.paths.len_of(Axis(0))
    }

    pub fn horizon(&self) -> usize {
        self.paths.len_of(Axis(1))
    }

    pub fn n_diverged(&self) -> usize {
        self.diverged.iter().filter(|d| **d).count()
    }

    /// Sorted values of one variable at one step over non-divergent paths.
    pub fn sorted_values(&self, step: usize, var: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .paths
            .index_axis(Axis(1), step)
            .column(var)
            .iter()
            .zip(&self.diverged)
            .filter(|(_, d)| !**d)
            .map(|(x, _)| *x)
            .collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    /// Empirical percentiles across paths, `[step, variable, level]`.
    pub fn quantiles(&self, levels: &[f64]) -> Result<Array3<f64>> {
        if levels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(param("percentile levels must lie in [0, 1]"));
        }
        if self.n_diverged() == self.n_paths() {
            return Err(crate::error::Error::NumericDomain("every forecast path diverged".into()));
        }
        let (h, m) = (self.horizon(), self.paths.len_of(Axis(2)));
        let mut out = Array3::zeros((h, m, levels.len()));
        for l in 0..h {
            for i in 0..m {
                let v = self.sorted_values(l, i);
                for (k, &p) in levels.iter().enumerate() {
                    out[[l, i, k]] = empirical_quantile(&v, p);
                }
            }
        }
        Ok(out)
    }
}

/// Simulate `n_paths` trajectories of `h` steps from `y_last`. Each step
/// draws one stored posterior draw and one grid level per variable (unless
/// fixed by the scenario) and iterates `Y = v(U) + C(U) Y_prev`. Path `n`
/// uses stream `n` of `seed`.
pub fn forecast_paths(
    model: &QvarModel,
    y_last: ArrayView1<f64>,
    h: usize,
    n_paths: usize,
    seed: u64,
    scenario: &Scenario,
) -> Result<ForecastPaths> {
    let m = model.n_vars();
    if y_last.len() != m {
        return Err(dim(format!("initial state has {} entries, model has {m} variables", y_last.len())));
    }
    if h == 0 || n_paths == 0 {
        return Err(param("horizon and number of paths must be positive"));
    }
    let fixed = scenario.resolve(model, h)?;
    let (q, s_total) = (model.grid.len(), model.n_draws());
    let sims: Vec<(Array2<f64>, bool)> = (0..n_paths)
        .into_par_iter()
        .map(|n| {
            let mut rng = RngStream::new(seed, n as u64);
            let mut out = Array2::from_elem((h, m), f64::NAN);
            let mut y: Array1<f64> = y_last.to_owned();
            let mut levels = vec![ResolvedLevel::exact(0); m];
            for l in 0..h {
                let draw = rng.random_range(0..s_total);
                for i in 0..m {
                    levels[i] = match fixed[l][i] {
                        Some(r) => r,
                        None => ResolvedLevel::exact(rng.random_range(0..q)),
                    };
                }
                let st = model.structural_resolved(draw, &levels)?;
                y = &st.v + &st.c.dot(&y);
                let norm = y.dot(&y).sqrt();
                if !(norm <= DIVERGENCE_BOUND) {
                    return Ok((out, true));
                }
                out.row_mut(l).assign(&y);
            }
            Ok((out, false))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut paths = Array3::zeros((n_paths, h, m));
    let mut diverged = Vec::with_capacity(n_paths);
    for (n, (p, d)) in sims.into_iter().enumerate() {
        paths.index_axis_mut(Axis(0), n).assign(&p);
        diverged.push(d);
    }
    if diverged.iter().any(|d| *d) {
        log::warn!("{} of {n_paths} forecast paths diverged and are excluded", diverged.iter().filter(|d| **d).count());
    }
    Ok(ForecastPaths { paths, diverged })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StressResult {
    pub stressed: ForecastPaths,
    /// Every variable at the median; same seed as the stressed run.
    pub baseline: ForecastPaths,
}

/// Forecast under `scenario` and under the all-median baseline. With fixed
/// levels the spread across paths reflects posterior uncertainty only.
pub fn stress_test(
    model: &QvarModel,
    y_last: ArrayView1<f64>,
    scenario: &Scenario,
    h: usize,
    n_paths: usize,
    seed: u64,
) -> Result<StressResult> {
    let stressed = forecast_paths(model, y_last, h, n_paths, seed, scenario)?;
    let baseline = forecast_paths(model, y_last, h, n_paths, seed, &Scenario::median(model.n_vars(), h))?;
    Ok(StressResult { stressed, baseline })
}
