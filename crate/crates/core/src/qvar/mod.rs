//! Quantile vector autoregression of order one, estimated one equation at a
//! time under a recursive (lower-triangular) contemporaneous ordering.
//!
//! Equation `i` regresses `y_{i,t}` on `y_{1..i-1,t}` and all of `Y_{t-1}`.
//! Coefficient draws are kept on the original data scale so structural
//! matrices can be assembled directly.

mod backtest;
mod forecast;
mod irf;

pub use backtest::{backtest, BacktestCell, BacktestConfig, BacktestModel, BacktestReport};
pub use forecast::{forecast_paths, stress_test, ForecastPaths, Scenario, StressResult, DIVERGENCE_BOUND};
pub use irf::{qirf, QirfSpec, QirfSurface};

use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ald::QuantileGrid;
use crate::data::Dataset;
use crate::draws::{ModelKind, PosteriorDraws};
use crate::error::{dim, param, Error, Result};
use crate::rng::derive_seed;
use crate::sampler::{fit, SamplerConfig};
use crate::savs::sparsify_posterior;

/// Which coefficients feed the structural matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientSource {
    /// Raw posterior draws.
    Draws,
    /// Sparsified posterior draws (non-centred models only).
    SavsDraws,
    /// Posterior mean of the sparsified draws, a single "draw".
    SavsMean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QvarSpec {
    pub model: ModelKind,
    pub source: CoefficientSource,
    /// Allow off-grid quantile levels by linear interpolation of the
    /// coefficients in the level.
    pub interpolate: bool,
}

impl QvarSpec {
    pub fn new(model: ModelKind) -> Self {
        Self {
            model,
            source: CoefficientSource::Draws,
            interpolate: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.source != CoefficientSource::Draws && !self.model.is_noncentred() {
            return Err(Error::Unsupported(format!(
                "sparsified coefficients need a non-centred model, got {}",
                self.model.name()
            )));
        }
        Ok(())
    }
}

/// One estimated equation with coefficients on the original data scale.
#[derive(Clone, Debug)]
pub struct EquationFit {
    pub response: String,
    pub regressors: Vec<String>,
    /// `[draw, q]`.
    pub alpha: Array2<f64>,
    /// `[draw, q, k]`.
    pub beta: Array3<f64>,
    /// Standard deviation of the in-sample residuals of the posterior-mean
    /// fit at the level closest to the median.
    pub residual_sd_median: f64,
    /// Sampler output on the rescaled design.
    pub draws: PosteriorDraws,
}

#[derive(Clone, Debug)]
pub struct QvarModel {
    pub names: Vec<String>,
    pub grid: QuantileGrid,
    pub spec: QvarSpec,
    pub equations: Vec<EquationFit>,
}

/// Reduced-form quantities implied by one set of structural coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuralDraw {
    pub b: Array1<f64>,
    /// Strictly lower triangular.
    pub a0: Array2<f64>,
    pub a1: Array2<f64>,
    /// `(I - A0)^{-1} B`.
    pub v: Array1<f64>,
    /// `(I - A0)^{-1} A1`.
    pub c: Array2<f64>,
    /// `(I - A0)^{-1}`.
    pub d: Array2<f64>,
}

impl StructuralDraw {
    pub fn from_parts(b: Array1<f64>, a0: Array2<f64>, a1: Array2<f64>) -> Result<Self> {
        let m = b.len();
        if a0.dim() != (m, m) || a1.dim() != (m, m) {
            return Err(dim(format!("structural matrices must be {m} x {m}")));
        }
        for i in 0..m {
            for j in i..m {
                if a0[[i, j]] != 0.0 {
                    return Err(param("contemporaneous matrix must be strictly lower triangular"));
                }
            }
        }
        // Forward substitution with the unit lower-triangular I - A0.
        let mut d = Array2::<f64>::eye(m);
        for col in 0..m {
            for i in col + 1..m {
                let mut acc = 0.0;
                for j in col..i {
                    acc += a0[[i, j]] * d[[j, col]];
                }
                d[[i, col]] = acc;
            }
        }
        let v = d.dot(&b);
        let c = d.dot(&a1);
        Ok(Self { b, a0, a1, v, c, d })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }
}

/// A quantile level resolved against the grid: coefficients are
/// `(1 - w) c[lo] + w c[hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct ResolvedLevel {
    lo: usize,
    hi: usize,
    w: f64,
}

impl ResolvedLevel {
    pub(crate) fn exact(q: usize) -> Self {
        Self { lo: q, hi: q, w: 0.0 }
    }
}

fn lagged_design(data: ArrayView2<f64>, i: usize) -> Array2<f64> {
    let (t, m) = data.dim();
    let mut x = Array2::zeros((t - 1, i + m));
    x.slice_mut(s![.., ..i]).assign(&data.slice(s![1.., ..i]));
    x.slice_mut(s![.., i..]).assign(&data.slice(s![..t - 1, ..]));
    x
}

fn regressor_names(names: &[String], i: usize) -> Vec<String> {
    names[..i]
        .iter()
        .cloned()
        .chain(names.iter().map(|n| format!("{n}_lag1")))
        .collect()
}

fn median_index(grid: &QuantileGrid) -> usize {
    let mut best = 0;
    for (q, tau) in grid.taus().iter().enumerate() {
        if (tau - 0.5).abs() < (grid.tau(best) - 0.5).abs() {
            best = q;
        }
    }
    best
}

fn fit_equation(
    data: ArrayView2<f64>,
    names: &[String],
    i: usize,
    grid: &QuantileGrid,
    spec: &QvarSpec,
    cfg: &SamplerConfig,
) -> Result<EquationFit> {
    let x_raw = lagged_design(data, i);
    let y = data.slice(s![1.., i]).to_owned();
    let ds = Dataset::new(names[i].clone(), regressor_names(names, i), y, x_raw)?;
    let input = ds.chain_input(grid.len())?;
    let mut ecfg = cfg.clone();
    ecfg.seed = derive_seed(cfg.seed, i as u64);
    let draws = fit(spec.model, &input, grid, &ecfg)?;
    let (q, k) = (grid.len(), ds.n_covariates());
    let alpha_draws = draws.alpha.to_shape((draws.n_chains() * draws.n_draws(), q)).map_err(|e| dim(e.to_string()))?.to_owned();
    let beta_scaled: Array3<f64> = match spec.source {
        CoefficientSource::Draws => pool(&draws.beta)?,
        CoefficientSource::SavsDraws => pool(&sparsify_posterior(&draws, ds.x.view())?.beta(&draws)?)?,
        CoefficientSource::SavsMean => sparsify_posterior(&draws, ds.x.view())?.mean_beta(&draws)?.insert_axis(Axis(0)),
    };
    let alpha_scaled = if spec.source == CoefficientSource::SavsMean {
        alpha_draws.mean_axis(Axis(0)).expect("non-empty draws").insert_axis(Axis(0))
    } else {
        alpha_draws
    };
    let n = beta_scaled.len_of(Axis(0));
    let mut alpha = Array2::zeros((n, q));
    let mut beta = Array3::zeros((n, q, k));
    for sidx in 0..n {
        let (a, b) = ds
            .rescaling
            .back_transform_profile(alpha_scaled.row(sidx), beta_scaled.index_axis(Axis(0), sidx));
        alpha.row_mut(sidx).assign(&a);
        beta.index_axis_mut(Axis(0), sidx).assign(&b);
    }
    let qm = median_index(grid);
    let a_mean = alpha.column(qm).mean().expect("non-empty draws");
    let b_mean = beta.slice(s![.., qm, ..]).mean_axis(Axis(0)).expect("non-empty draws");
    let resid = &ds.y - &(ds.x_raw.dot(&b_mean) + a_mean);
    let residual_sd_median = resid.std(1.0);
    Ok(EquationFit {
        response: names[i].clone(),
        regressors: regressor_names(names, i),
        alpha,
        beta,
        residual_sd_median,
        draws,
    })
}

fn pool(a: &ndarray::Array4<f64>) -> Result<Array3<f64>> {
    let sh = a.shape();
    Ok(a.to_shape((sh[0] * sh[1], sh[2], sh[3])).map_err(|e| dim(e.to_string()))?.to_owned())
}

/// Estimate every equation of the system. `data` is `T x m` in the chosen
/// causal ordering.
pub fn fit_qvar(
    data: ArrayView2<f64>,
    names: &[String],
    grid: &QuantileGrid,
    spec: &QvarSpec,
    cfg: &SamplerConfig,
) -> Result<QvarModel> {
    spec.validate()?;
    let (t, m) = data.dim();
    if t < 2 || m == 0 {
        return Err(param("need at least two observations and one variable"));
    }
    if names.len() != m {
        return Err(dim(format!("{} names for {m} variables", names.len())));
    }
    for ((row, col), v) in data.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::Ingestion {
                row: row + 1,
                column: names[col].clone(),
                message: "non-finite value".into(),
            });
        }
    }
    let equations = (0..m)
        .into_par_iter()
        .map(|i| fit_equation(data, names, i, grid, spec, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(QvarModel {
        names: names.to_vec(),
        grid: grid.clone(),
        spec: spec.clone(),
        equations,
    })
}

impl QvarModel {
    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_draws(&self) -> usize {
        self.equations[0].alpha.nrows()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| param(format!("no variable named '{name}'")))
    }

    pub(crate) fn resolve(&self, level: f64) -> Result<ResolvedLevel> {
        if let Some(q) = self.grid.position(level) {
            return Ok(ResolvedLevel::exact(q));
        }
        let taus = self.grid.taus();
        if !self.spec.interpolate || level < taus[0] || level > taus[taus.len() - 1] {
            return Err(Error::LevelMismatch { level });
        }
        let hi = taus.iter().position(|&t| t > level).expect("level inside grid");
        let lo = hi - 1;
        Ok(ResolvedLevel {
            lo,
            hi,
            w: (level - taus[lo]) / (taus[hi] - taus[lo]),
        })
    }

    pub(crate) fn structural_resolved(&self, draw: usize, levels: &[ResolvedLevel]) -> Result<StructuralDraw> {
        let m = self.n_vars();
        if levels.len() != m {
            return Err(dim(format!("{} levels for {m} variables", levels.len())));
        }
        if draw >= self.n_draws() {
            return Err(param(format!("draw {draw} out of range ({} stored)", self.n_draws())));
        }
        let mut b = Array1::zeros(m);
        let mut a0 = Array2::zeros((m, m));
        let mut a1 = Array2::zeros((m, m));
        for (i, (eq, lv)) in self.equations.iter().zip(levels).enumerate() {
            let mix = |lo: f64, hi: f64| if lv.w == 0.0 { lo } else { (1.0 - lv.w) * lo + lv.w * hi };
            b[i] = mix(eq.alpha[[draw, lv.lo]], eq.alpha[[draw, lv.hi]]);
            for j in 0..i + m {
                let c = mix(eq.beta[[draw, lv.lo, j]], eq.beta[[draw, lv.hi, j]]);
                if j < i {
                    a0[[i, j]] = c;
                } else {
                    a1[[i, j - i]] = c;
                }
            }
        }
        StructuralDraw::from_parts(b, a0, a1)
    }

    /// Structural matrices of stored draw `draw` with equation `i` evaluated
    /// at quantile level `u[i]`.
    pub fn assemble_structural(&self, draw: usize, u: &[f64]) -> Result<StructuralDraw> {
        let levels = u.iter().map(|&l| self.resolve(l)).collect::<Result<Vec<_>>>()?;
        self.structural_resolved(draw, &levels)
    }
}
