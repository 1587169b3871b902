//! Location-scale data generating processes for the simulation study.
//!
//! `y = alpha0 + beta'x + (eta0 + sum_k rho_k eta1_k x_k) eps` with
//! `x` on `[0, 1]^K` and `eps ~ N(0, 1)`. Throughout `alpha0 = 0` and
//! `eta0 = 1`, so the intercept profile is the standard normal quantile.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ald::QuantileGrid;
use crate::data::Dataset;
use crate::error::{param, Result};
use crate::kernels::{normal_cdf, normal_quantile, std_normal};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RhoRule {
    ConstantOnes,
    /// `rho_k = 1[eps > Phi^{-1}(upper) or eps <= Phi^{-1}(lower)]` for the
    /// listed covariates and one for all others.
    TailIndicator { indices: Vec<usize>, lower: f64, upper: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub id: usize,
    pub k: usize,
    pub beta: Vec<f64>,
    pub eta1: Vec<f64>,
    pub rho_rule: RhoRule,
    pub alpha0: f64,
    pub eta0: f64,
}

fn rep(v: f64, n: usize) -> Vec<f64> {
    vec![v; n]
}

impl DgpSpec {
    /// The five designs of the simulation study.
    pub fn standard(id: usize) -> Result<Self> {
        let (k, beta, eta1, rho_rule) = match id {
            1 => (4, rep(1.0, 4), rep(0.1, 4), RhoRule::ConstantOnes),
            2 => (
                10,
                [rep(1.0, 4), rep(0.0, 6)].concat(),
                [rep(0.1, 4), rep(0.0, 6)].concat(),
                RhoRule::ConstantOnes,
            ),
            3 => (
                7,
                rep(1.0, 7),
                [rep(0.1, 3), rep(0.0, 4)].concat(),
                RhoRule::ConstantOnes,
            ),
            4 => (
                10,
                [rep(1.0, 4), rep(0.0, 6)].concat(),
                [rep(0.1, 8), rep(0.0, 2)].concat(),
                RhoRule::TailIndicator {
                    indices: (4..8).collect(),
                    lower: 0.1,
                    upper: 0.9,
                },
            ),
            5 => (4, rep(1.0, 4), vec![0.1, 0.1, 1.0, 1.0], RhoRule::ConstantOnes),
            _ => return Err(param(format!("unknown data generating process {id} (expected 1..5)"))),
        };
        Ok(Self {
            id,
            k,
            beta,
            eta1,
            rho_rule,
            alpha0: 0.0,
            eta0: 1.0,
        })
    }

    /// Covariates whose true slope is zero at every quantile.
    pub fn null_covariates(&self) -> Vec<usize> {
        (0..self.k)
            .filter(|&j| self.beta[j] == 0.0 && self.eta1[j] == 0.0)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.beta.len() != self.k || self.eta1.len() != self.k {
            return Err(param("coefficient vectors do not match K"));
        }
        if let RhoRule::TailIndicator { indices, .. } = &self.rho_rule {
            if indices.iter().any(|&i| i >= self.k) {
                return Err(param("tail indicator index out of range"));
            }
        }
        Ok(())
    }
}

/// Covariates on `[0, 1]^K`: independent uniforms, or a Gaussian copula
/// with equicorrelation `correlation` followed by a column min-max map.
pub fn generate_covariates<R: Rng + ?Sized>(k: usize, t: usize, correlation: f64, rng: &mut R) -> Result<Array2<f64>> {
    if !(0.0..1.0).contains(&correlation) {
        return Err(param(format!("correlation must lie in [0, 1), got {correlation}")));
    }
    if correlation == 0.0 {
        return Ok(Array2::from_shape_simple_fn((t, k), || rng.random::<f64>()));
    }
    let (a, b) = (correlation.sqrt(), (1.0 - correlation).sqrt());
    let mut x = Array2::zeros((t, k));
    for i in 0..t {
        let common = std_normal(rng);
        for j in 0..k {
            x[[i, j]] = normal_cdf(a * common + b * std_normal(rng));
        }
    }
    for mut col in x.columns_mut() {
        let lo = col.fold(f64::INFINITY, |m, v| m.min(*v));
        let hi = col.fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        if hi > lo {
            col.mapv_inplace(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0));
        }
    }
    Ok(x)
}

/// Response for given covariates.
pub fn generate_response<R: Rng + ?Sized>(spec: &DgpSpec, x: &Array2<f64>, rng: &mut R) -> Result<Array1<f64>> {
    spec.validate()?;
    let (lo_thr, hi_thr, tail) = match &spec.rho_rule {
        RhoRule::ConstantOnes => (f64::NEG_INFINITY, f64::INFINITY, Vec::new()),
        RhoRule::TailIndicator { indices, lower, upper } => (normal_quantile(*lower), normal_quantile(*upper), indices.clone()),
    };
    let mut y = Array1::zeros(x.nrows());
    for (i, row) in x.outer_iter().enumerate() {
        let eps = std_normal(rng);
        let in_tail = eps > hi_thr || eps <= lo_thr;
        let mut loc = spec.alpha0;
        let mut scale = spec.eta0;
        for j in 0..spec.k {
            loc += spec.beta[j] * row[j];
            let rho = if tail.contains(&j) && !in_tail { 0.0 } else { 1.0 };
            scale += rho * spec.eta1[j] * row[j];
        }
        y[i] = loc + scale * eps;
    }
    Ok(y)
}

pub fn generate<R: Rng + ?Sized>(spec: &DgpSpec, t: usize, correlation: f64, rng: &mut R) -> Result<Dataset> {
    if t == 0 {
        return Err(param("need at least one observation"));
    }
    spec.validate()?;
    let x = generate_covariates(spec.k, t, correlation, rng)?;
    let y = generate_response(spec, &x, rng)?;
    let names = (1..=spec.k).map(|j| format!("x{j}")).collect();
    Dataset::new("y".into(), names, y, x)
}

/// True slope profile (`Q x K`) and intercepts on the original covariate
/// scale. Tail-indicator covariates only vary at levels at or beyond the
/// indicator thresholds.
pub fn true_quantile_coefficients(spec: &DgpSpec, grid: &QuantileGrid) -> Result<(Array2<f64>, Array1<f64>)> {
    spec.validate()?;
    let q = grid.len();
    let mut b = Array2::zeros((q, spec.k));
    let mut a = Array1::zeros(q);
    for qi in 0..q {
        let tau = grid.tau(qi);
        let z = normal_quantile(tau);
        a[qi] = spec.alpha0 + spec.eta0 * z;
        for j in 0..spec.k {
            let active = match &spec.rho_rule {
                RhoRule::ConstantOnes => true,
                RhoRule::TailIndicator { indices, lower, upper } => {
                    !indices.contains(&j) || tau >= upper - 1e-12 || tau <= lower + 1e-12
                }
            };
            b[[qi, j]] = spec.beta[j] + if active { spec.eta1[j] * z } else { 0.0 };
        }
    }
    Ok((b, a))
}
