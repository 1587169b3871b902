//! Signal-adaptive variable selection: each posterior draw is projected onto
//! an exactly sparse vector with the closed-form soft-threshold rule using
//! penalty `1 / c_j^2`.

use ndarray::{Array1, Array2, Array3, Array4, ArrayView2, Axis};

use crate::draws::PosteriorDraws;
use crate::error::{dim, Error, Result};

#[inline]
fn project_one(c: f64, n: f64) -> f64 {
    if c == 0.0 || !(n > 0.0) {
        return 0.0;
    }
    let penalty = 1.0 / (c * c);
    let m = (c.abs() * n - penalty).max(0.0);
    c.signum() * m / n
}

/// Project one coefficient vector given the squared norms of the
/// corresponding design columns.
pub fn savs_project(coef: &[f64], design_columns_sqnorm: &[f64]) -> Result<Vec<f64>> {
    if coef.len() != design_columns_sqnorm.len() {
        return Err(dim("coefficients and column norms differ in length"));
    }
    Ok(coef
        .iter()
        .zip(design_columns_sqnorm)
        .map(|(&c, &n)| project_one(c, n))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparsifiedDraws {
    /// `[chain, draw, k]`.
    pub xi0: Array3<f64>,
    /// `[chain, draw, q, k]`.
    pub xi_sigma: Array4<f64>,
    /// Share of draws with a nonzero level coefficient, per covariate.
    pub inclusion0: Array1<f64>,
    /// Share of draws with a nonzero scale, `Q x K`.
    pub inclusion_sigma: Array2<f64>,
}

/// Sparsify the level and scale draws of a non-centred run. `x` is the
/// design the sampler saw.
pub fn sparsify_posterior(draws: &PosteriorDraws, x: ArrayView2<f64>) -> Result<SparsifiedDraws> {
    let (b0, sg, bt) = match (&draws.beta0, &draws.sigma, &draws.beta_tilde) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return Err(Error::Unsupported(
                "sparsification needs level, scale and standardized-state draws from a non-centred run".into(),
            ))
        }
    };
    let k = draws.n_covariates();
    if x.ncols() != k {
        return Err(dim(format!("design has {} columns, draws have {k}", x.ncols())));
    }
    let norms: Vec<f64> = (0..k).map(|j| x.column(j).iter().map(|v| v * v).sum()).collect();
    let (nc, nd, q) = (draws.n_chains(), draws.n_draws(), draws.n_quantiles());
    let mut xi0 = Array3::zeros((nc, nd, k));
    let mut xis = Array4::zeros((nc, nd, q, k));
    for c in 0..nc {
        for d in 0..nd {
            for j in 0..k {
                xi0[[c, d, j]] = project_one(b0[[c, d, j]], norms[j]);
            }
            for qi in 0..q {
                for j in 0..k {
                    let n = bt[[c, d, qi, j]].powi(2) * norms[j];
                    xis[[c, d, qi, j]] = project_one(sg[[c, d, qi, j]], n);
                }
            }
        }
    }
    let total = (nc * nd) as f64;
    let inclusion0 = xi0
        .mapv(|v| if v != 0.0 { 1.0 } else { 0.0 })
        .sum_axis(Axis(0))
        .sum_axis(Axis(0))
        / total;
    let inclusion_sigma = xis
        .mapv(|v| if v != 0.0 { 1.0 } else { 0.0 })
        .sum_axis(Axis(0))
        .sum_axis(Axis(0))
        / total;
    Ok(SparsifiedDraws {
        xi0,
        xi_sigma: xis,
        inclusion0,
        inclusion_sigma,
    })
}

impl SparsifiedDraws {
    /// Sparse slope draws `xi0 + xi_sigma * beta_tilde`, `[chain, draw, q, k]`.
    pub fn beta(&self, draws: &PosteriorDraws) -> Result<Array4<f64>> {
        let bt = draws
            .beta_tilde
            .as_ref()
            .ok_or_else(|| Error::Unsupported("no standardized-state draws".into()))?;
        if bt.raw_dim() != self.xi_sigma.raw_dim() {
            return Err(dim("sparsified draws do not match the posterior draws"));
        }
        let mut b = &self.xi_sigma * bt;
        b += &self.xi0.view().insert_axis(Axis(2));
        Ok(b)
    }

    /// Posterior mean of the sparse slopes, `Q x K`.
    pub fn mean_beta(&self, draws: &PosteriorDraws) -> Result<Array2<f64>> {
        let b = self.beta(draws)?;
        let s = b.shape().to_vec();
        Ok(b.to_shape((s[0] * s[1], s[2], s[3]))
            .map_err(|e| dim(e.to_string()))?
            .mean_axis(Axis(0))
            .expect("non-empty draws"))
    }
}
