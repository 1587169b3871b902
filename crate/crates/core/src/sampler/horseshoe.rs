//! Horseshoe hyperparameters in their inverse-gamma mixture form.
//!
//! A block holds `G` groups of `K` coefficients. Group `g` has a global
//! scale `nu2[g]` with half-Cauchy prior of scale `sqrt(global_scale2)` and
//! every coefficient has its own standard half-Cauchy local scale.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use crate::error::{dim, Result};
use crate::kernels::inv_gamma;

/// Floor applied to prior variances entering a precision matrix. Keeps the
/// banded factorization well conditioned when the horseshoe collapses a
/// scale towards zero.
pub const MIN_STATE_VARIANCE: f64 = 1e-10;

const HYPER_MIN: f64 = 1e-100;
const HYPER_MAX: f64 = 1e100;

#[inline]
fn clamp_hyper(v: f64) -> f64 {
    if v.is_nan() {
        HYPER_MAX
    } else {
        v.clamp(HYPER_MIN, HYPER_MAX)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HorseshoeBlock {
    pub nu2: Array1<f64>,
    pub xi_nu: Array1<f64>,
    pub lambda2: Array2<f64>,
    pub xi_lambda: Array2<f64>,
    pub global_scale2: f64,
}

impl HorseshoeBlock {
    pub fn new(groups: usize, k: usize, global_scale2: f64) -> Self {
        Self {
            nu2: Array1::from_elem(groups, global_scale2),
            xi_nu: Array1::from_elem(groups, global_scale2),
            lambda2: Array2::ones((groups, k)),
            xi_lambda: Array2::ones((groups, k)),
            global_scale2,
        }
    }

    pub fn groups(&self) -> usize {
        self.nu2.len()
    }

    /// Prior variance `nu2[g] * lambda2[g, j]`, floored at
    /// [`MIN_STATE_VARIANCE`].
    #[inline]
    pub fn variance(&self, g: usize, j: usize) -> f64 {
        (self.nu2[g] * self.lambda2[[g, j]]).max(MIN_STATE_VARIANCE)
    }

    pub fn variances(&self) -> Array2<f64> {
        Array2::from_shape_fn(self.lambda2.raw_dim(), |(g, j)| self.variance(g, j))
    }

    /// One Gibbs pass over all hyperparameters given the coefficients
    /// (`G x K`). `extra[g]`, when present, is a sum of squares of
    /// additional coefficients sharing the global scale of group `g` without
    /// a local scale, together with their count.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        coef: ArrayView2<f64>,
        extra: Option<&[(f64, usize)]>,
        rng: &mut R,
    ) -> Result<()> {
        if coef.raw_dim() != self.lambda2.raw_dim() {
            return Err(dim(format!(
                "horseshoe block is {:?}, coefficients are {:?}",
                self.lambda2.dim(),
                coef.dim()
            )));
        }
        let k = coef.ncols();
        for g in 0..self.groups() {
            let mut ss = 0.0;
            for j in 0..k {
                let d = coef[[g, j]];
                ss += d * d / (2.0 * self.lambda2[[g, j]]);
            }
            let mut shape = (k as f64 + 1.0) / 2.0;
            if let Some(e) = extra {
                let (sq, n) = e[g];
                ss += sq / 2.0;
                shape += n as f64 / 2.0;
            }
            self.nu2[g] = clamp_hyper(inv_gamma(shape, 1.0 / self.xi_nu[g] + ss, rng));
            self.xi_nu[g] = clamp_hyper(inv_gamma(1.0, 1.0 / self.global_scale2 + 1.0 / self.nu2[g], rng));
            for j in 0..k {
                let d = coef[[g, j]];
                let l = inv_gamma(1.0, 1.0 / self.xi_lambda[[g, j]] + d * d / (2.0 * self.nu2[g]), rng);
                self.lambda2[[g, j]] = clamp_hyper(l);
                self.xi_lambda[[g, j]] = clamp_hyper(inv_gamma(1.0, 1.0 + 1.0 / self.lambda2[[g, j]], rng));
            }
        }
        Ok(())
    }
}

/// Hyperparameters of the quantile-difference block (`Q` groups) and the
/// quantile-invariant level block (one group).
#[derive(Clone, Debug, PartialEq)]
pub struct HorseshoeState {
    pub diff: HorseshoeBlock,
    pub level: HorseshoeBlock,
}

impl HorseshoeState {
    /// Global scales `1/sqrt(T)` for the differences and `1/sqrt(TQ)` for the
    /// level.
    pub fn new(q: usize, k: usize, t: usize) -> Self {
        Self {
            diff: HorseshoeBlock::new(q, k, 1.0 / t as f64),
            level: HorseshoeBlock::new(1, k, 1.0 / (t * q) as f64),
        }
    }
}

/// Update both blocks given quantile differences `delta` (`Q x K`, first
/// row `beta_1 - beta_0`) and the level `beta0`.
pub fn update_horseshoe<R: Rng + ?Sized>(
    delta: ArrayView2<f64>,
    beta0: &[f64],
    hs: &mut HorseshoeState,
    rng: &mut R,
) -> Result<()> {
    hs.diff.update(delta, None, rng)?;
    let b0 = ArrayView2::from_shape((1, beta0.len()), beta0).map_err(|e| dim(e.to_string()))?;
    hs.level.update(b0, None, rng)
}
