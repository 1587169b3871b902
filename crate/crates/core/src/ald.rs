//! Asymmetric Laplace working likelihood and its normal / exponential
//! mixture representation.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim, param, Error, Result};
use crate::kernels::{gig, inv_gamma, std_normal};

/// Smallest latent scale kept after a draw; avoids infinite observation
/// precision when a residual is numerically zero.
pub(crate) const MIN_OMEGA: f64 = 1e-200;

/// Check loss `u (tau - 1[u < 0])`.
pub fn tick_loss(u: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(param(format!("quantile level must lie in (0, 1), got {tau}")));
    }
    Ok(check_loss(u, tau))
}

#[inline]
pub(crate) fn check_loss(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

/// Log density of the asymmetric Laplace distribution with location `loc`,
/// scale `scale` and skewness fixed by `tau`.
pub fn ald_log_density(y: f64, loc: f64, scale: f64, tau: f64) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(param(format!("ALD scale must be positive, got {scale}")));
    }
    let rho = tick_loss((y - loc) / scale, tau)?;
    Ok((tau * (1.0 - tau) / scale).ln() - rho)
}

/// Ordered quantile levels together with the mixture constants
/// `theta = (1 - 2 tau) / (tau (1 - tau))` and `zeta2 = 2 / (tau (1 - tau))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileGrid {
    taus: Vec<f64>,
    #[serde(skip)]
    theta: Vec<f64>,
    #[serde(skip)]
    zeta2: Vec<f64>,
}

impl QuantileGrid {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(param("quantile grid is empty"));
        }
        for (i, &t) in taus.iter().enumerate() {
            if !(t > 0.0 && t < 1.0) {
                return Err(param(format!("quantile level must lie in (0, 1), got {t}")));
            }
            if i > 0 && t <= taus[i - 1] {
                return Err(param("quantile levels must be strictly increasing"));
            }
        }
        let theta = taus.iter().map(|t| (1.0 - 2.0 * t) / (t * (1.0 - t))).collect();
        let zeta2 = taus.iter().map(|t| 2.0 / (t * (1.0 - t))).collect();
        Ok(Self { taus, theta, zeta2 })
    }

    /// `q` equally spaced interior levels `i / (q + 1)`.
    pub fn uniform(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(param("number of quantiles must be positive"));
        }
        Self::new((1..=q).map(|i| i as f64 / (q + 1) as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn tau(&self, q: usize) -> f64 {
        self.taus[q]
    }

    pub fn theta(&self, q: usize) -> f64 {
        self.theta[q]
    }

    pub fn zeta2(&self, q: usize) -> f64 {
        self.zeta2[q]
    }

    /// Index of `level` on the grid, matching to within 1e-9.
    pub fn position(&self, level: f64) -> Option<usize> {
        self.taus.iter().position(|t| (t - level).abs() < 1e-9)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseGammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl Default for InverseGammaPrior {
    fn default() -> Self {
        Self {
            shape: 0.1,
            scale: 0.1,
        }
    }
}

impl InverseGammaPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.shape > 0.0 && self.scale > 0.0) {
            return Err(param(format!(
                "inverse gamma prior needs positive shape and scale, got ({}, {})",
                self.shape, self.scale
            )));
        }
        Ok(())
    }
}

/// Latent quantities of the mixture representation, stored quantile-major
/// (`Q x T`).
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentationState {
    pub omega: Array2<f64>,
    pub sigma_y: Array1<f64>,
    pub alpha: Array1<f64>,
}

impl AugmentationState {
    pub fn new(q: usize, t: usize) -> Self {
        Self {
            omega: Array2::ones((q, t)),
            sigma_y: Array1::ones(q),
            alpha: Array1::zeros(q),
        }
    }

    /// Location shift `mu = theta * omega`.
    pub fn mu(&self, grid: &QuantileGrid) -> Array2<f64> {
        let mut mu = self.omega.clone();
        for (qi, mut row) in mu.outer_iter_mut().enumerate() {
            row *= grid.theta(qi);
        }
        mu
    }

    /// Observation precisions `1 / (zeta2 sigma_y omega)`.
    pub fn obs_precision(&self, grid: &QuantileGrid) -> Array2<f64> {
        let mut w = Array2::zeros(self.omega.raw_dim());
        for (qi, (mut wr, or)) in w.outer_iter_mut().zip(self.omega.outer_iter()).enumerate() {
            let c = grid.zeta2(qi) * self.sigma_y[qi];
            for (w, o) in wr.iter_mut().zip(or) {
                *w = 1.0 / (c * o);
            }
        }
        w
    }
}

/// Draw every latent scale given residuals `y - alpha - x'beta` (`Q x T`).
pub fn update_omega<R: Rng + ?Sized>(
    residual: ArrayView2<f64>,
    grid: &QuantileGrid,
    sigma_y: ArrayView1<f64>,
    rng: &mut R,
) -> Result<Array2<f64>> {
    if residual.nrows() != grid.len() || sigma_y.len() != grid.len() {
        return Err(dim(format!(
            "residuals have {} rows and sigma_y {} entries for a grid of {}",
            residual.nrows(),
            sigma_y.len(),
            grid.len()
        )));
    }
    let mut out = Array2::zeros(residual.raw_dim());
    for qi in 0..grid.len() {
        let s = sigma_y[qi];
        if !(s > 0.0) {
            return Err(param(format!("sigma_y must be positive, got {s}")));
        }
        for (o, &r) in out.row_mut(qi).iter_mut().zip(residual.row(qi)) {
            *o = draw_omega(r, grid.theta(qi), grid.zeta2(qi), s, rng);
        }
    }
    Ok(out)
}

#[inline]
pub(crate) fn draw_omega<R: Rng + ?Sized>(r: f64, theta: f64, zeta2: f64, sigma: f64, rng: &mut R) -> f64 {
    let a = theta * theta / (zeta2 * sigma) + 2.0 / sigma;
    let b = r * r / (zeta2 * sigma);
    gig(0.5, a, b, rng).max(MIN_OMEGA)
}

/// Draw the scale of one quantile's working likelihood given its residuals
/// (excluding the latent shift) and latent scales.
pub fn update_sigma_y<R: Rng + ?Sized>(
    residual: ArrayView1<f64>,
    omega: ArrayView1<f64>,
    theta: f64,
    zeta2: f64,
    prior: &InverseGammaPrior,
    rng: &mut R,
) -> f64 {
    let t = residual.len() as f64;
    let mut scale = prior.scale;
    for (&r, &w) in residual.iter().zip(omega) {
        let e = r - theta * w;
        scale += w + e * e / (2.0 * zeta2 * w);
    }
    inv_gamma(prior.shape + 1.5 * t, scale, rng)
}

/// Flat-prior draw of the quantile intercepts given adjusted responses
/// `y - mu - x'beta` and observation precisions, both `Q x T`.
pub fn update_alpha<R: Rng + ?Sized>(
    ystar: ArrayView2<f64>,
    obs_prec: ArrayView2<f64>,
    rng: &mut R,
) -> Result<Array1<f64>> {
    if ystar.raw_dim() != obs_prec.raw_dim() {
        return Err(dim("adjusted responses and precisions differ in shape"));
    }
    let mut out = Array1::zeros(ystar.nrows());
    for (qi, (yr, wr)) in ystar.outer_iter().zip(obs_prec.outer_iter()).enumerate() {
        let (prec, lin) = weighted_sums(yr, wr);
        if !(prec > 0.0 && prec.is_finite()) {
            return Err(Error::NumericDomain(format!("total precision of intercept {qi} is {prec}")));
        }
        out[qi] = lin / prec + std_normal(rng) / prec.sqrt();
    }
    Ok(out)
}

#[inline]
pub(crate) fn weighted_sums(y: ArrayView1<f64>, w: ArrayView1<f64>) -> (f64, f64) {
    let mut p = 0.0;
    let mut l = 0.0;
    for (&yv, &wv) in y.iter().zip(w) {
        p += wv;
        l += wv * yv;
    }
    (p, l)
}
