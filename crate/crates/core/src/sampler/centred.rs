//! Centred sampler: slopes follow a random walk over the quantile grid
//! starting at a quantile-invariant level, with horseshoe-shrunk
//! increments.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use super::horseshoe::{HorseshoeBlock, HorseshoeState};
use super::{augmentation_step, draw_alpha, initial_augmentation, AlphaPrior, ChainInput, GibbsSampler, SamplerConfig};
use crate::ald::{AugmentationState, InverseGammaPrior, QuantileGrid};
use crate::banded::{precision_from_grams, weighted_gram, BandedSpd, DifferenceMatrix};
use crate::draws::Snapshot;
use crate::error::{dim, Result};
use crate::kernels::std_normal;
use crate::rng::RngStream;

#[derive(Clone, Debug, PartialEq)]
pub struct CentredState {
    /// `Q x K`, one row per quantile.
    pub beta: Array2<f64>,
    pub beta0: Array1<f64>,
    pub aug: AugmentationState,
    pub hs: HorseshoeState,
}

/// Level draw `N(K^{-1} S1^{-1} b1, K^{-1})`, `K = S1^{-1} + S0^{-1}`, with
/// diagonal prior variances `sigma1` and `sigma0`.
pub fn draw_beta0_centred<R: Rng + ?Sized>(
    beta_row1: &[f64],
    sigma1: &[f64],
    sigma0: &[f64],
    rng: &mut R,
) -> Result<Array1<f64>> {
    let k = beta_row1.len();
    if sigma1.len() != k || sigma0.len() != k {
        return Err(dim("level draw inputs differ in length"));
    }
    let mut out = Array1::zeros(k);
    for j in 0..k {
        if !(sigma1[j] > 0.0 && sigma0[j] > 0.0) {
            return Err(crate::error::param("prior variances must be positive"));
        }
        let p = 1.0 / sigma1[j] + 1.0 / sigma0[j];
        out[j] = beta_row1[j] / sigma1[j] / p + std_normal(rng) / p.sqrt();
    }
    Ok(out)
}

pub struct CentredSampler<'a> {
    input: &'a ChainInput,
    grid: &'a QuantileGrid,
    sigma_y_prior: InverseGammaPrior,
    alpha_prior: AlphaPrior,
    diff: Option<DifferenceMatrix>,
    pub state: CentredState,
    xb: Array2<f64>,
}

impl<'a> CentredSampler<'a> {
    pub fn new(input: &'a ChainInput, grid: &'a QuantileGrid, cfg: &SamplerConfig) -> Result<Self> {
        input.check_grid(grid)?;
        let (q, k, t) = (input.n_quantiles(), input.n_covariates(), input.n_obs());
        let state = CentredState {
            beta: Array2::zeros((q, k)),
            beta0: Array1::zeros(k),
            aug: initial_augmentation(input, grid),
            hs: HorseshoeState::new(q, k, t),
        };
        Ok(Self {
            input,
            grid,
            sigma_y_prior: cfg.sigma_y_prior,
            alpha_prior: cfg.alpha_prior,
            diff: if k > 0 { Some(DifferenceMatrix::new(q, k)?) } else { None },
            state,
            xb: Array2::zeros((q, t)),
        })
    }

    /// Replace the full state (used by joint-distribution tests).
    pub fn set_state(&mut self, state: CentredState) {
        self.state = state;
        self.refresh_xb();
    }

    fn refresh_xb(&mut self) {
        self.xb = self.state.beta.dot(&self.input.x().t());
    }

    /// Precision and linear term of the joint slope conditional, in
    /// quantile-major order.
    pub fn beta_conditional(&self) -> Result<(BandedSpd, Vec<f64>)> {
        let diff = self.diff.as_ref().ok_or_else(|| dim("model has no slopes"))?;
        let (q, k) = (self.input.n_quantiles(), self.input.n_covariates());
        let aug = &self.state.aug;
        let w = aug.obs_precision(self.grid);
        let mu = aug.mu(self.grid);
        let x = self.input.x();
        let mut state_prec = Vec::with_capacity(q * k);
        for qi in 0..q {
            for j in 0..k {
                state_prec.push(1.0 / self.state.hs.diff.variance(qi, j));
            }
        }
        let grams: Vec<Array2<f64>> = (0..q)
            .map(|qi| weighted_gram(x, w.row(qi).as_slice().expect("contiguous")))
            .collect();
        let prec = precision_from_grams(diff, &state_prec, &grams)?;
        let mut z = self.input.y().to_owned() - &mu;
        for qi in 0..q {
            let a = aug.alpha[qi];
            z.row_mut(qi).mapv_inplace(|v| v - a);
        }
        z *= &w;
        let lin_m = z.dot(&x);
        let mut lin: Vec<f64> = lin_m.iter().copied().collect();
        for j in 0..k {
            lin[j] += self.state.beta0[j] * state_prec[j];
        }
        Ok((prec, lin))
    }

    /// Rows `beta_q - beta_{q-1}` with `beta_0` taken as the level.
    pub fn deltas(&self) -> Array2<f64> {
        let b = &self.state.beta;
        let mut d = b.clone();
        for qi in 0..b.nrows() {
            for j in 0..b.ncols() {
                let prev = if qi == 0 { self.state.beta0[j] } else { b[[qi - 1, j]] };
                d[[qi, j]] = b[[qi, j]] - prev;
            }
        }
        d
    }

    fn hs_level_view(beta0: &Array1<f64>) -> ArrayView2<'_, f64> {
        beta0.view().insert_axis(ndarray::Axis(0))
    }

    fn alpha_extra(&self) -> Option<Vec<(f64, usize)>> {
        if self.alpha_prior != AlphaPrior::Difference {
            return None;
        }
        let a = &self.state.aug.alpha;
        Some(
            (0..a.len())
                .map(|qi| if qi == 0 { (0.0, 0) } else { ((a[qi] - a[qi - 1]).powi(2), 1) })
                .collect(),
        )
    }
}

impl GibbsSampler for CentredSampler<'_> {
    fn sweep(&mut self, rng: &mut RngStream) -> Result<()> {
        let (q, k) = (self.input.n_quantiles(), self.input.n_covariates());
        if k > 0 {
            let (prec, lin) = self.beta_conditional()?;
            let draw = prec.cholesky()?.sample(&lin, rng);
            self.state.beta = Array2::from_shape_vec((q, k), draw).expect("q*k draw");
            self.refresh_xb();
        }

        let delta = self.deltas();
        let extra = self.alpha_extra();
        self.state.hs.diff.update(delta.view(), extra.as_deref(), rng)?;

        if k > 0 {
            let s1: Vec<f64> = (0..k).map(|j| self.state.hs.diff.variance(0, j)).collect();
            let s0: Vec<f64> = (0..k).map(|j| self.state.hs.level.variance(0, j)).collect();
            let b1 = self.state.beta.row(0).to_vec();
            self.state.beta0 = draw_beta0_centred(&b1, &s1, &s0, rng)?;
        }
        let level: &mut HorseshoeBlock = &mut self.state.hs.level;
        level.update(Self::hs_level_view(&self.state.beta0), None, rng)?;

        let w = self.state.aug.obs_precision(self.grid);
        let ystar = &self.input.y() - &self.state.aug.mu(self.grid) - &self.xb;
        self.state.aug.alpha = draw_alpha(ystar.view(), w.view(), self.alpha_prior, self.state.hs.diff.nu2.view(), rng)?;

        augmentation_step(self.input, self.grid, self.xb.view(), &mut self.state.aug, &self.sigma_y_prior, rng);
        Ok(())
    }

    fn snapshot(&self, store_local_scales: bool) -> Snapshot {
        Snapshot {
            beta: self.state.beta.clone(),
            alpha: self.state.aug.alpha.clone(),
            sigma_y: self.state.aug.sigma_y.clone(),
            beta0: Some(self.state.beta0.clone()),
            nu2: Some(self.state.hs.diff.nu2.clone()),
            lambda2: store_local_scales.then(|| self.state.hs.diff.lambda2.clone()),
            sigma: None,
            beta_tilde: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn level_draw_equal_variances() {
        let mut rng = RngStream::new(5, 0);
        let n = 100_000;
        let mut m = 0.0;
        let mut v = 0.0;
        for _ in 0..n {
            let d = draw_beta0_centred(&[2.0], &[1.0], &[1.0], &mut rng).unwrap();
            m += d[0];
            v += d[0] * d[0];
        }
        m /= n as f64;
        v = v / n as f64 - m * m;
        assert!((m - 1.0).abs() < 0.01, "{m}");
        assert!((v - 0.5).abs() < 0.01, "{v}");
    }

    #[test]
    fn level_draw_diffuse_level_prior_tracks_first_row() {
        let mut rng = RngStream::new(5, 1);
        let d = draw_beta0_centred(&[3.0], &[1e-12], &[1e12], &mut rng).unwrap();
        assert!((d[0] - 3.0).abs() < 1e-5);
    }
}
