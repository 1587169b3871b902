//! Independent Bayesian quantile regressions with flat coefficient priors,
//! one per quantile level. Serves as the reference model in comparisons.

use ndarray::{s, Array1, Array2};

use super::{augmentation_step, initial_augmentation, ChainInput, GibbsSampler, SamplerConfig};
use crate::ald::{AugmentationState, InverseGammaPrior, QuantileGrid};
use crate::banded::{weighted_gram, BandedSpd};
use crate::draws::Snapshot;
use crate::error::{param, Result};
use crate::rng::RngStream;

pub struct BqrSampler<'a> {
    input: &'a ChainInput,
    grid: &'a QuantileGrid,
    sigma_y_prior: InverseGammaPrior,
    /// `[1, X]`, `T x (K + 1)`.
    z: Array2<f64>,
    /// `Q x K` slopes.
    pub beta: Array2<f64>,
    pub aug: AugmentationState,
    xb: Array2<f64>,
}

impl<'a> BqrSampler<'a> {
    pub fn new(input: &'a ChainInput, grid: &'a QuantileGrid, cfg: &SamplerConfig) -> Result<Self> {
        input.check_grid(grid)?;
        let (q, k, t) = (input.n_quantiles(), input.n_covariates(), input.n_obs());
        if t <= k {
            return Err(param(format!("flat-prior regression needs more observations ({t}) than coefficients ({})", k + 1)));
        }
        let mut z = Array2::ones((t, k + 1));
        z.slice_mut(s![.., 1..]).assign(&input.x());
        Ok(Self {
            input,
            grid,
            sigma_y_prior: cfg.sigma_y_prior,
            z,
            beta: Array2::zeros((q, k)),
            aug: initial_augmentation(input, grid),
            xb: Array2::zeros((q, t)),
        })
    }
}

impl GibbsSampler for BqrSampler<'_> {
    fn sweep(&mut self, rng: &mut RngStream) -> Result<()> {
        let w = self.aug.obs_precision(self.grid);
        let ystar = &self.input.y() - &self.aug.mu(self.grid);
        let lin_all = (&ystar * &w).dot(&self.z);
        for qi in 0..self.grid.len() {
            let g = weighted_gram(self.z.view(), w.row(qi).as_slice().expect("contiguous"));
            let chol = BandedSpd::from_dense(g.view())?.cholesky()?;
            let d = chol.sample(lin_all.row(qi).as_slice().expect("contiguous"), rng);
            self.aug.alpha[qi] = d[0];
            self.beta.row_mut(qi).assign(&Array1::from(d[1..].to_vec()));
        }
        self.xb = self.beta.dot(&self.input.x().t());
        augmentation_step(self.input, self.grid, self.xb.view(), &mut self.aug, &self.sigma_y_prior, rng);
        Ok(())
    }

    fn snapshot(&self, _store_local_scales: bool) -> Snapshot {
        Snapshot {
            beta: self.beta.clone(),
            alpha: self.aug.alpha.clone(),
            sigma_y: self.aug.sigma_y.clone(),
            beta0: None,
            nu2: None,
            lambda2: None,
            sigma: None,
            beta_tilde: None,
        }
    }
}
