//! Gibbs samplers for the joint quantile regression models and the shared
//! chain driver.

pub mod baseline;
pub mod centred;
pub mod horseshoe;
pub mod noncentred;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ald::{check_loss, draw_omega, update_sigma_y, weighted_sums, AugmentationState, InverseGammaPrior, QuantileGrid};
use crate::banded::BandedSpd;
use crate::draws::{ChainRecorder, ModelKind, PosteriorDraws, Snapshot};
use crate::error::{dim, param, Error, Result};
use crate::kernels::std_normal;
use crate::rng::RngStream;

pub use baseline::BqrSampler;
pub use centred::{draw_beta0_centred, CentredSampler, CentredState};
pub use horseshoe::{update_horseshoe, HorseshoeBlock, HorseshoeState, MIN_STATE_VARIANCE};
pub use noncentred::{NonCentredSampler, NonCentredState};

/// Prior on the quantile intercepts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AlphaPrior {
    Flat,
    /// Independent `N(0, variance)` intercepts.
    Normal { variance: f64 },
    /// Flat first intercept; successive differences `N(0, nu_q^2)` sharing
    /// the global shrinkage scale of the slope differences.
    Difference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    pub burnin: usize,
    /// Saved draws per chain.
    pub draws: usize,
    pub thin: usize,
    pub seed: u64,
    pub sigma_y_prior: InverseGammaPrior,
    pub alpha_prior: AlphaPrior,
    /// Keep every local shrinkage scale (memory heavy for long runs).
    pub store_local_scales: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            burnin: 10_000,
            draws: 15_000,
            thin: 1,
            seed: 1,
            sigma_y_prior: InverseGammaPrior::default(),
            alpha_prior: AlphaPrior::Flat,
            store_local_scales: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.draws == 0 || self.thin == 0 {
            return Err(param("chains, draws and thin must all be at least 1"));
        }
        if let AlphaPrior::Normal { variance } = self.alpha_prior {
            if !(variance > 0.0) {
                return Err(param("intercept prior variance must be positive"));
            }
        }
        self.sigma_y_prior.validate()
    }
}

/// Design (`T x K`) and responses (`Q x T`, one row per quantile). The usual
/// model repeats the same response in every row.
#[derive(Clone, Debug)]
pub struct ChainInput {
    x: Array2<f64>,
    y: Array2<f64>,
}

impl ChainInput {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        if x.nrows() != y.ncols() {
            return Err(dim(format!("design has {} rows, responses have {} columns", x.nrows(), y.ncols())));
        }
        if x.nrows() == 0 {
            return Err(param("no observations"));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericDomain("non-finite value in data".into()));
        }
        Ok(Self { x, y })
    }

    pub fn replicated(x: Array2<f64>, y: ArrayView1<f64>, q: usize) -> Result<Self> {
        let yy = Array2::from_shape_fn((q, y.len()), |(_, t)| y[t]);
        Self::new(x, yy)
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView2<'_, f64> {
        self.y.view()
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_covariates(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_quantiles(&self) -> usize {
        self.y.nrows()
    }

    pub fn set_response(&mut self, y: Array2<f64>) -> Result<()> {
        if y.raw_dim() != self.y.raw_dim() {
            return Err(dim("replacement response has a different shape"));
        }
        self.y = y;
        Ok(())
    }

    pub(crate) fn check_grid(&self, grid: &QuantileGrid) -> Result<()> {
        if grid.len() != self.n_quantiles() {
            return Err(dim(format!(
                "grid has {} levels, responses have {} rows",
                grid.len(),
                self.n_quantiles()
            )));
        }
        Ok(())
    }
}

pub trait GibbsSampler {
    fn sweep(&mut self, rng: &mut RngStream) -> Result<()>;
    fn snapshot(&self, store_local_scales: bool) -> Snapshot;
}

pub(crate) fn run_chain<S: GibbsSampler>(sampler: &mut S, cfg: &SamplerConfig, chain: usize) -> Result<ChainRecorder> {
    let mut rng = RngStream::new(cfg.seed, chain as u64);
    let mut rec = ChainRecorder::with_capacity(cfg.draws);
    let total = cfg.burnin + cfg.draws * cfg.thin;
    for it in 0..total {
        sampler.sweep(&mut rng).map_err(|e| Error::Sampler {
            chain,
            iteration: it,
            source: Box::new(e),
        })?;
        if it >= cfg.burnin && (it - cfg.burnin) % cfg.thin == cfg.thin - 1 {
            rec.push(sampler.snapshot(cfg.store_local_scales));
        }
    }
    Ok(rec)
}

/// Run `cfg.chains` independent chains of `model` in parallel. Chain `c`
/// uses stream `c` of `cfg.seed`, so output does not depend on scheduling.
pub fn fit(model: ModelKind, input: &ChainInput, grid: &QuantileGrid, cfg: &SamplerConfig) -> Result<PosteriorDraws> {
    cfg.validate()?;
    input.check_grid(grid)?;
    let chains: Vec<Result<ChainRecorder>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| match model {
            ModelKind::Qvp => {
                let mut s = CentredSampler::new(input, grid, cfg)?;
                run_chain(&mut s, cfg, c)
            }
            ModelKind::Ncqvp | ModelKind::Asis => {
                let mut s = NonCentredSampler::new(input, grid, cfg, model == ModelKind::Asis)?;
                run_chain(&mut s, cfg, c)
            }
            ModelKind::Bqr => {
                let mut s = BqrSampler::new(input, grid, cfg)?;
                run_chain(&mut s, cfg, c)
            }
        })
        .collect();
    let chains = chains.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(PosteriorDraws::from_chains(model, grid.taus().to_vec(), chains))
}

pub fn run_centred_chain(input: &ChainInput, grid: &QuantileGrid, cfg: &SamplerConfig) -> Result<PosteriorDraws> {
    fit(ModelKind::Qvp, input, grid, cfg)
}

pub fn run_noncentred_chain(
    input: &ChainInput,
    grid: &QuantileGrid,
    cfg: &SamplerConfig,
    interweave: bool,
) -> Result<PosteriorDraws> {
    fit(if interweave { ModelKind::Asis } else { ModelKind::Ncqvp }, input, grid, cfg)
}

/// Starting values: intercepts at the empirical quantiles, working-likelihood
/// scales at the mean check loss around them, latent scales at their prior
/// mean.
pub(crate) fn initial_augmentation(input: &ChainInput, grid: &QuantileGrid) -> AugmentationState {
    let (q, t) = (input.n_quantiles(), input.n_obs());
    let mut aug = AugmentationState::new(q, t);
    for qi in 0..q {
        let tau = grid.tau(qi);
        let mut row: Vec<f64> = input.y.row(qi).to_vec();
        row.sort_by(|a, b| a.total_cmp(b));
        let a = crate::eval::metrics::empirical_quantile(&row, tau);
        let scale = row.iter().map(|v| check_loss(v - a, tau)).sum::<f64>() / t as f64;
        let scale = if scale > 0.0 { scale } else { 1e-3 * (1.0 + a.abs()) };
        aug.alpha[qi] = a;
        aug.sigma_y[qi] = scale;
        aug.omega.row_mut(qi).fill(scale);
    }
    aug
}

/// Intercept draw given adjusted responses `y - mu - x'beta` (`Q x T`).
pub(crate) fn draw_alpha<R: Rng + ?Sized>(
    ystar: ArrayView2<f64>,
    w: ArrayView2<f64>,
    prior: AlphaPrior,
    nu2: ArrayView1<f64>,
    rng: &mut R,
) -> Result<Array1<f64>> {
    let q = ystar.nrows();
    let mut out = Array1::zeros(q);
    match prior {
        AlphaPrior::Flat | AlphaPrior::Normal { .. } => {
            let pp = match prior {
                AlphaPrior::Normal { variance } => 1.0 / variance,
                _ => 0.0,
            };
            for qi in 0..q {
                let (p, l) = weighted_sums(ystar.row(qi), w.row(qi));
                let p = p + pp;
                out[qi] = l / p + std_normal(rng) / p.sqrt();
            }
        }
        AlphaPrior::Difference => {
            let mut prec = BandedSpd::zeros(q, 1);
            let mut lin = vec![0.0; q];
            for qi in 0..q {
                let (p, l) = weighted_sums(ystar.row(qi), w.row(qi));
                prec.add(qi, qi, p);
                lin[qi] = l;
                if qi > 0 {
                    let s = 1.0 / nu2[qi].max(MIN_STATE_VARIANCE);
                    prec.add(qi, qi, s);
                    prec.add(qi - 1, qi - 1, s);
                    prec.add(qi, qi - 1, -s);
                }
            }
            let draw = prec.cholesky()?.sample(&lin, rng);
            out.assign(&Array1::from(draw));
        }
    }
    Ok(out)
}

/// Latent scale and working-likelihood scale update given the fitted
/// location `alpha_q + x'beta_q` (passed as `xb` without the intercept).
pub(crate) fn augmentation_step<R: Rng + ?Sized>(
    input: &ChainInput,
    grid: &QuantileGrid,
    xb: ArrayView2<f64>,
    aug: &mut AugmentationState,
    prior: &InverseGammaPrior,
    rng: &mut R,
) {
    let t = input.n_obs();
    let mut r = vec![0.0; t];
    for qi in 0..grid.len() {
        let (theta, zeta2) = (grid.theta(qi), grid.zeta2(qi));
        let s = aug.sigma_y[qi];
        let a = aug.alpha[qi];
        let yrow = input.y.row(qi);
        let xrow = xb.row(qi);
        let mut orow = aug.omega.row_mut(qi);
        for ti in 0..t {
            r[ti] = yrow[ti] - a - xrow[ti];
            orow[ti] = draw_omega(r[ti], theta, zeta2, s, rng);
        }
        aug.sigma_y[qi] = update_sigma_y(ArrayView1::from(&r[..]), orow.view(), theta, zeta2, prior, rng);
    }
}
