//! Non-centred sampler: `beta_q = beta0 + sigma_q * beta_tilde_q` where the
//! standardized states `beta_tilde` follow a unit-variance random walk over
//! the quantile grid and the scales `sigma` are treated as ordinary
//! regression coefficients under a horseshoe prior.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::horseshoe::HorseshoeState;
use super::{augmentation_step, draw_alpha, initial_augmentation, AlphaPrior, ChainInput, GibbsSampler, SamplerConfig};
use crate::ald::{AugmentationState, InverseGammaPrior, QuantileGrid};
use crate::banded::{precision_from_grams, weighted_gram, BandedSpd, DifferenceMatrix};
use crate::draws::Snapshot;
use crate::error::{dim, Error, Result};
use crate::kernels::{gig, std_normal};
use crate::rng::RngStream;

/// Order of the GIG conditional of the squared column rescaling factor.
pub const INTERWEAVE_GIG_ORDER: f64 = 0.0;

/// Columns with a scale this close to zero skip the level redraw.
const MIN_INTERWEAVE_SCALE: f64 = 1e-150;

#[derive(Clone, Debug, PartialEq)]
pub struct NonCentredState {
    pub beta0: Array1<f64>,
    /// `Q x K` standardized states.
    pub beta_tilde: Array2<f64>,
    /// `Q x K` signed scales.
    pub sigma: Array2<f64>,
    /// `diff` holds the scale shrinkage, `level` the level shrinkage.
    pub hs: HorseshoeState,
    pub aug: AugmentationState,
}

impl NonCentredState {
    /// Centred reconstruction `beta0 + sigma * beta_tilde`, `Q x K`.
    pub fn beta(&self) -> Array2<f64> {
        let mut b = &self.sigma * &self.beta_tilde;
        b += &self.beta0.view().insert_axis(Axis(0));
        b
    }
}

/// Posterior moments of the level by accumulating one quantile at a time:
/// `K_q = G_q + K_{q-1}`, `m_q = K_q^{-1}(c_q + K_{q-1} m_{q-1})` with
/// `K_0 = diag(1 / prior_var)` and `m_0 = 0`. Returns `(K_Q, m_Q)`.
pub fn accumulate_level_moments(
    grams: &[Array2<f64>],
    cross: ArrayView2<f64>,
    prior_var: &[f64],
) -> Result<(Array2<f64>, Array1<f64>)> {
    let k = prior_var.len();
    if cross.ncols() != k || cross.nrows() != grams.len() {
        return Err(dim("level accumulation inputs disagree"));
    }
    let mut kprev = Array2::<f64>::zeros((k, k));
    for j in 0..k {
        kprev[[j, j]] = 1.0 / prior_var[j];
    }
    let mut m = Array1::<f64>::zeros(k);
    for (g, c) in grams.iter().zip(cross.outer_iter()) {
        let rhs = &c + &kprev.dot(&m);
        let kq = &kprev + g;
        let chol = BandedSpd::from_dense(kq.view())?.cholesky()?;
        m = Array1::from(chol.solve(rhs.as_slice().expect("contiguous")));
        kprev = kq;
    }
    Ok((kprev, m))
}

pub struct NonCentredSampler<'a> {
    input: &'a ChainInput,
    grid: &'a QuantileGrid,
    sigma_y_prior: InverseGammaPrior,
    alpha_prior: AlphaPrior,
    interweave: bool,
    diff: Option<DifferenceMatrix>,
    pub state: NonCentredState,
    xb: Array2<f64>,
}

impl<'a> NonCentredSampler<'a> {
    pub fn new(input: &'a ChainInput, grid: &'a QuantileGrid, cfg: &SamplerConfig, interweave: bool) -> Result<Self> {
        input.check_grid(grid)?;
        if cfg.alpha_prior == AlphaPrior::Difference {
            return Err(Error::Unsupported(
                "the intercept difference prior is only available for the centred sampler".into(),
            ));
        }
        let (q, k, t) = (input.n_quantiles(), input.n_covariates(), input.n_obs());
        let mut hs = HorseshoeState::new(q, k, t);
        hs.diff.nu2.fill(1.0 / t as f64);
        let state = NonCentredState {
            beta0: Array1::zeros(k),
            beta_tilde: Array2::zeros((q, k)),
            sigma: Array2::from_elem((q, k), 0.1),
            hs,
            aug: initial_augmentation(input, grid),
        };
        Ok(Self {
            input,
            grid,
            sigma_y_prior: cfg.sigma_y_prior,
            alpha_prior: cfg.alpha_prior,
            interweave,
            diff: if k > 0 { Some(DifferenceMatrix::new(q, k)?) } else { None },
            state,
            xb: Array2::zeros((q, t)),
        })
    }

    pub fn set_state(&mut self, state: NonCentredState) {
        self.state = state;
        self.refresh_xb();
    }

    fn refresh_xb(&mut self) {
        self.xb = self.state.beta().dot(&self.input.x().t());
    }

    /// `y - alpha - mu`, `Q x T`.
    fn base_residual(&self) -> Array2<f64> {
        let mut e = &self.input.y() - &self.state.aug.mu(self.grid);
        for (qi, mut row) in e.outer_iter_mut().enumerate() {
            let a = self.state.aug.alpha[qi];
            row.mapv_inplace(|v| v - a);
        }
        e
    }

    fn grams(&self, w: &Array2<f64>) -> Vec<Array2<f64>> {
        let x = self.input.x();
        w.outer_iter()
            .map(|wr| weighted_gram(x, wr.as_slice().expect("contiguous")))
            .collect()
    }

    /// Level conditional as `(precision, linear term)`.
    pub fn beta0_conditional(&self) -> Result<(Array2<f64>, Array1<f64>)> {
        let w = self.state.aug.obs_precision(self.grid);
        let grams = self.grams(&w);
        self.beta0_conditional_with(&w, &grams)
    }

    fn beta0_conditional_with(&self, w: &Array2<f64>, grams: &[Array2<f64>]) -> Result<(Array2<f64>, Array1<f64>)> {
        let x = self.input.x();
        let st = &self.state;
        let mut yt = self.base_residual() - (&st.sigma * &st.beta_tilde).dot(&x.t());
        yt *= w;
        let cross = yt.dot(&x);
        let k = x.ncols();
        let v0: Vec<f64> = (0..k).map(|j| st.hs.level.variance(0, j)).collect();
        let (kq, m) = accumulate_level_moments(grams, cross.view(), &v0)?;
        let lin = kq.dot(&m);
        Ok((kq, lin))
    }

    /// `X' W_q (y - alpha_q - mu_q - X beta0)` for every quantile, `Q x K`.
    fn level_adjusted_cross(&self, w: &Array2<f64>) -> Array2<f64> {
        let x = self.input.x();
        let xb0 = x.dot(&self.state.beta0);
        let mut r = self.base_residual();
        r -= &xb0.view().insert_axis(Axis(0));
        r *= w;
        r.dot(&x)
    }

    /// Joint conditional of the standardized states in quantile-major order.
    pub fn beta_tilde_conditional(&self) -> Result<(BandedSpd, Vec<f64>)> {
        let w = self.state.aug.obs_precision(self.grid);
        let grams = self.grams(&w);
        let cross = self.level_adjusted_cross(&w);
        self.beta_tilde_conditional_with(&grams, &cross)
    }

    fn beta_tilde_conditional_with(&self, grams: &[Array2<f64>], cross: &Array2<f64>) -> Result<(BandedSpd, Vec<f64>)> {
        let diff = self.diff.as_ref().ok_or_else(|| dim("model has no slopes"))?;
        let sigma = &self.state.sigma;
        let scaled: Vec<Array2<f64>> = grams
            .iter()
            .enumerate()
            .map(|(qi, g)| scale_gram(g, sigma.row(qi).as_slice().expect("contiguous")))
            .collect();
        let prec = precision_from_grams(diff, &vec![1.0; diff.dim()], &scaled)?;
        let lin: Vec<f64> = (sigma * cross).iter().copied().collect();
        Ok((prec, lin))
    }

    /// Conditional of one quantile's scales as `(precision, linear term)`.
    pub fn sigma_conditional(&self, qi: usize) -> Result<(BandedSpd, Vec<f64>)> {
        let w = self.state.aug.obs_precision(self.grid);
        let grams = self.grams(&w);
        let cross = self.level_adjusted_cross(&w);
        self.sigma_conditional_with(qi, &grams[qi], &cross)
    }

    fn sigma_conditional_with(&self, qi: usize, gram: &Array2<f64>, cross: &Array2<f64>) -> Result<(BandedSpd, Vec<f64>)> {
        let bt = self.state.beta_tilde.row(qi);
        let k = bt.len();
        let mut p = scale_gram(gram, bt.as_slice().expect("contiguous"));
        for j in 0..k {
            p[[j, j]] += 1.0 / self.state.hs.diff.variance(qi, j);
        }
        let lin: Vec<f64> = (0..k).map(|j| bt[j] * cross[[qi, j]]).collect();
        Ok((BandedSpd::from_dense(p.view())?, lin))
    }

    /// Flip the sign of every scale column and its standardized states
    /// together with probability 1/2; the reconstruction is unchanged.
    pub fn permute_signs<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        permute_signs(&mut self.state, rng)
    }

    /// Column rescaling and level redraw with the centred coefficients held
    /// fixed; see [`asis_interweave`].
    pub fn interweave<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        asis_interweave(&mut self.state, rng)
    }
}

pub fn permute_signs<R: Rng + ?Sized>(state: &mut NonCentredState, rng: &mut R) {
    let k = state.sigma.ncols();
    for j in 0..k {
        if rng.random::<bool>() {
            state.sigma.column_mut(j).mapv_inplace(|v| -v);
            state.beta_tilde.column_mut(j).mapv_inplace(|v| -v);
        }
    }
}

/// Both moves leave the reconstruction `beta` unchanged, so the likelihood
/// drops out and only prior terms remain.
///
/// 1. Per column, rescale `sigma -> g sigma`, `beta_tilde -> beta_tilde / g`.
///    Under the multiplicative group the Jacobian cancels and `g^2` is
///    GIG(0, sum sigma^2 / var, sum of squared standardized increments).
/// 2. Redraw the level with `beta` held fixed: the standardized increments
///    are affine in `beta0`, giving a Gaussian conditional.
pub fn asis_interweave<R: Rng + ?Sized>(state: &mut NonCentredState, rng: &mut R) -> Result<()> {
    let (q, k) = state.sigma.dim();
    for j in 0..k {
        let mut a = 0.0;
        let mut b = 0.0;
        let mut prev = 0.0;
        for qi in 0..q {
            let s = state.sigma[[qi, j]];
            a += s * s / state.hs.diff.variance(qi, j);
            let bt = state.beta_tilde[[qi, j]];
            b += (bt - prev) * (bt - prev);
            prev = bt;
        }
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            continue;
        }
        let g = gig(INTERWEAVE_GIG_ORDER, a, b, rng).sqrt();
        if !(g > 0.0 && g.is_finite()) {
            continue;
        }
        state.sigma.column_mut(j).mapv_inplace(|v| v * g);
        state.beta_tilde.column_mut(j).mapv_inplace(|v| v / g);
    }

    let beta = state.beta();
    for j in 0..k {
        // Skipping depends on sigma only, which this move keeps fixed.
        if state.sigma.column(j).iter().any(|s| s.abs() < MIN_INTERWEAVE_SCALE) {
            continue;
        }
        // increment_q = d_q - c_q beta0 with 1 / sigma_0 = 0
        let mut prec = 1.0 / state.hs.level.variance(0, j);
        let mut lin = 0.0;
        let (mut inv_prev, mut ratio_prev) = (0.0, 0.0);
        for qi in 0..q {
            let inv = 1.0 / state.sigma[[qi, j]];
            let ratio = beta[[qi, j]] * inv;
            let c = inv - inv_prev;
            let d = ratio - ratio_prev;
            prec += c * c;
            lin += c * d;
            inv_prev = inv;
            ratio_prev = ratio;
        }
        let b0 = lin / prec + std_normal(rng) / prec.sqrt();
        state.beta0[j] = b0;
        for qi in 0..q {
            state.beta_tilde[[qi, j]] = (beta[[qi, j]] - b0) / state.sigma[[qi, j]];
        }
    }
    Ok(())
}

/// `diag(s) G diag(s)`.
fn scale_gram(g: &Array2<f64>, s: &[f64]) -> Array2<f64> {
    let k = s.len();
    Array2::from_shape_fn((k, k), |(a, b)| g[[a, b]] * s[a] * s[b])
}

impl GibbsSampler for NonCentredSampler<'_> {
    fn sweep(&mut self, rng: &mut RngStream) -> Result<()> {
        let (q, k) = (self.input.n_quantiles(), self.input.n_covariates());
        if k > 0 {
            let w = self.state.aug.obs_precision(self.grid);
            let grams = self.grams(&w);

            let (kq, lin) = self.beta0_conditional_with(&w, &grams)?;
            let chol = BandedSpd::from_dense(kq.view())?.cholesky()?;
            self.state.beta0 = Array1::from(chol.sample(lin.as_slice().expect("contiguous"), rng));
            if !self.interweave {
                let b0 = self.state.beta0.clone();
                self.state.hs.level.update(b0.view().insert_axis(Axis(0)), None, rng)?;
            }

            let cross = self.level_adjusted_cross(&w);
            let (prec, lin) = self.beta_tilde_conditional_with(&grams, &cross)?;
            let draw = prec.cholesky()?.sample(&lin, rng);
            self.state.beta_tilde = Array2::from_shape_vec((q, k), draw).expect("q*k draw");

            for qi in 0..q {
                let (p, l) = self.sigma_conditional_with(qi, &grams[qi], &cross)?;
                let d = p.cholesky()?.sample(&l, rng);
                self.state.sigma.row_mut(qi).assign(&Array1::from(d));
            }

            permute_signs(&mut self.state, rng);

            if self.interweave {
                asis_interweave(&mut self.state, rng)?;
                let b0 = self.state.beta0.clone();
                self.state.hs.level.update(b0.view().insert_axis(Axis(0)), None, rng)?;
            }
            let sigma = self.state.sigma.clone();
            self.state.hs.diff.update(sigma.view(), None, rng)?;
            self.refresh_xb();
        }

        let w = self.state.aug.obs_precision(self.grid);
        let ystar = &self.input.y() - &self.state.aug.mu(self.grid) - &self.xb;
        self.state.aug.alpha = draw_alpha(ystar.view(), w.view(), self.alpha_prior, self.state.hs.diff.nu2.view(), rng)?;

        augmentation_step(self.input, self.grid, self.xb.view(), &mut self.state.aug, &self.sigma_y_prior, rng);
        Ok(())
    }

    fn snapshot(&self, store_local_scales: bool) -> Snapshot {
        Snapshot {
            beta: self.state.beta(),
            alpha: self.state.aug.alpha.clone(),
            sigma_y: self.state.aug.sigma_y.clone(),
            beta0: Some(self.state.beta0.clone()),
            nu2: Some(self.state.hs.diff.nu2.clone()),
            lambda2: store_local_scales.then(|| self.state.hs.diff.lambda2.clone()),
            sigma: Some(self.state.sigma.clone()),
            beta_tilde: Some(self.state.beta_tilde.clone()),
        }
    }
}
