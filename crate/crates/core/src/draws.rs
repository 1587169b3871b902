//! Posterior draw storage.

use ndarray::{s, Array1, Array2, Array3, Array4, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{dim, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Centred quantile-varying prior.
    Qvp,
    /// Non-centred parameterisation.
    Ncqvp,
    /// Non-centred with centred/non-centred interweaving.
    Asis,
    /// Independent flat-prior quantile regressions.
    Bqr,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Qvp => "qvp",
            ModelKind::Ncqvp => "ncqvp",
            ModelKind::Asis => "asis",
            ModelKind::Bqr => "bqr",
        }
    }

    pub fn is_noncentred(&self) -> bool {
        matches!(self, ModelKind::Ncqvp | ModelKind::Asis)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qvp" | "centred" | "centered" => Ok(ModelKind::Qvp),
            "ncqvp" | "noncentred" | "noncentered" => Ok(ModelKind::Ncqvp),
            "asis" => Ok(ModelKind::Asis),
            "bqr" => Ok(ModelKind::Bqr),
            other => Err(crate::error::param(format!("unknown model '{other}'"))),
        }
    }
}

/// One saved state of a chain.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub beta: Array2<f64>,
    pub alpha: Array1<f64>,
    pub sigma_y: Array1<f64>,
    pub beta0: Option<Array1<f64>>,
    pub nu2: Option<Array1<f64>>,
    pub lambda2: Option<Array2<f64>>,
    pub sigma: Option<Array2<f64>>,
    pub beta_tilde: Option<Array2<f64>>,
}

/// Draws indexed `[chain, draw, ...]`. Coefficients are on the scale of the
/// design matrix the sampler was given.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorDraws {
    pub model: ModelKind,
    pub taus: Vec<f64>,
    pub beta: Array4<f64>,
    pub alpha: Array3<f64>,
    pub sigma_y: Array3<f64>,
    pub beta0: Option<Array3<f64>>,
    pub nu2: Option<Array3<f64>>,
    pub lambda2: Option<Array4<f64>>,
    pub sigma: Option<Array4<f64>>,
    pub beta_tilde: Option<Array4<f64>>,
}

fn stack3(v: Vec<Array2<f64>>) -> Array3<f64> {
    let views: Vec<_> = v.iter().map(|a| a.view()).collect();
    ndarray::stack(Axis(0), &views).expect("uniform chain shapes")
}

fn stack4(v: Vec<Array3<f64>>) -> Array4<f64> {
    let views: Vec<_> = v.iter().map(|a| a.view()).collect();
    ndarray::stack(Axis(0), &views).expect("uniform chain shapes")
}

/// Accumulates the snapshots of one chain.
pub(crate) struct ChainRecorder {
    beta: Vec<Array2<f64>>,
    alpha: Vec<Array1<f64>>,
    sigma_y: Vec<Array1<f64>>,
    beta0: Vec<Array1<f64>>,
    nu2: Vec<Array1<f64>>,
    lambda2: Vec<Array2<f64>>,
    sigma: Vec<Array2<f64>>,
    beta_tilde: Vec<Array2<f64>>,
}

impl ChainRecorder {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            beta: Vec::with_capacity(n),
            alpha: Vec::with_capacity(n),
            sigma_y: Vec::with_capacity(n),
            beta0: Vec::new(),
            nu2: Vec::new(),
            lambda2: Vec::new(),
            sigma: Vec::new(),
            beta_tilde: Vec::new(),
        }
    }

    pub fn push(&mut self, s: Snapshot) {
        self.beta.push(s.beta);
        self.alpha.push(s.alpha);
        self.sigma_y.push(s.sigma_y);
        if let Some(v) = s.beta0 {
            self.beta0.push(v);
        }
        if let Some(v) = s.nu2 {
            self.nu2.push(v);
        }
        if let Some(v) = s.lambda2 {
            self.lambda2.push(v);
        }
        if let Some(v) = s.sigma {
            self.sigma.push(v);
        }
        if let Some(v) = s.beta_tilde {
            self.beta_tilde.push(v);
        }
    }
}

fn opt3(chains: Vec<Vec<Array1<f64>>>) -> Option<Array3<f64>> {
    if chains.iter().any(|c| c.is_empty()) {
        return None;
    }
    Some(stack3(
        chains
            .into_iter()
            .map(|c| {
                let v: Vec<_> = c.iter().map(|a| a.view()).collect();
                ndarray::stack(Axis(0), &v).expect("uniform draw shapes")
            })
            .collect(),
    ))
}

fn opt4(chains: Vec<Vec<Array2<f64>>>) -> Option<Array4<f64>> {
    if chains.iter().any(|c| c.is_empty()) {
        return None;
    }
    Some(stack4(
        chains
            .into_iter()
            .map(|c| {
                let v: Vec<_> = c.iter().map(|a| a.view()).collect();
                ndarray::stack(Axis(0), &v).expect("uniform draw shapes")
            })
            .collect(),
    ))
}

impl PosteriorDraws {
    pub(crate) fn from_chains(model: ModelKind, taus: Vec<f64>, chains: Vec<ChainRecorder>) -> Self {
        let mut beta = Vec::new();
        let mut alpha = Vec::new();
        let mut sigma_y = Vec::new();
        let mut beta0 = Vec::new();
        let mut nu2 = Vec::new();
        let mut lambda2 = Vec::new();
        let mut sigma = Vec::new();
        let mut beta_tilde = Vec::new();
        for c in chains {
            beta.push(c.beta);
            alpha.push(c.alpha);
            sigma_y.push(c.sigma_y);
            beta0.push(c.beta0);
            nu2.push(c.nu2);
            lambda2.push(c.lambda2);
            sigma.push(c.sigma);
            beta_tilde.push(c.beta_tilde);
        }
        Self {
            model,
            taus,
            beta: opt4(beta).expect("beta recorded"),
            alpha: opt3(alpha).expect("alpha recorded"),
            sigma_y: opt3(sigma_y).expect("sigma_y recorded"),
            beta0: opt3(beta0),
            nu2: opt3(nu2),
            lambda2: opt4(lambda2),
            sigma: opt4(sigma),
            beta_tilde: opt4(beta_tilde),
        }
    }

    pub fn n_chains(&self) -> usize {
        self.beta.shape()[0]
    }

    pub fn n_draws(&self) -> usize {
        self.beta.shape()[1]
    }

    pub fn n_quantiles(&self) -> usize {
        self.beta.shape()[2]
    }

    pub fn n_covariates(&self) -> usize {
        self.beta.shape()[3]
    }

    /// Posterior mean of the slopes, `Q x K`.
    pub fn mean_beta(&self) -> Array2<f64> {
        let s = self.beta.shape();
        self.beta
            .to_shape((s[0] * s[1], s[2], s[3]))
            .expect("contiguous draws")
            .mean_axis(Axis(0))
            .expect("non-empty draws")
    }

    pub fn mean_alpha(&self) -> Array1<f64> {
        let s = self.alpha.shape();
        self.alpha
            .to_shape((s[0] * s[1], s[2]))
            .expect("contiguous draws")
            .mean_axis(Axis(0))
            .expect("non-empty draws")
    }

    /// All draws of `beta[q, k]` pooled over chains.
    pub fn beta_pooled(&self, q: usize, k: usize) -> Vec<f64> {
        self.beta.slice(s![.., .., q, k]).iter().copied().collect()
    }

    pub fn alpha_pooled(&self, q: usize) -> Vec<f64> {
        self.alpha.slice(s![.., .., q]).iter().copied().collect()
    }

    /// Every scalar parameter trace as `(name, chains x draws)`.
    pub fn scalar_traces(&self) -> Vec<(String, Array2<f64>)> {
        let mut out = Vec::new();
        let (q, k) = (self.n_quantiles(), self.n_covariates());
        for qi in 0..q {
            out.push((format!("alpha[{qi}]"), self.alpha.slice(s![.., .., qi]).to_owned()));
        }
        for qi in 0..q {
            for j in 0..k {
                out.push((format!("beta[{qi},{j}]"), self.beta.slice(s![.., .., qi, j]).to_owned()));
            }
        }
        if let Some(b0) = &self.beta0 {
            for j in 0..k {
                out.push((format!("beta0[{j}]"), b0.slice(s![.., .., j]).to_owned()));
            }
        }
        if let Some(sg) = &self.sigma {
            for qi in 0..q {
                for j in 0..k {
                    out.push((
                        format!("abs_sigma[{qi},{j}]"),
                        sg.slice(s![.., .., qi, j]).mapv(f64::abs),
                    ));
                }
            }
        }
        for qi in 0..q {
            out.push((format!("sigma_y[{qi}]"), self.sigma_y.slice(s![.., .., qi]).to_owned()));
        }
        out
    }

    /// Named arrays with their dimension labels, in a fixed order.
    pub fn arrays(&self) -> Vec<(&'static str, Vec<&'static str>, ndarray::ArrayViewD<'_, f64>)> {
        let mut v = vec![
            ("beta", vec!["chain", "draw", "quantile", "covariate"], self.beta.view().into_dyn()),
            ("alpha", vec!["chain", "draw", "quantile"], self.alpha.view().into_dyn()),
            ("sigma_y", vec!["chain", "draw", "quantile"], self.sigma_y.view().into_dyn()),
        ];
        if let Some(a) = &self.beta0 {
            v.push(("beta0", vec!["chain", "draw", "covariate"], a.view().into_dyn()));
        }
        if let Some(a) = &self.nu2 {
            v.push(("nu2", vec!["chain", "draw", "quantile"], a.view().into_dyn()));
        }
        if let Some(a) = &self.lambda2 {
            v.push(("lambda2", vec!["chain", "draw", "quantile", "covariate"], a.view().into_dyn()));
        }
        if let Some(a) = &self.sigma {
            v.push(("sigma", vec!["chain", "draw", "quantile", "covariate"], a.view().into_dyn()));
        }
        if let Some(a) = &self.beta_tilde {
            v.push(("beta_tilde", vec!["chain", "draw", "quantile", "covariate"], a.view().into_dyn()));
        }
        v
    }

    /// Rebuild from named arrays as produced by [`PosteriorDraws::arrays`].
    pub fn from_arrays(
        model: ModelKind,
        taus: Vec<f64>,
        mut get: impl FnMut(&str) -> Option<ndarray::ArrayD<f64>>,
    ) -> Result<Self> {
        fn to3(a: ndarray::ArrayD<f64>) -> Result<Array3<f64>> {
            a.into_dimensionality().map_err(|e| dim(e.to_string()))
        }
        fn to4(a: ndarray::ArrayD<f64>) -> Result<Array4<f64>> {
            a.into_dimensionality().map_err(|e| dim(e.to_string()))
        }
        let beta = to4(get("beta").ok_or_else(|| dim("missing beta"))?)?;
        let alpha = to3(get("alpha").ok_or_else(|| dim("missing alpha"))?)?;
        let sigma_y = to3(get("sigma_y").ok_or_else(|| dim("missing sigma_y"))?)?;
        Ok(Self {
            model,
            taus,
            beta,
            alpha,
            sigma_y,
            beta0: get("beta0").map(to3).transpose()?,
            nu2: get("nu2").map(to3).transpose()?,
            lambda2: get("lambda2").map(to4).transpose()?,
            sigma: get("sigma").map(to4).transpose()?,
            beta_tilde: get("beta_tilde").map(to4).transpose()?,
        })
    }
}
