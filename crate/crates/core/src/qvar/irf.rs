//! Quantile impulse responses.

use ndarray::{Array1, Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use super::QvarModel;
use crate::error::{param, Result};
use crate::eval::metrics::empirical_quantile;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QirfSpec {
    pub shock_var: usize,
    /// Shock magnitude; defaults to the median-level residual standard
    /// deviation of the shocked equation.
    pub shock_size: Option<f64>,
    pub responder: usize,
    /// Levels of the responding equation; defaults to the fitted grid.
    pub response_levels: Option<Vec<f64>>,
    /// Level of every other equation.
    pub fixed_level: f64,
    pub horizon: usize,
    /// Coverage of the band across posterior draws.
    pub band: f64,
}

impl QirfSpec {
    pub fn new(shock_var: usize, responder: usize, horizon: usize) -> Self {
        Self {
            shock_var,
            shock_size: None,
            responder,
            response_levels: None,
            fixed_level: 0.5,
            horizon,
            band: 0.95,
        }
    }
}

/// Response of one variable, indexed `[horizon, level]` with horizon 0 the
/// impact period.
#[derive(Clone, Debug, PartialEq)]
pub struct QirfSurface {
    pub levels: Vec<f64>,
    pub shock_size: f64,
    pub mean: Array2<f64>,
    pub lower: Array2<f64>,
    pub upper: Array2<f64>,
}

/// For each stored draw and response level: impact `D(U) iota`, then
/// `delta_h = C(U) delta_{h-1}` with the levels held constant over horizons.
pub fn qirf(model: &QvarModel, spec: &QirfSpec) -> Result<QirfSurface> {
    let m = model.n_vars();
    if spec.shock_var >= m || spec.responder >= m {
        return Err(param("shock or response variable out of range"));
    }
    if !(spec.band > 0.0 && spec.band < 1.0) {
        return Err(param("band coverage must lie in (0, 1)"));
    }
    let levels = spec.response_levels.clone().unwrap_or_else(|| model.grid.taus().to_vec());
    let shock_size = spec
        .shock_size
        .unwrap_or(model.equations[spec.shock_var].residual_sd_median);
    let mut iota = Array1::zeros(m);
    iota[spec.shock_var] = shock_size;
    let n = model.n_draws();
    let w = spec.horizon + 1;
    let mut all = Array3::zeros((n, w, levels.len()));
    for (li, &lv) in levels.iter().enumerate() {
        let mut u = vec![spec.fixed_level; m];
        u[spec.responder] = lv;
        for s in 0..n {
            let st = model.assemble_structural(s, &u)?;
            let mut delta = st.d.dot(&iota);
            all[[s, 0, li]] = delta[spec.responder];
            for h in 1..w {
                delta = st.c.dot(&delta);
                all[[s, h, li]] = delta[spec.responder];
            }
        }
    }
    let mean = all.mean_axis(Axis(0)).expect("non-empty draws");
    let (plo, phi) = ((1.0 - spec.band) / 2.0, (1.0 + spec.band) / 2.0);
    let mut lower = Array2::zeros((w, levels.len()));
    let mut upper = Array2::zeros((w, levels.len()));
    for h in 0..w {
        for li in 0..levels.len() {
            let mut v: Vec<f64> = all.slice(ndarray::s![.., h, li]).to_vec();
            v.sort_by(|a, b| a.total_cmp(b));
            lower[[h, li]] = empirical_quantile(&v, plo);
            upper[[h, li]] = empirical_quantile(&v, phi);
        }
    }
    Ok(QirfSurface {
        levels,
        shock_size,
        mean,
        lower,
        upper,
    })
}
