//! Split-chain, rank-normalized R-hat and bulk effective sample size
//! (Vehtari, Gelman, Simpson, Carpenter & Bürkner 2021).

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::kernels::normal_quantile;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterDiagnostics {
    pub name: String,
    /// NaN when every draw is identical.
    pub rhat: f64,
    pub ess_bulk: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub parameters: Vec<ParameterDiagnostics>,
}

impl ConvergenceReport {
    pub fn from_traces(traces: &[(String, Array2<f64>)]) -> Result<Self> {
        let parameters = traces
            .iter()
            .map(|(name, t)| {
                let (rhat, ess_bulk) = rank_normalized_rhat_ess(t.view())?;
                Ok(ParameterDiagnostics {
                    name: name.clone(),
                    rhat,
                    ess_bulk,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { parameters })
    }

    /// Fraction of finite R-hat values at or below `threshold`.
    pub fn share_below(&self, threshold: f64) -> f64 {
        let finite: Vec<f64> = self.parameters.iter().map(|p| p.rhat).filter(|r| r.is_finite()).collect();
        if finite.is_empty() {
            return f64::NAN;
        }
        finite.iter().filter(|r| **r <= threshold).count() as f64 / finite.len() as f64
    }

    pub fn max_rhat(&self) -> f64 {
        self.parameters.iter().map(|p| p.rhat).filter(|r| r.is_finite()).fold(f64::NAN, f64::max)
    }
}

/// `(rhat, ess_bulk)` for one parameter given `M x S` draws.
pub fn rank_normalized_rhat_ess(chains: ArrayView2<f64>) -> Result<(f64, f64)> {
    let (m, s) = chains.dim();
    if m < 2 || s < 4 {
        return Err(param(format!("need at least 2 chains of 4 draws, got {m} x {s}")));
    }
    if chains.iter().any(|v| !v.is_finite()) {
        return Ok((f64::NAN, f64::NAN));
    }
    let split = split_chains(chains);
    let first = split[[0, 0]];
    if split.iter().all(|v| *v == first) {
        return Ok((f64::NAN, f64::NAN));
    }
    let z = rank_normalize(&split);
    let rhat_bulk = rhat_classic(&z);
    let mut sorted: Vec<f64> = split.iter().copied().collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let med = super::metrics::empirical_quantile(&sorted, 0.5);
    let folded = split.mapv(|v| (v - med).abs());
    let rhat_folded = rhat_classic(&rank_normalize(&folded));
    let rhat = rhat_bulk.max(rhat_folded);
    let ess = ess_multichain(&z);
    Ok((rhat, ess))
}

fn split_chains(chains: ArrayView2<f64>) -> Array2<f64> {
    let (m, s) = chains.dim();
    let half = s / 2;
    let mut out = Array2::zeros((2 * m, half));
    for c in 0..m {
        for i in 0..half {
            out[[2 * c, i]] = chains[[c, i]];
            out[[2 * c + 1, i]] = chains[[c, s - half + i]];
        }
    }
    out
}

/// Normal scores of pooled fractional ranks with ties averaged.
fn rank_normalize(x: &Array2<f64>) -> Array2<f64> {
    let n = x.len();
    let flat: Vec<f64> = x.iter().copied().collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| flat[a].total_cmp(&flat[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && flat[idx[j + 1]] == flat[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    let z: Vec<f64> = ranks
        .into_iter()
        .map(|r| normal_quantile((r - 0.375) / (n as f64 + 0.25)))
        .collect();
    Array2::from_shape_vec(x.raw_dim(), z).expect("same shape")
}

fn chain_stats(x: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.ncols() as f64;
    let means: Vec<f64> = x.outer_iter().map(|r| r.sum() / n).collect();
    let vars: Vec<f64> = x
        .outer_iter()
        .zip(&means)
        .map(|(r, m)| r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
        .collect();
    (means, vars)
}

fn rhat_classic(x: &Array2<f64>) -> f64 {
    let (m, n) = x.dim();
    let (means, vars) = chain_stats(x);
    let w = vars.iter().sum::<f64>() / m as f64;
    let grand = means.iter().sum::<f64>() / m as f64;
    let b_over_n = means.iter().map(|v| (v - grand).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b_over_n;
    if !(w > 0.0) {
        return f64::NAN;
    }
    (var_plus / w).sqrt()
}

fn autocov(row: ndarray::ArrayView1<f64>, mean: f64, lag: usize) -> f64 {
    let n = row.len();
    let mut s = 0.0;
    for i in 0..n - lag {
        s += (row[i] - mean) * (row[i + lag] - mean);
    }
    s / n as f64
}

/// Multi-chain ESS with Geyer's initial monotone sequence estimator.
fn ess_multichain(x: &Array2<f64>) -> f64 {
    let (m, n) = x.dim();
    let (means, vars) = chain_stats(x);
    let mean_var = vars.iter().sum::<f64>() / m as f64;
    let grand = means.iter().sum::<f64>() / m as f64;
    let mut var_plus = mean_var * (n as f64 - 1.0) / n as f64;
    if m > 1 {
        var_plus += means.iter().map(|v| (v - grand).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    }
    if !(var_plus > 0.0) {
        return f64::NAN;
    }
    let mean_acov = |lag: usize| -> f64 {
        (0..m).map(|c| autocov(x.row(c), means[c], lag)).sum::<f64>() / m as f64
    };
    let rho_at = |lag: usize| 1.0 - (mean_var - mean_acov(lag)) / var_plus;

    let mut rho = vec![0.0; n];
    rho[0] = 1.0;
    let mut rho_even = 1.0;
    let mut rho_odd = rho_at(1);
    rho[1] = rho_odd;
    let mut t = 1;
    while t + 2 < n.saturating_sub(4) && rho_even + rho_odd > 0.0 {
        rho_even = rho_at(t + 1);
        rho_odd = rho_at(t + 2);
        if rho_even + rho_odd >= 0.0 {
            rho[t + 1] = rho_even;
            rho[t + 2] = rho_odd;
        }
        t += 2;
    }
    let max_t = t;
    if rho_even > 0.0 && max_t + 1 < n {
        rho[max_t + 1] = rho_even;
    }
    let mut t = 1;
    while t + 4 <= max_t {
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t] {
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0;
            rho[t + 2] = rho[t + 1];
        }
        t += 2;
    }
    let total = (m * n) as f64;
    let extra = if max_t + 1 < n { rho[max_t + 1] } else { 0.0 };
    let mut tau = -1.0 + 2.0 * rho[..=max_t.min(n - 1)].iter().sum::<f64>() + extra;
    tau = tau.max(1.0 / total.log10());
    total / tau
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn constant_chains_are_flagged() {
        let x = Array2::from_elem((4, 100), 2.0);
        let (r, e) = rank_normalized_rhat_ess(x.view()).unwrap();
        assert!(r.is_nan() && e.is_nan());
    }

    #[test]
    fn needs_two_chains() {
        let x = Array2::zeros((1, 100));
        assert!(rank_normalized_rhat_ess(x.view()).is_err());
    }

    #[test]
    fn autocorrelated_chain_has_lower_ess() {
        let mut rng = RngStream::new(2, 0);
        let (m, s) = (4, 4000);
        let mut x = Array2::zeros((m, s));
        for c in 0..m {
            let mut v = 0.0;
            for i in 0..s {
                v = 0.9 * v + crate::kernels::std_normal(&mut rng);
                x[[c, i]] = v;
            }
        }
        let (r, e) = rank_normalized_rhat_ess(x.view()).unwrap();
        // AR(1) with phi = 0.9: integrated autocorrelation time 19
        let expect = (m * s) as f64 / 19.0;
        assert!(r < 1.02, "{r}");
        assert!(e > 0.6 * expect && e < 1.5 * expect, "{e} vs {expect}");
    }
}
