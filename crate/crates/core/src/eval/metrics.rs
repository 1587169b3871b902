use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::ald::check_loss;
use crate::error::{dim, param, Result};

/// Quantile weighting schemes for the aggregated quantile score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightScheme {
    /// `1 / Q`, equal weight.
    Equal,
    /// `tau (1 - tau)`, centre.
    Centre,
    /// `(1 - tau)^2`, left tail.
    Left,
    /// `tau^2`, right tail.
    Right,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 4] = [WeightScheme::Equal, WeightScheme::Centre, WeightScheme::Left, WeightScheme::Right];

    /// Scheme by its 1-based number.
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Self::Equal),
            2 => Ok(Self::Centre),
            3 => Ok(Self::Left),
            4 => Ok(Self::Right),
            _ => Err(param(format!("weighting scheme must be 1..4, got {i}"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Equal => "qs",
            Self::Centre => "centre",
            Self::Left => "left",
            Self::Right => "right",
        }
    }

    pub fn weight(&self, tau: f64, q: usize) -> f64 {
        match self {
            Self::Equal => 1.0 / q as f64,
            Self::Centre => tau * (1.0 - tau),
            Self::Left => (1.0 - tau).powi(2),
            Self::Right => tau * tau,
        }
    }
}

pub fn quantile_score(y: ArrayView1<f64>, qhat: ArrayView1<f64>, tau: f64) -> Result<f64> {
    if y.len() != qhat.len() {
        return Err(dim(format!("{} observations but {} predictions", y.len(), qhat.len())));
    }
    if y.is_empty() {
        return Err(param("quantile score of an empty sample"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(param(format!("quantile level must lie in (0, 1), got {tau}")));
    }
    Ok(y.iter().zip(qhat).map(|(a, b)| check_loss(a - b, tau)).sum::<f64>() / y.len() as f64)
}

pub fn weighted_qs(qs_by_tau: &[f64], taus: &[f64], scheme: WeightScheme) -> Result<f64> {
    if qs_by_tau.len() != taus.len() {
        return Err(dim("scores and levels differ in length"));
    }
    let q = taus.len();
    Ok(qs_by_tau.iter().zip(taus).map(|(s, &t)| scheme.weight(t, q) * s).sum())
}

/// Sort every row (monotone rearrangement of fitted quantiles).
pub fn rearrange(qhat: ArrayView2<f64>) -> Array2<f64> {
    let mut out = qhat.to_owned();
    for mut row in out.outer_iter_mut() {
        let mut v = row.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        row.assign(&ArrayView1::from(&v[..]));
    }
    out
}

/// Fraction of fitted quantiles (`T x Q`) that differ from their
/// rearranged values.
pub fn crossing_incidence(qhat: ArrayView2<f64>) -> Result<f64> {
    if qhat.ncols() < 2 {
        return Err(param("crossing incidence needs at least two quantiles"));
    }
    if qhat.nrows() == 0 {
        return Err(param("crossing incidence of an empty sample"));
    }
    let sorted = rearrange(qhat);
    let n = qhat.iter().zip(sorted.iter()).filter(|(a, b)| a != b).count();
    Ok(n as f64 / qhat.len() as f64)
}

/// `sqrt( sum_sim sum_k sum_q (b - bhat)^2 / (N_sim Q) )`. There is no
/// division by the number of covariates.
pub fn coefficient_rmse(true_profile: ArrayView2<f64>, posterior_means: &[Array2<f64>]) -> Result<f64> {
    if posterior_means.is_empty() {
        return Err(param("no simulation results"));
    }
    let mut ss = 0.0;
    for m in posterior_means {
        if m.raw_dim() != true_profile.raw_dim() {
            return Err(dim("estimate and truth differ in shape"));
        }
        ss += m.iter().zip(true_profile).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    Ok((ss / (posterior_means.len() * true_profile.nrows()) as f64).sqrt())
}

/// Per-quantile RMSE over the covariates in `columns`:
/// `sqrt( sum_sim sum_{k in columns} (b - bhat)^2 / N_sim )`.
pub fn coefficient_rmse_by_quantile(
    true_profile: ArrayView2<f64>,
    posterior_means: &[Array2<f64>],
    columns: &[usize],
) -> Result<Vec<f64>> {
    if posterior_means.is_empty() {
        return Err(param("no simulation results"));
    }
    let q = true_profile.nrows();
    let mut ss = vec![0.0; q];
    for m in posterior_means {
        if m.raw_dim() != true_profile.raw_dim() {
            return Err(dim("estimate and truth differ in shape"));
        }
        for qi in 0..q {
            for &k in columns {
                ss[qi] += (m[[qi, k]] - true_profile[[qi, k]]).powi(2);
            }
        }
    }
    Ok(ss.into_iter().map(|s| (s / posterior_means.len() as f64).sqrt()).collect())
}

/// Linear-interpolation sample quantile of already sorted data.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model: String,
    pub dgp: Option<usize>,
    pub rmse: Option<f64>,
    pub qs_by_tau: Vec<f64>,
    /// Equal, centre, left and right weighted scores.
    pub qwqs: [f64; 4],
    pub crossing: f64,
}

impl MetricReport {
    pub fn from_scores(model: &str, dgp: Option<usize>, taus: &[f64], qs_by_tau: Vec<f64>, crossing: f64, rmse: Option<f64>) -> Result<Self> {
        let mut qwqs = [0.0; 4];
        for (i, s) in WeightScheme::ALL.iter().enumerate() {
            qwqs[i] = weighted_qs(&qs_by_tau, taus, *s)?;
        }
        Ok(Self {
            model: model.to_string(),
            dgp,
            rmse,
            qs_by_tau,
            qwqs,
            crossing,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn quantile_score_examples() {
        assert_eq!(quantile_score(array![1.0].view(), array![0.0].view(), 0.9).unwrap(), 0.9);
        assert_eq!(quantile_score(array![1.0, 2.0].view(), array![1.0, 2.0].view(), 0.3).unwrap(), 0.0);
    }

    #[test]
    fn weights() {
        assert_eq!(WeightScheme::Centre.weight(0.5, 9), 0.25);
        assert!((WeightScheme::Left.weight(0.95, 9) - 0.0025).abs() < 1e-15);
        let taus = [0.1, 0.5, 0.9];
        assert!((weighted_qs(&[2.0, 2.0, 2.0], &taus, WeightScheme::Equal).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn crossing_examples() {
        assert!((crossing_incidence(array![[1.0, 3.0, 2.0]].view()).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(crossing_incidence(array![[4.0, 3.0, 2.0, 1.0]].view()).unwrap(), 1.0);
        assert_eq!(crossing_incidence(array![[1.0, 1.0, 2.0]].view()).unwrap(), 0.0);
        assert_eq!(rearrange(array![[2.0, 1.0]].view()), array![[1.0, 2.0]]);
    }

    #[test]
    fn rmse_omits_covariate_normalization() {
        let t = Array2::zeros((3, 4));
        let m = Array2::from_elem((3, 4), 0.5);
        assert!((coefficient_rmse(t.view(), &[m]).unwrap() - 0.5 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_quantile_interpolates() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_quantile(&s, 0.0), 1.0);
        assert_eq!(empirical_quantile(&s, 1.0), 4.0);
        assert!((empirical_quantile(&s, 0.5) - 2.5).abs() < 1e-15);
    }
}
