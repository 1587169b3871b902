//! Prior-side properties of the shrinkage construction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::kernels::std_normal;

/// Density of the shrinkage coefficient `kappa = 1 / (1 + a^2 lambda^2)`
/// when `lambda` is standard half-Cauchy and `a = nu / sigma_y`.
pub fn kappa_density(kappa: f64, a: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(param(format!("shrinkage coefficient must lie in (0, 1), got {kappa}")));
    }
    if !(a > 0.0) {
        return Err(param(format!("scale ratio must be positive, got {a}")));
    }
    Ok(std::f64::consts::FRAC_1_PI * a / ((a * a - 1.0) * kappa + 1.0) / (kappa.sqrt() * (1.0 - kappa).sqrt()))
}

/// How the quantile-difference variances are generated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StateVarianceSpec {
    /// Every difference has this variance.
    Fixed(f64),
    /// Horseshoe: global scale `C+(0, 1/sqrt(t))` per quantile, local
    /// scales `C+(0, 1)`.
    Horseshoe { t: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorCrossingConfig {
    /// Intercept increments `alpha_q - alpha_{q-1}` for `q = 2..Q`.
    pub alpha_gaps: Vec<f64>,
    /// Number of covariates (rescaled to `[-1, 1]`).
    pub k: usize,
    pub state_variance: StateVarianceSpec,
}

fn half_cauchy<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    scale * (std::f64::consts::FRAC_PI_2 * u).tan()
}

/// Monte Carlo probability that `gamma_{0,q} - sum_j gamma_{j,q} >= 0` holds
/// for every `q = 2..Q` when the slope differences are drawn from the prior.
pub fn prior_noncrossing_probability<R: Rng + ?Sized>(
    cfg: &PriorCrossingConfig,
    n_draws: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_draws == 0 {
        return Err(param("need at least one draw"));
    }
    match cfg.state_variance {
        StateVarianceSpec::Fixed(v) if v < 0.0 => return Err(param("state variance must be non-negative")),
        StateVarianceSpec::Horseshoe { t: 0 } => return Err(param("horseshoe needs t >= 1")),
        _ => {}
    }
    let mut ok = 0usize;
    for _ in 0..n_draws {
        let mut all = true;
        for &g0 in &cfg.alpha_gaps {
            let nu = match cfg.state_variance {
                StateVarianceSpec::Fixed(_) => 1.0,
                StateVarianceSpec::Horseshoe { t } => half_cauchy(1.0 / (t as f64).sqrt(), rng),
            };
            let mut s = 0.0;
            for _ in 0..cfg.k {
                let sd = match cfg.state_variance {
                    StateVarianceSpec::Fixed(v) => v.sqrt(),
                    StateVarianceSpec::Horseshoe { .. } => nu * half_cauchy(1.0, rng),
                };
                s += sd * std_normal(rng);
            }
            if g0 - s < 0.0 {
                all = false;
            }
        }
        if all {
            ok += 1;
        }
    }
    Ok(ok as f64 / n_draws as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn beta_half_half_case() {
        assert!((kappa_density(0.5, 1.0).unwrap() - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        for &k in &[0.1, 0.3, 0.77] {
            let a = kappa_density(k, 1.0).unwrap();
            let b = kappa_density(1.0 - k, 1.0).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(kappa_density(0.0, 1.0).is_err());
    }

    #[test]
    fn zero_variance_never_crosses() {
        let cfg = PriorCrossingConfig {
            alpha_gaps: vec![0.1; 5],
            k: 3,
            state_variance: StateVarianceSpec::Fixed(0.0),
        };
        let mut rng = RngStream::new(1, 0);
        assert_eq!(prior_noncrossing_probability(&cfg, 1000, &mut rng).unwrap(), 1.0);
    }

    #[test]
    fn diffuse_differences_approach_independent_halves() {
        let cfg = PriorCrossingConfig {
            alpha_gaps: vec![1e-6; 3],
            k: 2,
            state_variance: StateVarianceSpec::Fixed(1e6),
        };
        let mut rng = RngStream::new(1, 0);
        let p = prior_noncrossing_probability(&cfg, 200_000, &mut rng).unwrap();
        let se = (0.125f64 * 0.875 / 200_000.0).sqrt();
        assert!((p - 0.125).abs() < 4.0 * se, "{p}");
    }
}
