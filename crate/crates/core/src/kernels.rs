//! Random variate generators used by the Gibbs samplers.
//!
//! The generalized inverse Gaussian sampler follows Hörmann & Leydold
//! (2014): the density `x^(p-1) exp(-(a x + b / x) / 2)` is reduced to the
//! standardized two-parameter form and dispatched to one of three
//! rejection schemes depending on `(|p|, sqrt(ab))`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use statrs::function::erf;

use crate::error::{param, Result};

/// Parameters of GIG(p, a, b) with density proportional to
/// `x^(p-1) exp(-(a x + b / x) / 2)` on `x > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GigParams {
    p: f64,
    a: f64,
    b: f64,
}

impl GigParams {
    /// `a` must be positive. `b` must be positive unless `p > 0`, in which
    /// case `b = 0` selects the Gamma(p, rate a/2) limit.
    pub fn new(p: f64, a: f64, b: f64) -> Result<Self> {
        if !p.is_finite() || !a.is_finite() || !b.is_finite() {
            return Err(param(format!("GIG parameters must be finite (p={p}, a={a}, b={b})")));
        }
        if a <= 0.0 {
            return Err(param(format!("GIG requires a > 0, got {a}")));
        }
        if b < 0.0 || (b == 0.0 && p <= 0.0) {
            return Err(param(format!("GIG requires b > 0 (or b = 0 with p > 0), got b={b}, p={p}")));
        }
        Ok(Self { p, a, b })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
}

pub fn sample_gig<R: Rng + ?Sized>(params: &GigParams, rng: &mut R) -> f64 {
    gig(params.p, params.a, params.b, rng)
}

/// Unchecked GIG draw; callers guarantee the invariants of [`GigParams`].
pub(crate) fn gig<R: Rng + ?Sized>(p: f64, a: f64, b: f64, rng: &mut R) -> f64 {
    if b < f64::MIN_POSITIVE {
        // b -> 0 limit, only reachable with p > 0
        return gamma(p, 2.0 / a, rng);
    }
    let lambda = p.abs();
    let omega = (a * b).sqrt();
    let alpha = (b / a).sqrt();
    let x = if lambda > 2.0 || omega > 3.0 {
        rou_shift(lambda, omega, rng)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_noshift(lambda, omega, rng)
    } else {
        concave_split(lambda, omega, rng)
    };
    if p < 0.0 {
        alpha / x
    } else {
        alpha * x
    }
}

fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0).powi(2) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

fn rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.random::<f64>();
        let v: f64 = open01(rng);
        let x = u / v;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);

    // roots of the cubic that bound the shifted acceptance region
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-p * p * p / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();

    loop {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v: f64 = open01(rng);
        let x = u / v + xm;
        if x <= 0.0 {
            continue;
        }
        if v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Three-piece hat for 0 <= lambda < 1 and small omega, where the
/// ratio-of-uniforms bounds become loose.
fn concave_split<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = gig_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        a1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total = a0 + a1 + a2;
    loop {
        let mut v = total * rng.random::<f64>();
        let (x, hx);
        if v <= a0 {
            x = x0 * v / a0;
            hx = k0;
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= a1;
                let lo = x0.max(2.0 / omega);
                x = -2.0 / omega * ((-omega / 2.0 * lo).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        if !(x > 0.0) || !x.is_finite() {
            continue;
        }
        let u = rng.random::<f64>() * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            return v;
        }
    }
}

pub(crate) fn gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, scale)
        .expect("gamma parameters validated by caller")
        .sample(rng)
}

/// Inverse-gamma with density proportional to `x^(-shape-1) exp(-scale / x)`.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0) || !(scale > 0.0) || !shape.is_finite() || !scale.is_finite() {
        return Err(param(format!(
            "inverse gamma requires positive finite shape and scale (shape={shape}, scale={scale})"
        )));
    }
    Ok(inv_gamma(shape, scale, rng))
}

pub(crate) fn inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    scale / gamma(shape, 1.0, rng)
}

pub fn sample_exponential<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<f64> {
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(param(format!("exponential mean must be positive, got {mean}")));
    }
    let e: f64 = Exp1.sample(rng);
    Ok(mean * e)
}

/// One step of the inverse-gamma representation of a half-Cauchy prior with
/// scale `scale`: returns `(x2, aux)` with `aux ~ IG(1/2, 1/scale^2)` and
/// `x2 | aux ~ IG(1/2, 1/aux)`, so that `sqrt(x2) ~ C+(0, scale)`.
pub fn sample_half_cauchy_ig_mixture<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<(f64, f64)> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(param(format!("half-Cauchy scale must be positive, got {scale}")));
    }
    let aux = inv_gamma(0.5, 1.0 / (scale * scale), rng);
    let x2 = inv_gamma(0.5, 1.0 / aux, rng);
    Ok((x2, aux))
}

#[inline]
pub(crate) fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile function.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn gig_rejects_bad_parameters() {
        assert!(GigParams::new(0.5, 0.0, 1.0).is_err());
        assert!(GigParams::new(0.5, -1.0, 1.0).is_err());
        assert!(GigParams::new(-0.5, 1.0, 0.0).is_err());
        assert!(GigParams::new(0.5, 1.0, -1.0).is_err());
        assert!(GigParams::new(0.5, 1.0, 0.0).is_ok());
    }

    #[test]
    fn gig_b_zero_limit_is_gamma() {
        let mut rng = RngStream::new(1, 0);
        let p = GigParams::new(0.5, 3.0, 0.0).unwrap();
        let n = 200_000;
        let m: f64 = (0..n).map(|_| sample_gig(&p, &mut rng)).sum::<f64>() / n as f64;
        // Gamma(1/2, rate 3/2) has mean 1/3
        assert!((m - 1.0 / 3.0).abs() < 0.005, "{m}");
    }

    #[test]
    fn inverse_gamma_rejects_nonpositive() {
        let mut rng = RngStream::new(1, 0);
        assert!(sample_inverse_gamma(0.0, 1.0, &mut rng).is_err());
        assert!(sample_inverse_gamma(1.0, -1.0, &mut rng).is_err());
        assert!(sample_exponential(0.0, &mut rng).is_err());
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-8, 0.01, 0.1, 0.5, 0.9, 0.975, 1.0 - 1e-8] {
            let z = normal_quantile(p);
            assert!((normal_cdf(z) - p).abs() < 1e-12 * p.max(1e-3) * 1e3, "{p}");
        }
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-12);
    }
}
