//! Independent numerical references for the test suites: adaptive
//! quadrature, Kolmogorov-Smirnov statistics, dense Gaussian algebra and
//! moment comparisons for joint-distribution tests.

use nalgebra::{DMatrix, DVector};

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

const MAX_INTERVALS: usize = 5000;

/// Global adaptive bisection: always split the interval with the largest
/// error estimate until the total estimate meets `tol` or the interval
/// budget runs out.
fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let (v, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= tol.max(4.0 * f64::EPSILON * total.abs()) || parts.len() >= MAX_INTERVALS {
            return total;
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return total;
        }
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&f, a, b, tol)
}

/// Integral over `[a, inf)` via `x = a + u / (1 - u)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> f64 {
    let g = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let d = 1.0 - u;
        f(a + u / d) / (d * d)
    };
    adapt(&g, 0.0, 1.0, tol)
}

/// Integral over the real line.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    integrate_to_infinity(&f, 0.0, 0.5 * tol) + integrate_to_infinity(|x| f(-x), 0.0, 0.5 * tol)
}

/// One-sample Kolmogorov-Smirnov distance between `samples` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(|a, b| a.total_cmp(b));
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Asymptotic p-value of the one-sample statistic with the usual
/// small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        s += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

/// Mean and covariance of `N(P^{-1} b, P^{-1})` from a dense precision
/// given row-major.
pub fn dense_gaussian_moments(precision: &[f64], linear: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = linear.len();
    assert_eq!(precision.len(), n * n, "precision must be n x n");
    let p = DMatrix::from_row_slice(n, n, precision);
    let cov = p.clone().try_inverse().expect("precision is invertible");
    let mean = &cov * DVector::from_column_slice(linear);
    let mut c = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            c.push(cov[(i, j)]);
        }
    }
    (mean.iter().copied().collect(), c)
}

/// Row-major product of an `r x n` and an `n x c` matrix.
pub fn dense_matmul(a: &[f64], b: &[f64], r: usize, n: usize, c: usize) -> Vec<f64> {
    let am = DMatrix::from_row_slice(r, n, a);
    let bm = DMatrix::from_row_slice(n, c, b);
    let p = am * bm;
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(p[(i, j)]);
        }
    }
    out
}

/// Log-determinant of a symmetric positive definite row-major matrix.
pub fn dense_log_det(a: &[f64], n: usize) -> f64 {
    let m = DMatrix::from_row_slice(n, n, a);
    let ch = m.cholesky().expect("positive definite");
    2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Mean and its standard error for independent samples.
pub fn mean_se_iid(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = mean(x);
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Mean and batch-means standard error for an autocorrelated sequence.
pub fn mean_se_batch(x: &[f64], batches: usize) -> (f64, f64) {
    let b = x.len() / batches;
    assert!(b >= 2, "need at least two samples per batch");
    let means: Vec<f64> = (0..batches).map(|i| mean(&x[i * b..(i + 1) * b])).collect();
    let (m, se) = mean_se_iid(&means);
    (m, se)
}

/// Standardised difference of two means given their standard errors.
pub fn z_difference(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0) / (a.1 * a.1 + b.1 * b.1).sqrt()
}
