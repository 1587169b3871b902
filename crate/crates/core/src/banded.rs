//! Banded symmetric positive definite matrices and precision-based Gaussian
//! sampling.
//!
//! Storage is the lower band in column-major order: entry `(i, j)` with
//! `j <= i <= j + bw` lives at `data[j * (bw + 1) + (i - j)]`. A dense matrix
//! is the special case `bw = n - 1`.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::{dim, param, Error, Result};
use crate::kernels::std_normal;

/// Block first-difference matrix for `q` blocks of size `k`: identity blocks
/// on the diagonal and negative identity blocks on the first sub-diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DifferenceMatrix {
    q: usize,
    k: usize,
}

impl DifferenceMatrix {
    pub fn new(q: usize, k: usize) -> Result<Self> {
        if q == 0 || k == 0 {
            return Err(param(format!("difference matrix needs q, k >= 1 (q={q}, k={k})")));
        }
        Ok(Self { q, k })
    }

    pub fn blocks(&self) -> usize {
        self.q
    }

    pub fn block_size(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.q * self.k
    }

    /// Unit lower triangular, so the determinant is exactly one.
    pub fn determinant(&self) -> f64 {
        1.0
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim());
        let k = self.k;
        let mut out = v.to_vec();
        for i in (k..v.len()).rev() {
            out[i] -= v[i - k];
        }
        out
    }

    /// Blockwise cumulative sum.
    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim());
        let k = self.k;
        let mut out = v.to_vec();
        for i in k..v.len() {
            out[i] += out[i - k];
        }
        out
    }

    /// Row-major dense copy; only sensible for small dimensions.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            d[i * n + i] = 1.0;
            if i >= self.k {
                d[i * n + i - self.k] = -1.0;
            }
        }
        d
    }

    /// `H' diag(s) H` with `s` the diagonal state precision (length `q * k`).
    pub fn weighted_gram(&self, state_prec: &[f64]) -> Result<BandedSpd> {
        let n = self.dim();
        if state_prec.len() != n {
            return Err(dim(format!("state precision has length {}, expected {n}", state_prec.len())));
        }
        if let Some(v) = state_prec.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::NumericDomain(format!("state precision must be positive and finite, got {v}")));
        }
        let k = self.k;
        let bw = if self.q > 1 { k } else { k - 1 };
        let mut out = BandedSpd::zeros(n, bw);
        for i in 0..n {
            let next = if i + k < n { state_prec[i + k] } else { 0.0 };
            out.add(i, i, state_prec[i] + next);
            if i + k < n {
                out.add(i + k, i, -state_prec[i + k]);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    /// Build from a full symmetric matrix, keeping only the lower triangle.
    pub fn from_dense(a: ArrayView2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(dim(format!("matrix is {}x{}, expected square", n, a.ncols())));
        }
        let mut out = Self::zeros(n, n.saturating_sub(1));
        for j in 0..n {
            for i in j..n {
                out.set(i, j, a[[i, j]]);
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        j * (self.bw + 1) + (i - j)
    }

    /// Symmetric read; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Add to the lower-triangle entry `(i, j)`, `i >= j`, inside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.idx(i, j);
        self.data[p] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let p = self.idx(i, j);
        self.data[p] = v;
    }

    /// Add a symmetric `m x m` block whose top-left corner sits at `(off, off)`.
    pub fn add_block(&mut self, off: usize, block: ArrayView2<f64>) {
        let m = block.nrows();
        for j in 0..m {
            for i in j..m {
                self.add(off + i, off + j, block[[i, j]]);
            }
        }
    }

    pub fn add_diagonal(&mut self, d: &[f64]) {
        for (i, v) in d.iter().enumerate() {
            self.add(i, i, *v);
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n, self.n), |(i, j)| self.get(i, j))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let hi = (j + self.bw).min(self.n - 1);
            y[j] += self.data[self.idx(j, j)] * x[j];
            for i in j + 1..=hi {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
        y
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let n = self.n;
        let bw = self.bw;
        let stride = bw + 1;
        let mut l = self.data.clone();
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut d = l[j * stride];
            for k in lo..j {
                let v = l[k * stride + (j - k)];
                d -= v * v;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotSpd { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[j * stride] = djj;
            let hi = (j + bw).min(n - 1);
            for i in j + 1..=hi {
                let mut s = l[j * stride + (i - j)];
                let lo_i = i.saturating_sub(bw);
                for k in lo_i.max(lo)..j {
                    s -= l[k * stride + (i - k)] * l[k * stride + (j - k)];
                }
                l[j * stride + (i - j)] = s / djj;
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

/// Lower Cholesky factor with the same band storage as [`BandedSpd`].
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[j * (self.bw + 1) + (i - j)]
    }

    /// Solve `L x = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut s = b[i];
            for k in lo..i {
                s -= self.at(i, k) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
    }

    /// Solve `L' x = b` in place.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        let stride = self.bw + 1;
        for i in (0..self.n).rev() {
            let hi = (i + self.bw).min(self.n - 1);
            let col = &self.l[i * stride..i * stride + (hi - i) + 1];
            let mut s = b[i];
            for (off, k) in (i + 1..=hi).enumerate() {
                s -= col[off + 1] * b[k];
            }
            b[i] = s / col[0];
        }
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// Dense copy of the factor `L`.
    pub fn lower(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n, self.n), |(i, j)| {
            if j <= i && i - j <= self.bw {
                self.at(i, j)
            } else {
                0.0
            }
        })
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.at(i, i).ln()).sum::<f64>()
    }

    /// Dense inverse by column solves; for tests and small systems.
    pub fn inverse(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        let mut e = vec![0.0; self.n];
        for j in 0..self.n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..self.n {
                out[[i, j]] = col[i];
            }
        }
        out
    }

    /// Draw from `N(A^{-1} b, A^{-1})` given the factor of `A`.
    pub fn sample<R: Rng + ?Sized>(&self, linear: &[f64], rng: &mut R) -> Vec<f64> {
        let mut x = linear.to_vec();
        self.solve_lower_in_place(&mut x);
        for v in x.iter_mut() {
            *v += std_normal(rng);
        }
        self.solve_upper_in_place(&mut x);
        x
    }
}

/// Posterior precision `H' Sigma^{-1} H + blockdiag(X_q' diag(w_q) X_q)`.
///
/// `state_prec` is the diagonal of `Sigma^{-1}` (length `q * k`), `x_blocks`
/// holds one `T x k` design per quantile block and `obs_prec` is `q x T`.
pub fn form_posterior_precision(
    h: &DifferenceMatrix,
    state_prec: &[f64],
    x_blocks: &[ArrayView2<f64>],
    obs_prec: ArrayView2<f64>,
) -> Result<BandedSpd> {
    let q = h.blocks();
    let k = h.block_size();
    if x_blocks.len() != q || obs_prec.nrows() != q {
        return Err(dim(format!(
            "expected {q} design blocks and {q} precision rows, got {} and {}",
            x_blocks.len(),
            obs_prec.nrows()
        )));
    }
    if let Some(v) = obs_prec.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::NumericDomain(format!("observation precision must be positive and finite, got {v}")));
    }
    let mut grams = Vec::with_capacity(q);
    for (xq, wq) in x_blocks.iter().zip(obs_prec.outer_iter()) {
        if xq.ncols() != k || xq.nrows() != wq.len() {
            return Err(dim(format!(
                "design block is {}x{}, expected {}x{k}",
                xq.nrows(),
                xq.ncols(),
                wq.len()
            )));
        }
        grams.push(weighted_gram(*xq, wq.as_slice().ok_or_else(|| dim("non-contiguous weights"))?));
    }
    precision_from_grams(h, state_prec, &grams)
}

pub(crate) fn precision_from_grams(
    h: &DifferenceMatrix,
    state_prec: &[f64],
    grams: &[Array2<f64>],
) -> Result<BandedSpd> {
    let mut p = h.weighted_gram(state_prec)?;
    let k = h.block_size();
    for (qi, g) in grams.iter().enumerate() {
        p.add_block(qi * k, g.view());
    }
    Ok(p)
}

/// `X' diag(w) X`.
pub(crate) fn weighted_gram(x: ArrayView2<f64>, w: &[f64]) -> Array2<f64> {
    let k = x.ncols();
    let mut g = vec![0.0; k * k];
    let mut buf = vec![0.0; k];
    for (row, &wt) in x.outer_iter().zip(w) {
        let r = match row.as_slice() {
            Some(r) => r,
            None => {
                for (b, v) in buf.iter_mut().zip(row.iter()) {
                    *b = *v;
                }
                &buf[..]
            }
        };
        for (a, ga) in g.chunks_exact_mut(k).enumerate() {
            let ra = r[a] * wt;
            for (gv, rb) in ga.iter_mut().zip(r) {
                *gv += ra * rb;
            }
        }
    }
    Array2::from_shape_vec((k, k), g).expect("square")
}

pub fn sample_mvn_from_precision<R: Rng + ?Sized>(
    precision: &BandedSpd,
    linear: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    if linear.len() != precision.dim() {
        return Err(dim(format!(
            "linear term has length {}, precision is {}",
            linear.len(),
            precision.dim()
        )));
    }
    Ok(precision.cholesky()?.sample(linear, rng))
}
