//! Dense row-major matrices and the few vector kernels the crate needs.
//!
//! `dot` fixes its summation order (four independent lanes, then the tail),
//! so reductions are reproducible across platforms and call sites. Everything
//! else accumulates left to right.

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl RowMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        RowMatrix { n_rows, n_cols, data: vec![0.0; n_rows * n_cols] }
    }

    /// Wrap a flat row-major buffer; its length must be `n_rows * n_cols`.
    pub fn from_vec(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::InvalidInput(format!(
                "matrix buffer holds {} values, expected {n_rows}x{n_cols}",
                data.len()
            )));
        }
        Ok(RowMatrix { n_rows, n_cols, data })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Copy of the rows selected by `idx`, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> RowMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        RowMatrix { n_rows: idx.len(), n_cols: self.n_cols, data }
    }

    /// A·v.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n_cols, "matvec: vector length != column count");
        (0..self.n_rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Aᵀ·v, accumulated row by row so the result is order-deterministic.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n_rows, "tr_matvec: vector length != row count");
        let mut out = vec![0.0; self.n_cols];
        for i in 0..self.n_rows {
            let vi = v[i];
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        out
    }
}

/// Dot product with a fixed four-lane summation order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    let head = a.len() / 4 * 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0f64, 0.0, 0.0, 0.0);
    let mut j = 0;
    while j < head {
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
        j += 4;
    }
    let mut s = (s0 + s1) + (s2 + s3);
    while j < a.len() {
        s += a[j] * b[j];
        j += 1;
    }
    s
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// ℓ_p norm, p ≥ 1.
pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    assert!(p >= 1.0, "lp_norm: p must be >= 1, got {p}");
    v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// sign(x)·max(|x|−t, 0), the proximal map of t·|·|₁.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0, "soft_threshold: negative threshold");
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

pub fn soft_threshold_in_place(v: &mut [f64], t: f64) {
    for x in v.iter_mut() {
        *x = soft_threshold(*x, t);
    }
}
