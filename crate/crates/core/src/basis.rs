//! One-dimensional orthonormal cosine bases on the unit interval.
//!
//! The base of size `m` consists of
//!
//! ```text
//! φ_1(x) = 1,   φ_j(x) = √2 · cos((j − 1) π x),  j = 2..m
//! ```
//!
//! which is orthonormal under the uniform measure on `[0, 1]`. Because of that
//! choice the Gram matrix is the identity, the Gram matrix of derivatives is
//! `diag((j − 1)² π²)`, and the mean of every function except `φ_1` is zero.
//! All three are returned in closed form.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Family of one-dimensional functions. Only the cosine base is provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Cosine,
}

/// A one-dimensional base of `size` functions over `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    kind: BasisKind,
    size: usize,
}

impl BasisSpec {
    pub fn cosine(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("basis size must be at least 1"));
        }
        Ok(Self {
            kind: BasisKind::Cosine,
            size,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Values of all basis functions at `x`. Inputs outside `[0, 1]` are
    /// clamped to the nearest edge.
    pub fn evaluate(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        self.evaluate_into(x, &mut out);
        out
    }

    /// Writes the basis values at `x` into `out[..size]`.
    pub fn evaluate_into(&self, x: f64, out: &mut [f64]) {
        let x = clamp_unit(x);
        out[0] = 1.0;
        for (j, v) in out.iter_mut().enumerate().take(self.size).skip(1) {
            *v = SQRT_2 * (j as f64 * PI * x).cos();
        }
    }

    /// Gram matrix `⟨φ_i, φ_j⟩` under the uniform measure.
    pub fn covariance(&self) -> DMatrix<f64> {
        DMatrix::identity(self.size, self.size)
    }

    /// Gram matrix of derivatives `⟨φ_i′, φ_j′⟩`.
    pub fn derivative_covariance(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.derivative_weights()))
    }

    /// Diagonal of [`derivative_covariance`](Self::derivative_covariance).
    pub fn derivative_weights(&self) -> Vec<f64> {
        (0..self.size)
            .map(|j| {
                let f = j as f64 * PI;
                f * f
            })
            .collect()
    }

    /// Means `⟨φ_j, 1⟩` of the basis functions.
    pub fn mean_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.size);
        v[0] = 1.0;
        v
    }
}

/// Clamps to `[0, 1]`; NaN is passed through.
#[inline]
pub fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Table of `cos(q π x_t)` for `q = 0..width` and every sample `x_t`, stored
/// row-major by sample.
///
/// Products of two basis functions reduce to sums of single cosines, so a
/// table of width `2m − 1` is enough to assemble weighted Gram matrices of a
/// size-`m` base in `O(n m)`.
#[derive(Debug, Clone)]
pub(crate) struct CosineTable {
    width: usize,
    values: Vec<f64>,
}

impl CosineTable {
    pub(crate) fn new(xs: impl ExactSizeIterator<Item = f64>, width: usize) -> Self {
        let mut values = Vec::with_capacity(xs.len() * width);
        for x in xs {
            let x = clamp_unit(x);
            values.extend((0..width).map(|q| (q as f64 * PI * x).cos()));
        }
        Self { width, values }
    }

    pub(crate) fn width(&self) -> usize {
        self.width
    }

    pub(crate) fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.width)
    }

    #[cfg(test)]
    pub(crate) fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.width..(t + 1) * self.width]
    }

    /// Fills `out[..width]` with `cos(q π x)`; the uncached counterpart of
    /// [`row`](Self::row).
    #[inline]
    pub(crate) fn fill_row(x: f64, out: &mut [f64]) {
        let x = clamp_unit(x);
        for (q, v) in out.iter_mut().enumerate() {
            *v = (q as f64 * PI * x).cos();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Composite Simpson rule on [0, 1].
    fn simpson(f: impl Fn(f64) -> f64, intervals: usize) -> f64 {
        let h = 1.0 / intervals as f64;
        let mut s = f(0.0) + f(1.0);
        for i in 1..intervals {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    }

    fn phi(j: usize, x: f64) -> f64 {
        if j == 0 {
            1.0
        } else {
            SQRT_2 * (j as f64 * PI * x).cos()
        }
    }

    fn dphi(j: usize, x: f64) -> f64 {
        if j == 0 {
            0.0
        } else {
            -SQRT_2 * j as f64 * PI * (j as f64 * PI * x).sin()
        }
    }

    #[test]
    fn zero_size_rejected() {
        assert!(BasisSpec::cosine(0).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let b3 = BasisSpec::cosine(3).unwrap();
        let v = b3.evaluate(0.0);
        assert_abs_diff_eq!(v.as_slice(), [1.0, SQRT_2, SQRT_2].as_slice(), epsilon = 1e-15);
        let v = b3.evaluate(0.5);
        assert_abs_diff_eq!(v.as_slice(), [1.0, 0.0, -SQRT_2].as_slice(), epsilon = 1e-15);
        let b5 = BasisSpec::cosine(5).unwrap();
        let v = b5.evaluate(0.25);
        assert_abs_diff_eq!(
            v.as_slice(),
            [1.0, 1.0, 0.0, -1.0, -SQRT_2].as_slice(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn out_of_range_inputs_clamp() {
        let b = BasisSpec::cosine(4).unwrap();
        assert_eq!(b.evaluate(-0.3), b.evaluate(0.0));
        assert_eq!(b.evaluate(1.7), b.evaluate(1.0));
    }

    #[test]
    fn covariance_examples() {
        assert_eq!(BasisSpec::cosine(1).unwrap().covariance(), DMatrix::identity(1, 1));
        assert_eq!(BasisSpec::cosine(3).unwrap().covariance(), DMatrix::identity(3, 3));
        let c4 = BasisSpec::cosine(4).unwrap().covariance();
        // entries (2,2) and (2,3) in 1-based indexing
        let q22 = simpson(|x| phi(1, x) * phi(1, x), 2000);
        let q23 = simpson(|x| phi(1, x) * phi(2, x), 2000);
        assert_abs_diff_eq!(c4[(1, 1)], q22, epsilon = 1e-10);
        assert_abs_diff_eq!(c4[(1, 2)], q23, epsilon = 1e-10);
    }

    #[test]
    fn derivative_covariance_examples() {
        let d1 = BasisSpec::cosine(1).unwrap().derivative_covariance();
        assert_eq!(d1[(0, 0)], 0.0);
        let d3 = BasisSpec::cosine(3).unwrap().derivative_covariance();
        assert_abs_diff_eq!(d3[(1, 1)], PI * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(d3[(2, 2)], 4.0 * PI * PI, epsilon = 1e-13);
        assert_eq!(d3[(1, 2)], 0.0);
        let d2 = BasisSpec::cosine(2).unwrap().derivative_covariance();
        let q = simpson(|x| dphi(1, x) * dphi(1, x), 2000);
        assert_abs_diff_eq!(d2[(1, 1)], q, epsilon = 1e-8);
    }

    #[test]
    fn mean_vector_examples() {
        assert_eq!(BasisSpec::cosine(1).unwrap().mean_vector().as_slice(), &[1.0]);
        assert_eq!(
            BasisSpec::cosine(4).unwrap().mean_vector().as_slice(),
            &[1.0, 0.0, 0.0, 0.0]
        );
        let q = simpson(|x| phi(1, x), 2000);
        assert_abs_diff_eq!(BasisSpec::cosine(2).unwrap().mean_vector()[1], q, epsilon = 1e-12);
    }

    #[test]
    fn orthonormal_by_quadrature() {
        let m = 16;
        let c = BasisSpec::cosine(m).unwrap().covariance();
        for i in 0..m {
            for j in 0..m {
                let q = simpson(|x| phi(i, x) * phi(j, x), 4000);
                assert!((q - c[(i, j)]).abs() <= 1e-8, "({i},{j}): {q}");
            }
        }
    }

    #[test]
    fn derivative_gram_by_quadrature() {
        let m = 16;
        let dc = BasisSpec::cosine(m).unwrap().derivative_covariance();
        for i in 0..m {
            for j in 0..m {
                let q = simpson(|x| dphi(i, x) * dphi(j, x), 4000);
                assert!((q - dc[(i, j)]).abs() <= 1e-6, "({i},{j}): {q} vs {}", dc[(i, j)]);
            }
        }
    }

    #[test]
    fn mean_is_first_covariance_row_on_constant() {
        let spec = BasisSpec::cosine(7).unwrap();
        let mut e1 = DVector::zeros(7);
        e1[0] = 1.0;
        assert_eq!(spec.covariance() * e1, spec.mean_vector());
    }

    #[test]
    fn cosine_table_matches_direct_fill() {
        let xs = [0.0, 0.13, 0.5, 0.99, 1.2];
        let table = CosineTable::new(xs.iter().copied(), 9);
        let mut buf = vec![0.0; 9];
        for (t, &x) in xs.iter().enumerate() {
            CosineTable::fill_row(x, &mut buf);
            assert_eq!(table.row(t), buf.as_slice());
        }
        assert_eq!(table.width(), 9);
    }
}
