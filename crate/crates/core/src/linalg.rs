//! Small dense helpers shared by the trainer and the GP baseline.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Relative diagonal jitter applied when a Cholesky factorization fails.
pub const JITTER_SCALE: f64 = 1e-10;

/// Squared pivots below this fraction of the largest diagonal entry count as
/// a failed factorization.
const PIVOT_FLOOR: f64 = 1e-15;

fn factor_accepted(chol: &Cholesky<f64, Dyn>, a: &DMatrix<f64>) -> bool {
    let floor = PIVOT_FLOOR * a.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    chol.l_dirty().diagonal().iter().all(|&d| d > 0.0 && d * d > floor)
}

/// Cholesky factor of a symmetric positive (semi-)definite matrix, with the
/// diagonal jitter that had to be added to obtain it.
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    jitter: f64,
}

impl SpdFactor {
    /// Factors `a`. On failure (including pivots that are tiny relative to the
    /// diagonal) a jitter of `1e-10 · trace / m` is added to the
    /// diagonal and grown tenfold until the factorization succeeds. Returns
    /// `None` only for matrices with non-finite entries.
    pub fn new(a: &DMatrix<f64>) -> Option<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if let Some(chol) = Cholesky::new(a.clone()) {
            if factor_accepted(&chol, a) {
                return Some(Self { chol, jitter: 0.0 });
            }
        }
        let m = a.nrows().max(1);
        let trace = a.trace().abs();
        let mut jitter = JITTER_SCALE * if trace > 0.0 { trace / m as f64 } else { 1.0 };
        for _ in 0..30 {
            let mut b = a.clone();
            for i in 0..a.nrows() {
                b[(i, i)] += jitter;
            }
            if let Some(chol) = Cholesky::new(b.clone()) {
                if factor_accepted(&chol, &b) {
                    return Some(Self { chol, jitter });
                }
            }
            jitter *= 10.0;
        }
        None
    }

    pub fn jittered(&self) -> bool {
        self.jitter > 0.0
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// Squared ratio of the largest to the smallest Cholesky pivot, a cheap
    /// estimate of the 2-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        let diag = self.chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        (hi / lo).powi(2)
    }

    /// Natural log of the determinant of the (possibly jittered) matrix.
    pub fn ln_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}

/// `ln det(a)` for a symmetric matrix, or `-∞` if `a` is not positive definite.
/// No jitter is applied.
pub fn ln_det_spd(a: &DMatrix<f64>) -> f64 {
    match Cholesky::new(a.clone()) {
        Some(chol) => {
            let diag = chol.l_dirty().diagonal();
            if diag.iter().all(|&d| d > 0.0 && d.is_finite()) {
                2.0 * diag.iter().map(|d| d.ln()).sum::<f64>()
            } else {
                f64::NEG_INFINITY
            }
        }
        None => f64::NEG_INFINITY,
    }
}
