use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{ln_det_spd, SpdFactor, JITTER_SCALE};

/// Least-squares weights of a fixed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsSolution {
    pub weights: Vec<f64>,
    /// Set when `Ψ` was numerically rank deficient and the normal equations
    /// had to be regularized.
    pub jittered: bool,
}

/// Relative pivot size below which the QR route is abandoned.
const RANK_TOLERANCE: f64 = 1e-12;

/// Minimizes `‖Ψᵀ a − y‖₂` for `Ψ` given as `m` rows of `n` basis evaluations.
///
/// Uses a QR factorization of `Ψᵀ`; if a pivot of `R` is negligible the
/// normal equations `(ΨΨᵀ/n) a = Ψy/n` are solved with a diagonal jitter of
/// `1e-10 · trace / m` instead.
pub fn ols_refit(psi: &[Vec<f64>], y: &[f64]) -> Result<OlsSolution> {
    let m = psi.len();
    let n = y.len();
    if psi.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("basis rows and labels differ in length"));
    }
    if m == 0 {
        return Ok(OlsSolution {
            weights: Vec::new(),
            jittered: false,
        });
    }
    let design = DMatrix::from_fn(n, m, |t, i| psi[i][t]);
    let rhs = DVector::from_column_slice(y);
    if m <= n {
        let qr = design.clone().qr();
        let r = qr.r();
        let diag = r.diagonal();
        let max = diag.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if max > 0.0 && diag.iter().all(|v| v.abs() > RANK_TOLERANCE * max) {
            let mut qty = rhs.clone();
            qr.q_tr_mul(&mut qty);
            let top = qty.rows(0, m).into_owned();
            if let Some(a) = r.solve_upper_triangular(&top) {
                if a.iter().all(|v| v.is_finite()) {
                    return Ok(OlsSolution {
                        weights: a.iter().copied().collect(),
                        jittered: false,
                    });
                }
            }
        }
    }
    let scale = 1.0 / n as f64;
    let mut gram = design.tr_mul(&design) * scale;
    let jitter = JITTER_SCALE * (gram.trace() / m as f64).max(f64::MIN_POSITIVE);
    for i in 0..m {
        gram[(i, i)] += jitter;
    }
    let b = design.tr_mul(&rhs) * scale;
    let factor = SpdFactor::new(&gram).ok_or_else(|| Error::invalid("non-finite basis evaluations"))?;
    Ok(OlsSolution {
        weights: factor.solve(&b).iter().copied().collect(),
        jittered: true,
    })
}

/// `ln det(Ψ Ψᵀ / n)`, or `-∞` when the Gram matrix is singular.
pub fn gram_log_det(psi: &[Vec<f64>], n: usize) -> f64 {
    let m = psi.len();
    if m == 0 {
        return 0.0;
    }
    let scale = 1.0 / n as f64;
    let gram = DMatrix::from_fn(m, m, |i, j| {
        psi[i].iter().zip(&psi[j]).map(|(a, b)| a * b).sum::<f64>() * scale
    });
    ln_det_spd(&gram)
}

/// True once the newest basis function is no longer linearly independent of
/// the others, i.e. `det(Ψ Ψᵀ / n) < eps_det`.
pub fn should_stop(psi: &[Vec<f64>], n: usize, eps_det: f64) -> bool {
    gram_log_det(psi, n) < eps_det.ln()
}
