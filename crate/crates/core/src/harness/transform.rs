use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default distance kept between the training range and the edges of the
/// unit box.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Per-dimension affine map `u = (x − shift) · scale + center`.
///
/// Two fits are provided: [`fit_unit_box`](Self::fit_unit_box) maps the
/// training range onto `[margin, 1 − margin]` (the domain of the cosine
/// bases), [`fit_standardize`](Self::fit_standardize) maps to zero mean and
/// unit variance. Standardizing before the box map would cancel out, so the
/// box map is applied directly to raw values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputTransform {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    pub center: f64,
    pub margin: f64,
}

impl InputTransform {
    pub fn fit_unit_box(x: &DMatrix<f64>, margin: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&margin) {
            return Err(Error::invalid(format!("margin {margin} outside [0, 0.5)")));
        }
        if x.nrows() == 0 {
            return Err(Error::invalid("cannot fit a transform on zero samples"));
        }
        let mut shift = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let lo = col.min();
            let hi = col.max();
            if hi > lo {
                shift.push(0.5 * (lo + hi));
                scale.push((1.0 - 2.0 * margin) / (hi - lo));
            } else {
                shift.push(lo);
                scale.push(1.0);
            }
        }
        Ok(Self {
            shift,
            scale,
            center: 0.5,
            margin,
        })
    }

    /// Zero mean, unit variance (population variance). Constant columns keep
    /// unit scale.
    pub fn fit_standardize(x: &DMatrix<f64>) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::invalid("cannot fit a transform on zero samples"));
        }
        let mut shift = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            shift.push(mean);
            scale.push(if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 });
        }
        Ok(Self {
            shift,
            scale,
            center: 0.0,
            margin: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x.ncols())?;
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |t, k| {
            (x[(t, k)] - self.shift[k]) * self.scale[k] + self.center
        }))
    }

    pub fn apply_point(&self, x: &[f64], out: &mut [f64]) {
        for k in 0..self.dim() {
            out[k] = (x[k] - self.shift[k]) * self.scale[k] + self.center;
        }
    }

    pub fn invert(&self, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(u.ncols())?;
        Ok(DMatrix::from_fn(u.nrows(), u.ncols(), |t, k| {
            (u[(t, k)] - self.center) / self.scale[k] + self.shift[k]
        }))
    }

    /// The transform restricted to all dimensions but `l`.
    pub fn without_dim(&self, l: usize) -> Self {
        let mut out = self.clone();
        out.shift.remove(l);
        out.scale.remove(l);
        out
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.shift.len() != self.scale.len() {
            return Err(Error::parse("transform", "shift and scale lengths differ"));
        }
        if self.scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::parse("transform.scale", "scales must be finite and positive"));
        }
        Ok(())
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::invalid(format!(
                "transform expects {} columns, got {d}",
                self.dim()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_land_on_margins() {
        let x = DMatrix::from_column_slice(2, 1, &[0.0, 10.0]);
        let tf = InputTransform::fit_unit_box(&x, 0.05).unwrap();
        let u = tf.apply(&x).unwrap();
        assert!((u[(0, 0)] - 0.05).abs() < 1e-15);
        assert!((u[(1, 0)] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn constant_column_maps_to_center() {
        let x = DMatrix::from_column_slice(3, 1, &[4.2, 4.2, 4.2]);
        let tf = InputTransform::fit_unit_box(&x, 0.05).unwrap();
        let u = tf.apply(&x).unwrap();
        assert!(u.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn inverse_round_trip() {
        let x = DMatrix::from_row_slice(4, 2, &[1.5, -3.0, 2.0, 7.0, -0.25, 0.0, 11.0, 1e3]);
        for tf in [
            InputTransform::fit_unit_box(&x, 0.05).unwrap(),
            InputTransform::fit_standardize(&x).unwrap(),
        ] {
            let back = tf.invert(&tf.apply(&x).unwrap()).unwrap();
            for (a, b) in back.iter().zip(x.iter()) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn bad_margin_rejected() {
        let x = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert!(InputTransform::fit_unit_box(&x, 0.5).is_err());
        assert!(InputTransform::fit_unit_box(&x, -0.1).is_err());
    }

    #[test]
    fn standardized_moments() {
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 6.0]);
        let u = InputTransform::fit_standardize(&x).unwrap().apply(&x).unwrap();
        let mean = u.sum() / 4.0;
        let var = u.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-15);
        assert!((var - 1.0).abs() < 1e-14);
    }
}
