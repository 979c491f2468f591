//! Data handling and experiment plumbing: datasets, input transforms, the
//! spiral generator, CSV ingestion, metrics and cross-validation.

mod cv;
mod spiral;
mod table;
mod transform;

pub use cv::{kfold_assignment, kfold_cv, CvReport, GridPointResult, HyperParams, Learner, LearnerKind};
pub use spiral::{generate_spiral, spiral_label, spiral_mean, spiral_noise_std};
pub use table::{load_csv, load_features, parse_delimited, parse_features, LabelColumn};
pub use transform::{InputTransform, DEFAULT_MARGIN};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `n` labelled samples in `d` dimensions.
///
/// A dataset remembers whether its inputs are raw or already mapped to the
/// unit box, so a transform cannot be applied twice by accident.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: Vec<f64>,
    names: Option<Vec<String>>,
    transform: Option<InputTransform>,
    transformed: bool,
}

impl Dataset {
    /// Raw (untransformed) data. All entries must be finite.
    pub fn new(x: DMatrix<f64>, y: Vec<f64>) -> Result<Self> {
        validate(&x, &y)?;
        Ok(Self {
            x,
            y,
            names: None,
            transform: None,
            transformed: false,
        })
    }

    /// Data whose inputs already lie in `[0, 1]^d`.
    pub fn unit_box(x: DMatrix<f64>, y: Vec<f64>) -> Result<Self> {
        validate(&x, &y)?;
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("unit-box data must lie in [0, 1]"));
        }
        Ok(Self {
            x,
            y,
            names: None,
            transform: None,
            transformed: true,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::invalid("one column name per input dimension expected"));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Whether a transform (or the unit-box constructor) produced these inputs.
    pub fn is_transformed(&self) -> bool {
        self.transformed
    }

    /// The transform that produced these coordinates, if any.
    pub fn transform(&self) -> Option<&InputTransform> {
        self.transform.as_ref()
    }

    /// Fits a unit-box transform on this (raw) data and applies it.
    pub fn fit_transform(&self, margin: f64) -> Result<(InputTransform, Dataset)> {
        if self.transformed {
            return Err(Error::invalid("dataset is already transformed"));
        }
        let tf = InputTransform::fit_unit_box(&self.x, margin)?;
        let out = self.apply_transform(&tf)?;
        Ok((tf, out))
    }

    /// Applies a previously fitted transform, e.g. to a test fold. Points
    /// outside the training range may leave the unit box; bases clamp them.
    pub fn apply_transform(&self, tf: &InputTransform) -> Result<Dataset> {
        if self.transformed {
            return Err(Error::invalid("dataset is already transformed"));
        }
        Ok(Dataset {
            x: tf.apply(&self.x)?,
            y: self.y.clone(),
            names: self.names.clone(),
            transform: Some(tf.clone()),
            transformed: true,
        })
    }

    /// Rows `idx` in the given order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let x = DMatrix::from_fn(idx.len(), self.dim(), |r, c| self.x[(idx[r], c)]);
        Dataset {
            x,
            y: idx.iter().map(|&i| self.y[i]).collect(),
            names: self.names.clone(),
            transform: self.transform.clone(),
            transformed: self.transformed,
        }
    }
}

fn validate(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    if x.nrows() != y.len() {
        return Err(Error::invalid(format!(
            "{} input rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("dataset contains non-finite values"));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "rmse of {} predictions against {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::invalid("rmse of empty vectors"));
    }
    let ss: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok((ss / pred.len() as f64).sqrt())
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
