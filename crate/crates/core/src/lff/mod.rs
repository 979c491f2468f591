//! Linear factored functions
//!
//! ```text
//! f(x) = Σ_i a_i ∏_k Σ_j B^k_{ji} φ^k_j(x_k)
//! ```
//!
//! A model holds the weights `a` (length `m`) and one coefficient matrix
//! `B^k` of shape `m_k × m` per input dimension. Column `i` of `B^k` is the
//! factor function of basis function `i` in dimension `k`. Inputs are
//! expected in the unit box; the optional [`InputTransform`] maps raw inputs
//! there and travels with the model so that a saved file is self-contained.

mod algebra;
mod format;

pub use format::{ModelFormat, FORMAT_VERSION};

use nalgebra::{DMatrix, DVector};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::harness::InputTransform;

/// Tolerance of the unit-norm constraint on factor functions.
pub const NORM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Lff {
    weights: Vec<f64>,
    factors: Vec<DMatrix<f64>>,
    specs: Vec<BasisSpec>,
    transform: Option<InputTransform>,
    normalized: bool,
}

/// One factored basis function: a coefficient vector per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredBasisFunction {
    pub factors: Vec<DVector<f64>>,
}

impl FactoredBasisFunction {
    /// The constant function `1`, i.e. `b^k = e_1` in every dimension.
    pub fn constant(specs: &[BasisSpec]) -> Self {
        Self {
            factors: specs
                .iter()
                .map(|s| {
                    let mut v = DVector::zeros(s.size());
                    v[0] = 1.0;
                    v
                })
                .collect(),
        }
    }

    /// Largest deviation of `‖g^k‖²` from one over all dimensions.
    pub fn norm_violation(&self) -> f64 {
        self.factors
            .iter()
            .map(|b| (b.norm_squared() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

impl Lff {
    /// Builds a model, checking that every `B^k` has `specs[k].size()` rows
    /// and `weights.len()` columns. The result is flagged unnormalized; see
    /// [`mark_normalized`](Self::mark_normalized).
    pub fn new(weights: Vec<f64>, factors: Vec<DMatrix<f64>>, specs: Vec<BasisSpec>) -> Result<Self> {
        if factors.len() != specs.len() {
            return Err(Error::invalid(format!(
                "{} coefficient matrices for {} dimensions",
                factors.len(),
                specs.len()
            )));
        }
        for (k, (b, s)) in factors.iter().zip(&specs).enumerate() {
            if b.nrows() != s.size() || b.ncols() != weights.len() {
                return Err(Error::invalid(format!(
                    "B^{k} has shape {}x{}, expected {}x{}",
                    b.nrows(),
                    b.ncols(),
                    s.size(),
                    weights.len()
                )));
            }
        }
        Ok(Self {
            weights,
            factors,
            specs,
            transform: None,
            normalized: false,
        })
    }

    /// An empty model (`m = 0`), which evaluates to zero.
    pub fn zero(specs: Vec<BasisSpec>) -> Self {
        let factors = specs.iter().map(|s| DMatrix::zeros(s.size(), 0)).collect();
        Self {
            weights: Vec::new(),
            factors,
            specs,
            transform: None,
            normalized: true,
        }
    }

    /// The constant function `c` with a single basis function.
    pub fn constant(c: f64, specs: Vec<BasisSpec>) -> Self {
        let g = FactoredBasisFunction::constant(&specs);
        let mut f = Self::zero(specs);
        f.push_basis(c, &g).expect("constant basis matches its specs");
        f
    }

    /// Appends basis function `g` with weight `a`.
    pub fn push_basis(&mut self, a: f64, g: &FactoredBasisFunction) -> Result<()> {
        if g.factors.len() != self.dim() {
            return Err(Error::invalid("basis function dimension mismatch"));
        }
        for (k, b) in g.factors.iter().enumerate() {
            if b.len() != self.specs[k].size() {
                return Err(Error::invalid(format!("factor {k} has wrong length")));
            }
        }
        let m = self.num_bases();
        for (mat, b) in self.factors.iter_mut().zip(&g.factors) {
            let rows = mat.nrows();
            let grown = std::mem::replace(mat, DMatrix::zeros(0, 0)).resize_horizontally(m + 1, 0.0);
            *mat = grown;
            debug_assert_eq!(mat.nrows(), rows);
            mat.set_column(m, b);
        }
        self.weights.push(a);
        Ok(())
    }

    /// Replaces the linear weights, keeping the basis.
    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.num_bases() {
            return Err(Error::invalid("weight count does not match basis count"));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn with_transform(mut self, transform: Option<InputTransform>) -> Result<Self> {
        if let Some(tf) = &transform {
            if tf.dim() != self.dim() {
                return Err(Error::invalid("transform dimension does not match model"));
            }
        }
        self.transform = transform;
        Ok(self)
    }

    /// Flags the model as satisfying the unit-norm constraint, after checking
    /// it does.
    pub fn mark_normalized(&mut self) -> Result<()> {
        let v = self.norm_violation();
        if v > NORM_TOLERANCE {
            return Err(Error::invalid(format!("unit-norm constraint violated by {v:e}")));
        }
        self.normalized = true;
        Ok(())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn specs(&self) -> &[BasisSpec] {
        &self.specs
    }

    pub fn transform(&self) -> Option<&InputTransform> {
        self.transform.as_ref()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Number of input dimensions `d`.
    pub fn dim(&self) -> usize {
        self.specs.len()
    }

    /// Number of factored basis functions `m`.
    pub fn num_bases(&self) -> usize {
        self.weights.len()
    }

    /// Basis function `i` as a standalone factored function.
    pub fn basis(&self, i: usize) -> FactoredBasisFunction {
        FactoredBasisFunction {
            factors: self.factors.iter().map(|b| b.column(i).into_owned()).collect(),
        }
    }

    /// Largest `|bᵀ C b − 1|` over all factor columns.
    pub fn norm_violation(&self) -> f64 {
        self.factors
            .iter()
            .flat_map(|b| b.column_iter().map(|c| (c.norm_squared() - 1.0).abs()))
            .fold(0.0, f64::max)
    }

    /// Evaluates the model at one point given in unit-box coordinates.
    pub fn evaluate_point(&self, x: &[f64]) -> f64 {
        let m = self.num_bases();
        let mut prod = vec![1.0; m];
        let mut phi = Vec::new();
        for (k, (spec, b)) in self.specs.iter().zip(&self.factors).enumerate() {
            phi.resize(spec.size(), 0.0);
            spec.evaluate_into(x[k], &mut phi);
            for (i, p) in prod.iter_mut().enumerate() {
                *p *= b.column(i).iter().zip(&phi).map(|(c, v)| c * v).sum::<f64>();
            }
        }
        prod.iter().zip(&self.weights).map(|(p, a)| p * a).sum()
    }

    /// Evaluates the model on the rows of `x` (`n × d`, unit-box coordinates).
    pub fn evaluate(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::invalid(format!(
                "sample matrix has {} columns, model has d = {}",
                x.ncols(),
                self.dim()
            )));
        }
        let mut row = vec![0.0; self.dim()];
        Ok((0..x.nrows())
            .map(|t| {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = x[(t, k)];
                }
                self.evaluate_point(&row)
            })
            .collect())
    }

    /// Evaluates the model on raw inputs, applying the stored transform first
    /// (or none if the model has no transform).
    pub fn predict(&self, raw: &DMatrix<f64>) -> Result<Vec<f64>> {
        match &self.transform {
            Some(tf) => self.evaluate(&tf.apply(raw)?),
            None => self.evaluate(raw),
        }
    }

    /// `⟨f, g⟩` under the uniform measure on the unit box, computed as a
    /// product of one-dimensional inner products.
    pub fn inner_product(&self, other: &Lff) -> Result<f64> {
        self.check_specs(other)?;
        let grams: Vec<DMatrix<f64>> = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(b, c)| b.transpose() * c)
            .collect();
        Ok(self.weighted_product_sum(other, &grams))
    }

    /// `⟨∂_k f, ∂_k g⟩` under the uniform measure.
    pub fn derivative_inner_product(&self, other: &Lff, k: usize) -> Result<f64> {
        self.check_specs(other)?;
        if k >= self.dim() {
            return Err(Error::invalid(format!("dimension {k} out of range")));
        }
        let grams: Vec<DMatrix<f64>> = self
            .factors
            .iter()
            .zip(&other.factors)
            .enumerate()
            .map(|(l, (b, c))| {
                if l == k {
                    b.transpose() * self.specs[k].derivative_covariance() * c
                } else {
                    b.transpose() * c
                }
            })
            .collect();
        Ok(self.weighted_product_sum(other, &grams))
    }

    /// `Σ_ij a_i a'_j ∏_k G^k_ij`.
    fn weighted_product_sum(&self, other: &Lff, grams: &[DMatrix<f64>]) -> f64 {
        let mut total = 0.0;
        for (i, ai) in self.weights.iter().enumerate() {
            for (j, aj) in other.weights.iter().enumerate() {
                let p: f64 = grams.iter().map(|g| g[(i, j)]).product();
                total += ai * aj * p;
            }
        }
        total
    }

    fn check_specs(&self, other: &Lff) -> Result<()> {
        if self.specs != other.specs {
            return Err(Error::invalid("operands have different basis specifications"));
        }
        Ok(())
    }
}
