//! Gaussian-process regression (posterior mean only) with a Gaussian kernel,
//! used as a baseline.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{Dataset, InputTransform};
use crate::linalg::SpdFactor;

pub const DEFAULT_MAX_SUPPORT: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    /// Kernel width σ̄ in `k(x, y) = exp(−‖x − y‖² / (2 σ̄²))`.
    pub kernel_width: f64,
    /// Prior precision β; the kernel system is regularized by `β⁻¹ I`.
    pub prior_precision: f64,
    /// At most this many training samples become support points.
    pub max_support: usize,
    /// Seed of the support-set selection.
    pub seed: u64,
}

impl GpConfig {
    pub fn new(kernel_width: f64, prior_precision: f64) -> Self {
        Self {
            kernel_width,
            prior_precision,
            max_support: DEFAULT_MAX_SUPPORT,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kernel_width > 0.0 && self.kernel_width.is_finite()) {
            return Err(Error::invalid("kernel width must be positive"));
        }
        if !(self.prior_precision > 0.0 && self.prior_precision.is_finite()) {
            return Err(Error::invalid("prior precision must be positive"));
        }
        if self.max_support == 0 {
            return Err(Error::invalid("max_support must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    support: DMatrix<f64>,
    alpha: DVector<f64>,
    kernel_width: f64,
    transform: Option<InputTransform>,
    jitter: f64,
}

impl GpModel {
    pub fn support_size(&self) -> usize {
        self.support.nrows()
    }

    pub fn support(&self) -> &DMatrix<f64> {
        &self.support
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Diagonal jitter beyond `β⁻¹` the kernel solve needed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn transform(&self) -> Option<&InputTransform> {
        self.transform.as_ref()
    }

    /// Predicts at raw inputs, applying the training transform if any.
    pub fn predict(&self, raw: &DMatrix<f64>) -> Result<Vec<f64>> {
        match &self.transform {
            Some(tf) => gp_predict(self, &tf.apply(raw)?),
            None => gp_predict(self, raw),
        }
    }
}

/// Squared Euclidean distances between the rows of `a` and `b`.
pub fn squared_distances(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| {
        (0..a.ncols()).map(|k| (a[(i, k)] - b[(j, k)]).powi(2)).sum()
    })
}

/// Gaussian kernel matrix `K_ij = k(a_i, b_j)`.
pub fn kernel_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>, width: f64) -> DMatrix<f64> {
    let c = -0.5 / (width * width);
    squared_distances(a, b).map(|d| (c * d).exp())
}

/// Picks `count` rows by farthest-first traversal: the first row is drawn
/// with the seeded RNG, every further row maximizes the distance to the rows
/// already chosen (ties go to the lowest index).
pub fn farthest_first(x: &DMatrix<f64>, count: usize, seed: u64) -> Vec<usize> {
    let n = x.nrows();
    let count = count.min(n);
    if count == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);
    let dist_to = |i: usize, j: usize| -> f64 {
        (0..x.ncols()).map(|k| (x[(i, k)] - x[(j, k)]).powi(2)).sum()
    };
    let mut chosen = vec![first];
    let mut nearest: Vec<f64> = (0..n).map(|i| dist_to(i, first)).collect();
    while chosen.len() < count {
        let mut best = 0;
        for i in 1..n {
            if nearest[i] > nearest[best] {
                best = i;
            }
        }
        chosen.push(best);
        for i in 0..n {
            nearest[i] = nearest[i].min(dist_to(i, best));
        }
    }
    chosen
}

/// Fits the GP posterior mean: solves `(K + β⁻¹ I) α = y` on the support set.
pub fn gp_fit(data: &Dataset, config: &GpConfig) -> Result<GpModel> {
    config.validate()?;
    if data.y().iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid("labels must be finite"));
    }
    let (support, y) = if data.n() > config.max_support {
        let idx = farthest_first(data.x(), config.max_support, config.seed);
        let sub = data.subset(&idx);
        (sub.x().clone(), sub.y().to_vec())
    } else {
        (data.x().clone(), data.y().to_vec())
    };
    let mut k = kernel_matrix(&support, &support, config.kernel_width);
    let noise = 1.0 / config.prior_precision;
    for i in 0..k.nrows() {
        k[(i, i)] += noise;
    }
    let factor = SpdFactor::new(&k).ok_or_else(|| Error::invalid("kernel system is not finite"))?;
    let alpha = factor.solve(&DVector::from_vec(y));
    Ok(GpModel {
        support,
        alpha,
        kernel_width: config.kernel_width,
        transform: data.transform().cloned(),
        jitter: factor.jitter(),
    })
}

/// Posterior mean `Σ_s α_s k(x, x_s)` at inputs given in the model's
/// training coordinates.
pub fn gp_predict(model: &GpModel, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    if x.ncols() != model.support.ncols() {
        return Err(Error::invalid(format!(
            "inputs have {} columns, model expects {}",
            x.ncols(),
            model.support.ncols()
        )));
    }
    let k = kernel_matrix(x, &model.support, model.kernel_width);
    Ok((k * &model.alpha).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_1d(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let y = (0..n).map(|i| x[(i, 0)].sin() + 0.1 * rng.random::<f64>()).collect();
        Dataset::new(x, y).unwrap()
    }

    fn dense_oracle(data: &Dataset, width: f64, beta: f64, at: &DMatrix<f64>) -> Vec<f64> {
        let n = data.n();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let d = data.x()[(i, 0)] - data.x()[(j, 0)];
                k[(i, j)] = (-d * d / (2.0 * width * width)).exp();
            }
            k[(i, i)] += 1.0 / beta;
        }
        let alpha = k.lu().solve(&DVector::from_column_slice(data.y())).unwrap();
        (0..at.nrows())
            .map(|r| {
                (0..n)
                    .map(|s| {
                        let d = at[(r, 0)] - data.x()[(s, 0)];
                        alpha[s] * (-d * d / (2.0 * width * width)).exp()
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn single_sample_shrinks_label() {
        let data = Dataset::new(DMatrix::from_element(1, 2, 0.3), vec![2.0]).unwrap();
        let beta = 4.0;
        let model = gp_fit(&data, &GpConfig::new(1.0, beta)).unwrap();
        let p = gp_predict(&model, data.x()).unwrap();
        assert!((p[0] - 2.0 / (1.0 + 1.0 / beta)).abs() < 1e-14);
    }

    #[test]
    fn matches_dense_oracle() {
        let data = random_1d(50, 1);
        let (width, beta) = (0.7, 100.0);
        let model = gp_fit(&data, &GpConfig::new(width, beta)).unwrap();
        let p = gp_predict(&model, data.x()).unwrap();
        let o = dense_oracle(&data, width, beta, data.x());
        for (a, b) in p.iter().zip(&o) {
            assert!((a - b).abs() < 1e-8);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let off = DMatrix::from_fn(20, 1, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let p = gp_predict(&model, &off).unwrap();
        let o = dense_oracle(&data, width, beta, &off);
        for (a, b) in p.iter().zip(&o) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn near_interpolation_at_high_precision() {
        let data = random_1d(15, 2);
        let model = gp_fit(&data, &GpConfig::new(0.3, 1e10)).unwrap();
        let p = gp_predict(&model, data.x()).unwrap();
        for (a, b) in p.iter().zip(data.y()) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn zero_labels_give_zero_predictions() {
        let mut data = random_1d(10, 3);
        data = Dataset::new(data.x().clone(), vec![0.0; 10]).unwrap();
        let model = gp_fit(&data, &GpConfig::new(1.0, 10.0)).unwrap();
        let p = gp_predict(&model, &DMatrix::from_element(4, 1, 0.25)).unwrap();
        assert!(p.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let data = random_1d(5, 4);
        let model = gp_fit(&data, &GpConfig::new(1.0, 10.0)).unwrap();
        assert!(gp_predict(&model, &DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn kernel_gram_is_symmetric_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [5, 40, 100] {
            let x = DMatrix::from_fn(n, 3, |_, _| rng.random::<f64>());
            let k = kernel_matrix(&x, &x, 0.4);
            assert_eq!(k, k.transpose());
            let eig = k.symmetric_eigenvalues();
            assert!(eig.iter().all(|&l| l >= -1e-8));
        }
    }

    #[test]
    fn subset_selection_deterministic() {
        let data = random_1d(300, 6);
        let a = farthest_first(data.x(), 20, 11);
        let b = farthest_first(data.x(), 20, 11);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 20);
        let cfg = GpConfig {
            max_support: 20,
            ..GpConfig::new(1.0, 10.0)
        };
        let m1 = gp_fit(&data, &cfg).unwrap();
        let m2 = gp_fit(&data, &cfg).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(m1.support_size(), 20);
    }

    #[test]
    fn invalid_config_rejected() {
        let data = random_1d(5, 7);
        assert!(gp_fit(&data, &GpConfig::new(0.0, 1.0)).is_err());
        assert!(gp_fit(&data, &GpConfig::new(1.0, -1.0)).is_err());
    }
}
