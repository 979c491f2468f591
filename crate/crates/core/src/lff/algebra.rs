//! Exact marginalization and point-wise products.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Lff;
use crate::basis::{BasisKind, BasisSpec};
use crate::error::{Error, Result};
use crate::harness::Dataset;
use crate::trainer::{self, FitDiagnostics, TrainerConfig};

impl Lff {
    /// Integrates dimension `l` (0-based) out under the uniform measure.
    ///
    /// Only the constant basis function has a non-zero mean, so the new
    /// weights are `a_i · B^l_{1i}` and the remaining factors are unchanged.
    pub fn marginalize(&self, l: usize) -> Result<Lff> {
        if l >= self.dim() {
            return Err(Error::invalid(format!(
                "cannot marginalize dimension {l} of a {}-dimensional model",
                self.dim()
            )));
        }
        let mean = self.specs[l].mean_vector();
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, a)| a * self.factors[l].column(i).dot(&mean))
            .collect();
        let mut factors = self.factors.clone();
        factors.remove(l);
        let mut specs = self.specs.clone();
        specs.remove(l);
        Ok(Lff {
            weights,
            factors,
            specs,
            transform: self.transform.as_ref().map(|t| t.without_dim(l)),
            normalized: false,
        })
    }

    /// Point-wise product `f · g` as a new model with `m · m̄` basis functions
    /// and `2 m_k` cosines per dimension.
    ///
    /// Coefficients are moved to the plain `cos((j − 1) π x)` convention,
    /// multiplied with `cos a · cos b = (cos(a − b) + cos(a + b)) / 2`, and moved
    /// back. With `lowpass = Some(c)` only the first `c` basis functions per
    /// dimension are kept.
    pub fn pointwise_product(&self, other: &Lff, lowpass: Option<usize>) -> Result<Lff> {
        self.check_specs(other)?;
        if self.specs.iter().any(|s| s.kind() != BasisKind::Cosine) {
            return Err(Error::invalid("point-wise products need cosine bases"));
        }
        if lowpass == Some(0) {
            return Err(Error::invalid("lowpass cutoff must be at least 1"));
        }
        let (m, mbar) = (self.num_bases(), other.num_bases());
        let mut weights = Vec::with_capacity(m * mbar);
        for a in &self.weights {
            for b in &other.weights {
                weights.push(a * b);
            }
        }
        let mut factors = Vec::with_capacity(self.dim());
        let mut specs = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let size = self.specs[k].size();
            let full = 2 * size;
            let mut out = DMatrix::zeros(full, m * mbar);
            let lhs = to_plain_cosine(&self.factors[k]);
            let rhs = to_plain_cosine(&other.factors[k]);
            let mut col = vec![0.0; full];
            for i in 0..m {
                for j in 0..mbar {
                    col.iter_mut().for_each(|v| *v = 0.0);
                    for p in 0..size {
                        let cp = 0.5 * lhs[(p, i)];
                        if cp == 0.0 {
                            continue;
                        }
                        for q in 0..size {
                            let c = cp * rhs[(q, j)];
                            col[p + q] += c;
                            col[p.abs_diff(q)] += c;
                        }
                    }
                    let t = i * mbar + j;
                    out[(0, t)] = col[0];
                    for s in 1..full {
                        out[(s, t)] = col[s] / SQRT_2;
                    }
                }
            }
            factors.push(out);
            specs.push(BasisSpec::cosine(full)?);
        }
        let product = Lff {
            weights,
            factors,
            specs,
            transform: self.transform.clone(),
            normalized: false,
        };
        Ok(match lowpass {
            Some(c) => product.lowpass(c)?,
            None => product,
        })
    }

    /// Drops all basis coefficients beyond the first `cutoff` in every
    /// dimension. Dimensions that are already smaller are left alone.
    pub fn lowpass(&self, cutoff: usize) -> Result<Lff> {
        if cutoff == 0 {
            return Err(Error::invalid("lowpass cutoff must be at least 1"));
        }
        let mut factors = Vec::with_capacity(self.dim());
        let mut specs = Vec::with_capacity(self.dim());
        for (b, s) in self.factors.iter().zip(&self.specs) {
            let keep = s.size().min(cutoff);
            factors.push(b.rows(0, keep).into_owned());
            specs.push(BasisSpec::cosine(keep)?);
        }
        Ok(Lff {
            weights: self.weights.clone(),
            factors,
            specs,
            transform: self.transform.clone(),
            normalized: self.normalized && specs_unchanged(&self.specs, cutoff),
        })
    }

    /// Refits a compact normalized model to `self` by sampling it uniformly on
    /// the unit box and running the trainer on the samples.
    pub fn compress(
        &self,
        config: &TrainerConfig,
        samples: usize,
        seed: u64,
    ) -> Result<(Lff, FitDiagnostics)> {
        if samples == 0 {
            return Err(Error::invalid("compression needs at least one sample"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(samples, self.dim(), |_, _| rng.random::<f64>());
        let y = self.evaluate(&x)?;
        let data = Dataset::unit_box(x, y)?;
        let (model, diag) = trainer::fit(&data, config)?;
        Ok((model.with_transform(self.transform.clone())?, diag))
    }
}

fn specs_unchanged(specs: &[BasisSpec], cutoff: usize) -> bool {
    specs.iter().all(|s| s.size() <= cutoff)
}

/// Orthonormal coefficients to coefficients of `cos((j − 1) π x)`.
fn to_plain_cosine(b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = b.clone();
    for mut row in c.row_iter_mut().skip(1) {
        row *= SQRT_2;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;
    use rand::Rng;
    use std::f64::consts::PI;

    fn specs(sizes: &[usize]) -> Vec<BasisSpec> {
        sizes.iter().map(|&s| BasisSpec::cosine(s).unwrap()).collect()
    }

    fn random_lff(rng: &mut ChaCha8Rng, m: usize, sizes: &[usize]) -> Lff {
        let weights = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let factors = sizes
            .iter()
            .map(|&s| DMatrix::from_fn(s, m, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        Lff::new(weights, factors, specs(sizes)).unwrap()
    }

    #[test]
    fn marginal_of_constant_is_constant() {
        let f = Lff::constant(2.5, specs(&[4, 6]));
        let g = f.marginalize(0).unwrap();
        assert_eq!(g.dim(), 1);
        assert_eq!(g.specs()[0].size(), 6);
        assert!((g.evaluate_point(&[0.37]) - 2.5).abs() < 1e-15);
        assert!(!g.is_normalized());
    }

    #[test]
    fn pure_cosine_factor_marginalizes_to_zero() {
        let f = Lff::new(
            vec![3.0, -1.0],
            vec![
                DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]),
                DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 0.1]),
            ],
            specs(&[3, 2]),
        )
        .unwrap();
        let g = f.marginalize(0).unwrap();
        assert!(g.weights().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn marginal_matches_trapezoid_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_lff(&mut rng, 3, &[5, 4]);
        let g = f.marginalize(1).unwrap();
        let nodes = 10_000;
        for _ in 0..10 {
            let x0 = rng.random::<f64>();
            let h = 1.0 / nodes as f64;
            let mut q = 0.5 * (f.evaluate_point(&[x0, 0.0]) + f.evaluate_point(&[x0, 1.0]));
            for i in 1..nodes {
                q += f.evaluate_point(&[x0, i as f64 * h]);
            }
            q *= h;
            assert!((g.evaluate_point(&[x0]) - q).abs() <= 1e-6);
        }
    }

    #[test]
    fn marginalization_order_commutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_lff(&mut rng, 4, &[3, 5, 2]);
        let a = f.marginalize(0).unwrap().marginalize(0).unwrap();
        let b = f.marginalize(1).unwrap().marginalize(0).unwrap();
        assert_eq!(a.factors(), b.factors());
        for (x, y) in a.weights().iter().zip(b.weights()) {
            assert!((x - y).abs() <= 4.0 * f64::EPSILON * x.abs().max(y.abs()));
        }
    }

    #[test]
    fn marginalize_out_of_range() {
        let f = Lff::constant(1.0, specs(&[3]));
        assert!(f.marginalize(1).is_err());
    }

    #[test]
    fn product_of_constants() {
        let s = specs(&[3, 3]);
        let p = Lff::constant(2.0, s.clone())
            .pointwise_product(&Lff::constant(3.0, s), None)
            .unwrap();
        assert_eq!(p.num_bases(), 1);
        assert_eq!(p.specs()[0].size(), 6);
        assert!((p.evaluate_point(&[0.1, 0.8]) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn squared_cosine_identity() {
        let f = Lff::new(vec![1.0], vec![DMatrix::from_column_slice(2, 1, &[0.0, 1.0])], specs(&[2])).unwrap();
        let p = f.pointwise_product(&f, None).unwrap();
        let col = p.factors()[0].column(0);
        assert!((col[0] - 1.0).abs() < 1e-15);
        assert!(col[1].abs() < 1e-15);
        assert!((col[2] - 1.0 / SQRT_2).abs() < 1e-15);
        assert!(col[3].abs() < 1e-15);
        for i in 0..50 {
            let x = i as f64 / 49.0;
            let expected = 1.0 + (2.0 * PI * x).cos();
            assert!((p.evaluate_point(&[x]) - expected).abs() <= 1e-10);
        }
    }

    #[test]
    fn product_matches_pointwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f = random_lff(&mut rng, 2, &[4, 5]);
        let g = random_lff(&mut rng, 3, &[4, 5]);
        let p = f.pointwise_product(&g, None).unwrap();
        assert_eq!(p.num_bases(), 6);
        for _ in 0..100 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let expected = f.evaluate_point(&x) * g.evaluate_point(&x);
            assert!((p.evaluate_point(&x) - expected).abs() <= 1e-9);
        }
    }

    #[test]
    fn lowpass_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_lff(&mut rng, 2, &[4, 4]);
        let once = f.pointwise_product(&f, Some(5)).unwrap();
        assert_eq!(once.specs()[0].size(), 5);
        assert_eq!(once.lowpass(5).unwrap(), once);
    }

    #[test]
    fn product_spec_mismatch_rejected() {
        let f = Lff::constant(1.0, specs(&[3]));
        let g = Lff::constant(1.0, specs(&[5]));
        assert!(f.pointwise_product(&g, None).is_err());
    }
}
