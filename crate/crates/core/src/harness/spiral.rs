//! The noisy two-dimensional spiral with a sine label, optionally padded
//! with independent standard-normal distractor dimensions.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::error::{Error, Result};

/// Noise-free position of sample `t` of `n`: `6 s (cos 6πs, sin 6πs)`, `s = t/n`.
pub fn spiral_mean(t: usize, n: usize) -> [f64; 2] {
    let s = t as f64 / n as f64;
    let r = 6.0 * s;
    [r * (6.0 * s * PI).cos(), r * (6.0 * s * PI).sin()]
}

/// Standard deviation `t / (2n)` of the isotropic position noise.
pub fn spiral_noise_std(t: usize, n: usize) -> f64 {
    t as f64 / (2.0 * n as f64)
}

/// Label `sin(4π t/n)`.
pub fn spiral_label(t: usize, n: usize) -> f64 {
    (4.0 * PI * t as f64 / n as f64).sin()
}

/// Draws samples `t = 1..=n` of the spiral plus `noise_dims` distractor
/// columns. Raw coordinates; apply a transform before training.
pub fn generate_spiral(n: usize, noise_dims: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("spiral needs n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 2 + noise_dims;
    let mut x = DMatrix::zeros(n, d);
    let mut y = Vec::with_capacity(n);
    for row in 0..n {
        let t = row + 1;
        let mean = spiral_mean(t, n);
        let std = spiral_noise_std(t, n);
        for (k, mu) in mean.iter().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[(row, k)] = mu + std * z;
        }
        for k in 2..d {
            x[(row, k)] = StandardNormal.sample(&mut rng);
        }
        y.push(spiral_label(t, n));
    }
    let names = (0..d)
        .map(|k| if k < 2 { format!("x{}", k + 1) } else { format!("noise{}", k - 1) })
        .collect();
    Dataset::new(x, y)?.with_names(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_sample_geometry() {
        let [a, b] = spiral_mean(1000, 1000);
        assert!((a - 6.0).abs() < 1e-12);
        assert!(b.abs() < 1e-12);
        assert_eq!(spiral_noise_std(1000, 1000), 0.5);
    }

    #[test]
    fn early_samples_concentrate_at_origin() {
        let [a, b] = spiral_mean(1, 100_000);
        assert!(a.hypot(b) < 1e-3);
        assert!(spiral_noise_std(1, 100_000) < 1e-5);
    }

    #[test]
    fn label_at_half_is_zero() {
        assert!(spiral_label(500, 1000).abs() < 1e-12);
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate_spiral(50, 3, 7).unwrap();
        let b = generate_spiral(50, 3, 7).unwrap();
        let c = generate_spiral(50, 3, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.x(), c.x());
        assert_eq!(a.dim(), 5);
    }

    #[test]
    fn noise_variance_matches_formula() {
        // one draw of n = 10^5 samples; bucket t in (60000, 80000]
        let n = 100_000;
        let data = generate_spiral(n, 0, 1).unwrap();
        let (mut ss, mut expected, mut count) = (0.0, 0.0, 0usize);
        for t in 60_001..=80_000 {
            let mean = spiral_mean(t, n);
            for k in 0..2 {
                ss += (data.x()[(t - 1, k)] - mean[k]).powi(2);
                expected += spiral_noise_std(t, n).powi(2);
                count += 1;
            }
        }
        let ratio = (ss / count as f64) / (expected / count as f64);
        assert!((ratio - 1.0).abs() < 0.05, "variance ratio {ratio}");
    }

    #[test]
    fn distractors_are_standard_normal() {
        let data = generate_spiral(20_000, 1, 4).unwrap();
        let col: Vec<f64> = data.x().column(2).iter().copied().collect();
        let (m, s) = crate::harness::mean_std(&col);
        assert!(m.abs() < 0.05);
        assert!((s - 1.0).abs() < 0.05);
    }
}
