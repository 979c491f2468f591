use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};

pub const DEFAULT_BASIS_SIZE: usize = 50;
pub const DEFAULT_EPS_INNER: f64 = 1e-6;
pub const DEFAULT_EPS_DET: f64 = 1e-12;
pub const DEFAULT_MAX_OUTER: usize = 200;
pub const DEFAULT_MAX_INNER_SWEEPS: usize = 1000;

/// How a factor update picks the new coefficient vector `z = s b^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerRule {
    /// `z = (C̄ + τ I)⁻¹ v`, the exact minimizer of the cost of the scaled
    /// candidate. The cost never increases.
    #[default]
    Exact,
    /// `z = C̄⁻¹ v`, which treats the other factors' derivative terms as if
    /// they did not scale with `z`. Improvements are measured on that same
    /// simplified quadratic, so the full cost may rise between updates.
    Unscaled,
}

/// Hyper-parameters of the greedy trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    /// Virtual sample-noise variance per input dimension (unit-box units).
    pub sigma2: Vec<f64>,
    /// The inner loop stops once no dimension improves the surrogate cost by
    /// more than this.
    pub eps_inner: f64,
    /// Training stops once `det(Ψ Ψᵀ / n)` drops below this.
    pub eps_det: f64,
    /// Number of cosine basis functions per dimension.
    pub basis_sizes: Vec<usize>,
    pub max_outer: usize,
    pub max_inner_sweeps: usize,
    /// Seed of the per-sweep dimension permutation.
    pub seed: u64,
    /// Keep per-dimension cosine tables of all samples in memory instead of
    /// recomputing them on every update.
    pub cache_expansion: bool,
    #[serde(default)]
    pub inner_rule: InnerRule,
}

impl TrainerConfig {
    /// Defaults for `d` dimensions with the same `sigma2` everywhere.
    pub fn uniform(d: usize, sigma2: f64) -> Self {
        Self {
            sigma2: vec![sigma2; d],
            eps_inner: DEFAULT_EPS_INNER,
            eps_det: DEFAULT_EPS_DET,
            basis_sizes: vec![DEFAULT_BASIS_SIZE; d],
            max_outer: DEFAULT_MAX_OUTER,
            max_inner_sweeps: DEFAULT_MAX_INNER_SWEEPS,
            seed: 0,
            cache_expansion: true,
            inner_rule: InnerRule::Exact,
        }
    }

    pub fn with_basis_size(mut self, size: usize) -> Self {
        self.basis_sizes.iter_mut().for_each(|s| *s = size);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_inner_rule(mut self, rule: InnerRule) -> Self {
        self.inner_rule = rule;
        self
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2.iter_mut().for_each(|s| *s = sigma2);
        self
    }

    pub fn dim(&self) -> usize {
        self.sigma2.len()
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.sigma2.len() != d || self.basis_sizes.len() != d {
            return Err(Error::invalid(format!(
                "config has {} noise variances and {} basis sizes for d = {d}",
                self.sigma2.len(),
                self.basis_sizes.len()
            )));
        }
        if self.sigma2.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::invalid("noise variances must be finite and non-negative"));
        }
        if !(self.eps_inner > 0.0 && self.eps_det > 0.0) {
            return Err(Error::invalid("thresholds must be positive"));
        }
        if self.max_outer == 0 || self.max_inner_sweeps == 0 {
            return Err(Error::invalid("iteration caps must be at least 1"));
        }
        if self.basis_sizes.contains(&0) {
            return Err(Error::invalid("basis sizes must be at least 1"));
        }
        Ok(())
    }

    pub fn specs(&self) -> Result<Vec<BasisSpec>> {
        self.basis_sizes.iter().map(|&s| BasisSpec::cosine(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = TrainerConfig::uniform(3, 1e-3);
        assert_eq!(c.basis_sizes, vec![50; 3]);
        assert_eq!(c.eps_inner, 1e-6);
        assert_eq!(c.eps_det, 1e-12);
        assert_eq!(c.max_outer, 200);
        assert_eq!(c.max_inner_sweeps, 1000);
        assert_eq!(c.inner_rule, InnerRule::Exact);
        assert!(c.validate(3).is_ok());
    }

    #[test]
    fn invalid_configs() {
        assert!(TrainerConfig::uniform(2, 1e-3).validate(3).is_err());
        assert!(TrainerConfig::uniform(2, -1.0).validate(2).is_err());
        let mut c = TrainerConfig::uniform(2, 1e-3);
        c.eps_det = 0.0;
        assert!(c.validate(2).is_err());
        let mut c = TrainerConfig::uniform(2, 1e-3);
        c.max_outer = 0;
        assert!(c.validate(2).is_err());
        assert!(TrainerConfig::uniform(2, 1e-3).with_basis_size(0).validate(2).is_err());
    }
}
