use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};

use super::ols::{gram_log_det, ols_refit};
use super::{InnerRule, TrainerConfig};
use crate::basis::{BasisSpec, CosineTable};
use crate::error::{Error, Result};
use crate::harness::Dataset;
use crate::lff::{FactoredBasisFunction, Lff};
use crate::linalg::SpdFactor;

/// Per-dimension cosine expansion of the training inputs, either cached or
/// recomputed on demand.
enum Expansion<'a> {
    Cached(Vec<CosineTable>),
    OnTheFly(&'a DMatrix<f64>),
}

impl Expansion<'_> {
    /// Calls `f(t, row)` for every sample, with `row[q] = cos(q π x_tk)` for
    /// `q < width`.
    fn for_each_row(&self, k: usize, width: usize, mut f: impl FnMut(usize, &[f64])) {
        match self {
            Expansion::Cached(tables) => {
                debug_assert!(width <= tables[k].width());
                for (t, row) in tables[k].rows().enumerate() {
                    f(t, &row[..width]);
                }
            }
            Expansion::OnTheFly(x) => {
                let mut buf = vec![0.0; width];
                for t in 0..x.nrows() {
                    CosineTable::fill_row(x[(t, k)], &mut buf);
                    f(t, &buf);
                }
            }
        }
    }
}

/// Outcome of one closed-form factor update.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerUpdate {
    /// The new unit-norm coefficient vector `b′^k`.
    pub factor: DVector<f64>,
    /// Norm of the unconstrained solution, i.e. the scale of the candidate
    /// after the update.
    pub scale: f64,
    /// Decrease of the surrogate cost of the scaled candidate.
    pub improvement: f64,
    /// Diagonal jitter the solve needed (0 if none).
    pub jitter: f64,
    /// Condition estimate of the regularized covariance matrix.
    pub condition: f64,
}

/// Whether the newest candidate was added to the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acceptance {
    pub accepted: bool,
    pub gram_log_det: f64,
    pub ols_jittered: bool,
}

/// Working state of the greedy trainer: the accepted model, its predictions
/// on the training samples, and the candidate basis function being fitted to
/// the residual.
pub struct TrainerState<'a> {
    y: &'a [f64],
    expansion: Expansion<'a>,
    n_samples: usize,
    specs: Vec<BasisSpec>,
    deriv: Vec<Vec<f64>>,
    sigma2: Vec<f64>,
    rule: InnerRule,
    model: Lff,
    predictions: Vec<f64>,
    residual: Vec<f64>,
    candidate: FactoredBasisFunction,
    scale: f64,
    values: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
}

impl<'a> TrainerState<'a> {
    pub fn new(data: &'a Dataset, config: &TrainerConfig) -> Result<Self> {
        if !data.is_transformed() {
            return Err(Error::invalid(
                "training data must be in unit-box coordinates; fit a transform first",
            ));
        }
        let d = data.dim();
        config.validate(d)?;
        let specs = config.specs()?;
        let x = data.x();
        let expansion = if config.cache_expansion {
            Expansion::Cached(
                specs
                    .iter()
                    .enumerate()
                    .map(|(k, s)| CosineTable::new(x.column(k).iter().copied(), 2 * s.size() - 1))
                    .collect(),
            )
        } else {
            Expansion::OnTheFly(x)
        };
        let n = data.n();
        let candidate = FactoredBasisFunction::constant(&specs);
        Ok(Self {
            y: data.y(),
            expansion,
            n_samples: n,
            deriv: specs.iter().map(|s| s.derivative_weights()).collect(),
            sigma2: config.sigma2.clone(),
            rule: config.inner_rule,
            model: Lff::zero(specs.clone()),
            specs,
            predictions: vec![0.0; n],
            residual: data.y().to_vec(),
            candidate,
            scale: 1.0,
            values: vec![vec![1.0; n]; d],
            psi: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n_samples
    }

    pub fn dim(&self) -> usize {
        self.specs.len()
    }

    pub fn model(&self) -> &Lff {
        &self.model
    }

    pub fn into_model(self) -> Lff {
        self.model
    }

    /// Current predictions `f(x_t)` of the accepted model.
    pub fn predictions(&self) -> &[f64] {
        &self.predictions
    }

    /// The candidate's unit-norm factors.
    pub fn candidate(&self) -> &FactoredBasisFunction {
        &self.candidate
    }

    /// The candidate is `scale · ∏_k g^k`.
    pub fn candidate_scale(&self) -> f64 {
        self.scale
    }

    /// Evaluations of the accepted basis functions, one row per function.
    pub fn psi(&self) -> &[Vec<f64>] {
        &self.psi
    }

    pub fn training_rmse(&self) -> f64 {
        (self.residual.iter().map(|r| r * r).sum::<f64>() / self.n() as f64).sqrt()
    }

    /// Replaces the accepted model (weights and basis), e.g. to set up a
    /// specific state in tests.
    pub fn set_model(&mut self, model: Lff) -> Result<()> {
        if model.specs() != self.specs.as_slice() {
            return Err(Error::invalid("model basis does not match the trainer configuration"));
        }
        self.psi = (0..model.num_bases())
            .map(|i| self.evaluate_product(&model.basis(i)))
            .collect();
        self.model = model;
        self.refresh_predictions();
        Ok(())
    }

    /// Resets the candidate to the constant function 1.
    pub fn reset_candidate(&mut self) {
        self.candidate = FactoredBasisFunction::constant(&self.specs);
        self.scale = 1.0;
        self.values.iter_mut().for_each(|v| v.iter_mut().for_each(|x| *x = 1.0));
    }

    /// Installs the candidate `scale · ∏_k g^k`. Factors should have unit
    /// norm for the update formulas to apply.
    pub fn set_candidate(&mut self, g: FactoredBasisFunction, scale: f64) -> Result<()> {
        self.check_candidate(&g)?;
        self.scale = scale;
        for k in 0..self.dim() {
            self.values[k] = self.evaluate_factor(k, &g.factors[k]);
        }
        self.candidate = g;
        Ok(())
    }

    /// Installs the result of [`propose_update`](Self::propose_update).
    pub fn apply_update(&mut self, k: usize, update: InnerUpdate) {
        self.scale = update.scale;
        self.set_factor(k, update.factor);
    }

    /// Replaces factor `k` of the candidate, keeping its scale.
    pub fn set_factor(&mut self, k: usize, b: DVector<f64>) {
        assert_eq!(b.len(), self.specs[k].size(), "factor length");
        self.values[k] = self.evaluate_factor(k, &b);
        self.candidate.factors[k] = b;
    }

    /// The regularized covariance matrix `C̄^k` and right-hand side `v` of the
    /// factor-`k` solve, together with the cross-smoothness `τ`.
    ///
    /// With the other factors fixed at unit norm, the surrogate cost of the
    /// candidate `zᵀ φ^k · ∏_{l≠k} g^l` is `Q(z) = zᵀ (C̄^k + τ I) z − 2 zᵀ v
    /// + const`, where `C̄^k = ⟨φ^k ∏ g^l, ∏ g^l φ^kᵀ⟩_ξ + σ_k² Ċ^k`,
    /// `τ = Σ_{l≠k} σ_l² ‖∂_l g^l‖²` and
    /// `v = ⟨φ^k ∏ g^l, y − f⟩_ξ − Σ_l σ_l² R^k_l`.
    pub fn regularized_system(&self, k: usize) -> (DMatrix<f64>, DVector<f64>, f64) {
        let mk = self.specs[k].size();
        let width = 2 * mk - 1;
        let weights = self.other_factors_product(k);
        let mut moments = vec![0.0; width];
        let mut proj = vec![0.0; mk];
        self.expansion.for_each_row(k, width, |t, row| {
            let w = weights[t];
            let ww = w * w;
            let wr = w * self.residual[t];
            for (m, c) in moments.iter_mut().zip(row) {
                *m += ww * c;
            }
            for (p, c) in proj.iter_mut().zip(&row[..mk]) {
                *p += wr * c;
            }
        });
        let inv_n = 1.0 / self.n() as f64;
        moments.iter_mut().for_each(|m| *m *= inv_n);
        // φ_i φ_j expressed through single cosines: φ_0² = 1,
        // φ_0 φ_j = √2 cos(jπx), φ_i φ_j = cos((i−j)πx) + cos((i+j)πx).
        let sigma2 = self.sigma2[k];
        let cbar = DMatrix::from_fn(mk, mk, |i, j| {
            let gram = match (i, j) {
                (0, 0) => moments[0],
                (0, j) => SQRT_2 * moments[j],
                (i, 0) => SQRT_2 * moments[i],
                (i, j) => moments[i.abs_diff(j)] + moments[i + j],
            };
            if i == j {
                gram + sigma2 * self.deriv[k][i]
            } else {
                gram
            }
        });
        let grad = self.regularizer_gradient(k);
        let sig = DVector::from_column_slice(&self.sigma2);
        let mut v = DVector::from_fn(mk, |j, _| {
            let p = proj[j] * inv_n;
            if j == 0 {
                p
            } else {
                SQRT_2 * p
            }
        });
        v -= grad * sig;
        (cbar, v, self.cross_smoothness(k))
    }

    /// `R^k_l = ∂/∂b^k ⟨∂_l g, ∂_l f⟩` for all `l`, as the columns of an
    /// `m_k × d` matrix.
    pub fn regularizer_gradient(&self, k: usize) -> DMatrix<f64> {
        let d = self.dim();
        let mk = self.specs[k].size();
        let m = self.model.num_bases();
        let mut out = DMatrix::zeros(mk, d);
        if m == 0 {
            return out;
        }
        let a = self.model.weights();
        let factors = self.model.factors();
        // p[s]_i = ⟨ψ_i^s, g^s⟩, q[s]_i = ⟨∂ψ_i^s, ∂g^s⟩
        let p: Vec<DVector<f64>> = (0..d)
            .map(|s| factors[s].tr_mul(&self.candidate.factors[s]))
            .collect();
        let q: Vec<DVector<f64>> = (0..d)
            .map(|s| {
                let weighted = DVector::from_fn(self.specs[s].size(), |j, _| {
                    self.deriv[s][j] * self.candidate.factors[s][j]
                });
                factors[s].tr_mul(&weighted)
            })
            .collect();
        for l in 0..d {
            let coef = DVector::from_fn(m, |i, _| {
                let mut c = a[i];
                for s in 0..d {
                    if s == k {
                        continue;
                    }
                    c *= if s == l { q[s][i] } else { p[s][i] };
                }
                c
            });
            let mut col = &factors[k] * coef;
            if l == k {
                for (j, v) in col.iter_mut().enumerate() {
                    *v *= self.deriv[k][j];
                }
            }
            out.set_column(l, &col);
        }
        out
    }

    /// Updates factor `k` with all other factors fixed and splits the new
    /// coefficient vector `z` into the unit-norm factor `z / ‖z‖` and the
    /// candidate scale `‖z‖`.
    ///
    /// Under [`InnerRule::Exact`] `z = (C̄ + τ I)⁻¹ v` and the improvement is
    /// the exact cost decrease `Q(s b) − Q(z)`, never negative beyond
    /// round-off. Under [`InnerRule::Unscaled`] `τ` is dropped from both the
    /// solve and the improvement.
    pub fn propose_update(&self, k: usize) -> InnerUpdate {
        let (mut a, v, tau) = self.regularized_system(k);
        if self.rule == InnerRule::Exact {
            let m = a.nrows();
            a.iter_mut().step_by(m + 1).for_each(|x| *x += tau);
        }
        let current = &self.candidate.factors[k] * self.scale;
        let keep = |jitter, condition| InnerUpdate {
            factor: self.candidate.factors[k].clone(),
            scale: self.scale,
            improvement: 0.0,
            jitter,
            condition,
        };
        let Some(factor) = SpdFactor::new(&a) else {
            return keep(0.0, f64::INFINITY);
        };
        let z = factor.solve(&v);
        let norm = z.norm();
        if !norm.is_finite() {
            return keep(factor.jitter(), factor.condition_estimate());
        }
        let q = |z: &DVector<f64>| z.dot(&(&a * z)) - 2.0 * z.dot(&v);
        let improvement = q(&current) - q(&z);
        let (b_new, scale) = if norm > 0.0 {
            (z / norm, norm)
        } else {
            (self.candidate.factors[k].clone(), 0.0)
        };
        InnerUpdate {
            factor: b_new,
            scale,
            improvement,
            jitter: factor.jitter(),
            condition: factor.condition_estimate(),
        }
    }

    /// Surrogate cost of the current (scaled) candidate.
    pub fn surrogate_cost(&self) -> f64 {
        let g: Vec<f64> = (0..self.n())
            .map(|t| self.scale * self.values.iter().map(|v| v[t]).product::<f64>())
            .collect();
        self.data_term(&g) + self.regularizer_term(&self.candidate, self.scale)
    }

    /// Surrogate cost `‖g − (y − f)‖²_ξ + Σ_k σ_k² ‖∂_k g + ∂_k f‖²` of an
    /// arbitrary candidate `g`.
    pub fn surrogate_cost_of(&self, g: &FactoredBasisFunction) -> Result<f64> {
        self.check_candidate(g)?;
        let values = self.evaluate_product(g);
        Ok(self.data_term(&values) + self.regularizer_term(g, 1.0))
    }

    /// Appends the candidate to the model unless it is numerically dependent
    /// on the accepted basis, then refits the weights.
    pub fn accept_candidate(&mut self, eps_det: f64) -> Result<Acceptance> {
        let row: Vec<f64> = (0..self.n())
            .map(|t| self.values.iter().map(|v| v[t]).product())
            .collect();
        self.psi.push(row);
        let log_det = gram_log_det(&self.psi, self.n());
        if log_det < eps_det.ln() {
            self.psi.pop();
            return Ok(Acceptance {
                accepted: false,
                gram_log_det: log_det,
                ols_jittered: false,
            });
        }
        self.model.push_basis(0.0, &self.candidate)?;
        let sol = ols_refit(&self.psi, self.y)?;
        self.model.set_weights(sol.weights)?;
        self.refresh_predictions();
        Ok(Acceptance {
            accepted: true,
            gram_log_det: log_det,
            ols_jittered: sol.jittered,
        })
    }

    fn refresh_predictions(&mut self) {
        let a = self.model.weights();
        for t in 0..self.n() {
            let f: f64 = self.psi.iter().zip(a).map(|(row, ai)| ai * row[t]).sum();
            self.predictions[t] = f;
            self.residual[t] = self.y[t] - f;
        }
    }

    fn data_term(&self, g: &[f64]) -> f64 {
        g.iter()
            .zip(&self.residual)
            .map(|(g, r)| (g - r).powi(2))
            .sum::<f64>()
            / self.n() as f64
    }

    fn regularizer_term(&self, g: &FactoredBasisFunction, scale: f64) -> f64 {
        let mut h = self.model.clone();
        h.push_basis(scale, g).expect("candidate checked against specs");
        (0..self.dim())
            .filter(|&k| self.sigma2[k] != 0.0)
            .map(|k| self.sigma2[k] * h.derivative_inner_product(&h, k).expect("same specs"))
            .sum()
    }

    fn cross_smoothness(&self, k: usize) -> f64 {
        (0..self.dim())
            .filter(|&l| l != k && self.sigma2[l] != 0.0)
            .map(|l| {
                let b = &self.candidate.factors[l];
                self.sigma2[l] * b.iter().zip(&self.deriv[l]).map(|(b, w)| w * b * b).sum::<f64>()
            })
            .sum()
    }

    fn other_factors_product(&self, k: usize) -> Vec<f64> {
        let mut w = vec![1.0; self.n()];
        for (l, v) in self.values.iter().enumerate() {
            if l != k {
                w.iter_mut().zip(v).for_each(|(w, g)| *w *= g);
            }
        }
        w
    }

    fn evaluate_factor(&self, k: usize, b: &DVector<f64>) -> Vec<f64> {
        let mk = self.specs[k].size();
        let coef: Vec<f64> = (0..mk).map(|j| if j == 0 { b[0] } else { SQRT_2 * b[j] }).collect();
        let mut out = vec![0.0; self.n()];
        self.expansion.for_each_row(k, mk, |t, row| {
            out[t] = row.iter().zip(&coef).map(|(c, b)| c * b).sum();
        });
        out
    }

    fn evaluate_product(&self, g: &FactoredBasisFunction) -> Vec<f64> {
        let mut out = vec![1.0; self.n()];
        for (k, b) in g.factors.iter().enumerate() {
            let v = self.evaluate_factor(k, b);
            out.iter_mut().zip(&v).for_each(|(o, v)| *o *= v);
        }
        out
    }

    fn check_candidate(&self, g: &FactoredBasisFunction) -> Result<()> {
        if g.factors.len() != self.dim()
            || g.factors.iter().zip(&self.specs).any(|(b, s)| b.len() != s.size())
        {
            return Err(Error::invalid("candidate does not match the basis specification"));
        }
        Ok(())
    }
}
