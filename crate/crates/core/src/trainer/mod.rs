//! Greedy construction of an LFF by regularized alternating factor updates.

mod config;
mod ols;
mod state;

pub use config::{
    InnerRule, TrainerConfig, DEFAULT_BASIS_SIZE, DEFAULT_EPS_DET, DEFAULT_EPS_INNER, DEFAULT_MAX_INNER_SWEEPS,
    DEFAULT_MAX_OUTER,
};
pub use ols::{gram_log_det, ols_refit, should_stop, OlsSolution};
pub use state::{Acceptance, InnerUpdate, TrainerState};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::Dataset;
use crate::lff::Lff;

/// Candidates whose optimal scale is below this fraction of the labels' root
/// mean square are not added.
pub const NEGLIGIBLE_SCALE: f64 = 1e-10;

/// Why the outer loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The new basis function was numerically dependent on the accepted ones.
    Determinant,
    /// `max_outer` basis functions were accepted.
    MaxOuter,
    /// The converged candidate's optimal scale was negligible against the
    /// labels, i.e. the residual is round-off.
    NegligibleResidual,
}

/// One outer iteration: the inner loop that shaped a candidate and the
/// refit after it was accepted (or rejected).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    /// Number of accepted basis functions after this iteration.
    pub m: usize,
    pub inner_sweeps: usize,
    pub inner_converged: bool,
    /// Surrogate cost of the scaled candidate before the first sweep and
    /// after every sweep.
    pub cost_trace: Vec<f64>,
    pub accepted: bool,
    pub gram_log_det: f64,
    pub training_rmse: f64,
    pub ols_jittered: bool,
    /// Inner solves whose covariance matrix needed diagonal jitter.
    pub jittered_inner_solves: usize,
    pub max_condition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub num_bases: usize,
    pub stop_reason: StopReason,
    pub training_rmse: f64,
    /// OLS refits that fell back to a jittered solve.
    pub jittered_solves: usize,
    pub iterations: Vec<OuterRecord>,
}

impl FitDiagnostics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagnostics serialize")
    }
}

/// Trains an LFF on data already mapped into the unit box.
///
/// The returned model carries the dataset's input transform, so
/// [`Lff::predict`] accepts raw inputs.
pub fn fit(data: &Dataset, config: &TrainerConfig) -> Result<(Lff, FitDiagnostics)> {
    fit_with(data, config, |_, _| {})
}

/// Like [`fit`], calling `observe(state, update)` for every inner update
/// before it is applied.
pub fn fit_with(
    data: &Dataset,
    config: &TrainerConfig,
    mut observe: impl FnMut(&TrainerState<'_>, &InnerUpdate),
) -> Result<(Lff, FitDiagnostics)> {
    if data.n() == 0 {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    if data.y().iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid("labels must be finite"));
    }
    let mut state = TrainerState::new(data, config)?;
    let label_rms = (data.y().iter().map(|y| y * y).sum::<f64>() / data.n() as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..state.dim()).collect();
    let mut iterations = Vec::new();
    let mut stop_reason = StopReason::MaxOuter;
    let mut jittered_solves = 0;

    for _ in 0..config.max_outer {
        state.reset_candidate();
        let mut cost_trace = vec![state.surrogate_cost()];
        let mut inner_sweeps = 0;
        let mut inner_converged = false;
        let mut jittered_inner = 0;
        let mut max_condition = 0.0f64;
        while inner_sweeps < config.max_inner_sweeps {
            order.shuffle(&mut rng);
            let mut max_improvement = 0.0f64;
            for &k in &order {
                let update = state.propose_update(k);
                max_improvement = max_improvement.max(update.improvement);
                jittered_inner += usize::from(update.jitter > 0.0);
                max_condition = max_condition.max(update.condition);
                observe(&state, &update);
                state.apply_update(k, update);
            }
            inner_sweeps += 1;
            cost_trace.push(state.surrogate_cost());
            if max_improvement <= config.eps_inner {
                inner_converged = true;
                break;
            }
        }
        if state.candidate_scale().abs() <= NEGLIGIBLE_SCALE * label_rms {
            stop_reason = StopReason::NegligibleResidual;
            break;
        }
        let acc = state.accept_candidate(config.eps_det)?;
        jittered_solves += usize::from(acc.ols_jittered);
        iterations.push(OuterRecord {
            m: state.model().num_bases(),
            inner_sweeps,
            inner_converged,
            cost_trace,
            accepted: acc.accepted,
            gram_log_det: acc.gram_log_det,
            training_rmse: state.training_rmse(),
            ols_jittered: acc.ols_jittered,
            jittered_inner_solves: jittered_inner,
            max_condition,
        });
        if !acc.accepted {
            stop_reason = StopReason::Determinant;
            break;
        }
    }

    let training_rmse = state.training_rmse();
    let mut model = state.into_model().with_transform(data.transform().cloned())?;
    model.mark_normalized()?;
    let diagnostics = FitDiagnostics {
        num_bases: model.num_bases(),
        stop_reason,
        training_rmse,
        jittered_solves,
        iterations,
    };
    Ok((model, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::rmse;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{PI, SQRT_2, TAU};

    #[test]
    fn constant_labels_need_one_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DMatrix::from_fn(50, 3, |_, _| rng.random::<f64>() * 10.0);
        let raw = Dataset::new(x, vec![-2.5; 50]).unwrap();
        let (_, data) = raw.fit_transform(0.05).unwrap();
        let (model, diag) = fit(&data, &TrainerConfig::uniform(3, 1e-3).with_basis_size(8)).unwrap();
        assert_eq!(model.num_bases(), 1);
        assert_eq!(diag.num_bases, 1);
        assert_eq!(diag.stop_reason, StopReason::NegligibleResidual);
        assert!(diag.training_rmse <= 1e-8);
        let probe = DMatrix::from_fn(10, 3, |_, _| rng.random::<f64>() * 10.0);
        for p in model.predict(&probe).unwrap() {
            assert!((p + 2.5).abs() <= 1e-8);
        }
        assert!(model.is_normalized());
    }

    fn sine_data(n: usize, offset: f64) -> Dataset {
        let x = DMatrix::from_fn(n, 1, |t, _| (t as f64 + offset) / n as f64);
        let y = x.iter().map(|x| (TAU * x).sin()).collect();
        Dataset::unit_box(x, y).unwrap()
    }

    /// Least-squares fit of `sin 2πx` on the first `m` cosine bases.
    fn cosine_least_squares(data: &Dataset, m: usize) -> Vec<f64> {
        let phi = |j: usize, x: f64| if j == 0 { 1.0 } else { SQRT_2 * (j as f64 * PI * x).cos() };
        let design = DMatrix::from_fn(data.n(), m, |t, j| phi(j, data.x()[(t, 0)]));
        let coef = design
            .clone()
            .svd(true, true)
            .solve(&DVector::from_column_slice(data.y()), 1e-12)
            .unwrap();
        (0..data.n())
            .map(|t| (0..m).map(|j| coef[j] * phi(j, data.x()[(t, 0)])).sum())
            .collect()
    }

    #[test]
    fn one_dimensional_sine() {
        let train = sine_data(200, 0.5);
        let test = sine_data(333, 0.25);
        let (model, _) = fit(&train, &TrainerConfig::uniform(1, 1e-8)).unwrap();
        let err = rmse(&model.evaluate(test.x()).unwrap(), test.y()).unwrap();
        let oracle = rmse(&cosine_least_squares(&test, 12), test.y()).unwrap();
        assert!(oracle <= 0.05);
        assert!(err <= 0.05, "test rmse {err}");
    }

    #[test]
    fn rejects_bad_input() {
        let raw = Dataset::new(DMatrix::from_element(3, 1, 2.0), vec![1.0, 2.0, 3.0]).unwrap();
        assert!(fit(&raw, &TrainerConfig::uniform(1, 0.1)).is_err());
        let (_, data) = raw.fit_transform(0.05).unwrap();
        assert!(fit(&data, &TrainerConfig::uniform(2, 0.1)).is_err());
        let mut cfg = TrainerConfig::uniform(1, 0.1);
        cfg.max_outer = 0;
        assert!(fit(&data, &cfg).is_err());
    }

    #[test]
    fn deterministic_diagnostics() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(80, 3, |_, _| rng.random::<f64>());
        let y = (0..80).map(|t| (3.0 * x[(t, 0)]).sin() * x[(t, 2)]).collect();
        let data = Dataset::unit_box(x, y).unwrap();
        let mut cfg = TrainerConfig::uniform(3, 1e-4).with_basis_size(10).with_seed(5);
        cfg.max_outer = 6;
        let (m1, d1) = fit(&data, &cfg).unwrap();
        let (m2, d2) = fit(&data, &cfg).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(d1.to_json(), d2.to_json());
        let parsed: FitDiagnostics = serde_json::from_str(&d1.to_json()).unwrap();
        assert_eq!(parsed, d1);
        cfg.cache_expansion = false;
        let (m3, _) = fit(&data, &cfg).unwrap();
        assert_eq!(m1.num_bases(), m3.num_bases());
        let x = DMatrix::from_fn(20, 3, |_, _| rng.random::<f64>());
        for (a, b) in m1.evaluate(&x).unwrap().iter().zip(m3.evaluate(&x).unwrap()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn observer_sees_every_update() {
        let data = sine_data(40, 0.5);
        let mut cfg = TrainerConfig::uniform(1, 1e-4).with_basis_size(6);
        cfg.max_outer = 3;
        let mut seen = 0;
        let (_, diag) = fit_with(&data, &cfg, |_, _| seen += 1).unwrap();
        let sweeps: usize = diag.iterations.iter().map(|r| r.inner_sweeps).sum();
        assert_eq!(seen, sweeps);
    }
}
