use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_std, rmse, Dataset, InputTransform, DEFAULT_MARGIN};
use crate::error::{Error, Result};
use crate::gp::{gp_fit, GpConfig};
use crate::trainer::{fit, TrainerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Lff,
    Gp,
}

/// One point of a hyper-parameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "lowercase")]
pub enum HyperParams {
    Lff { sigma2: f64 },
    Gp { kernel_width: f64, prior_precision: f64 },
}

/// A learner together with the grid it is tuned over.
#[derive(Debug, Clone)]
pub struct Learner {
    kind: LearnerKind,
    lff: TrainerConfig,
    gp: GpConfig,
    margin: f64,
    grid: Vec<HyperParams>,
}

impl Learner {
    /// LFF trained with `base`, with `σ_k² = s` for every `s` in the grid.
    /// Inputs are mapped to the unit box with the default margin.
    pub fn lff(base: TrainerConfig, sigma2: &[f64]) -> Self {
        Self {
            kind: LearnerKind::Lff,
            lff: base,
            gp: GpConfig::new(1.0, 1.0),
            margin: DEFAULT_MARGIN,
            grid: sigma2.iter().map(|&s| HyperParams::Lff { sigma2: s }).collect(),
        }
    }

    /// GP baseline over the product grid of kernel widths and prior
    /// precisions. Inputs are standardized.
    pub fn gp(base: GpConfig, widths: &[f64], precisions: &[f64]) -> Self {
        let grid = widths
            .iter()
            .flat_map(|&w| {
                precisions.iter().map(move |&p| HyperParams::Gp {
                    kernel_width: w,
                    prior_precision: p,
                })
            })
            .collect();
        Self {
            kind: LearnerKind::Gp,
            lff: TrainerConfig::uniform(0, 0.0),
            gp: base,
            margin: DEFAULT_MARGIN,
            grid,
        }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn grid(&self) -> &[HyperParams] {
        &self.grid
    }

    /// Fits on raw `train` and returns (predictions on raw `test`, model size).
    pub fn fit_predict(&self, params: &HyperParams, train: &Dataset, test: &Dataset) -> Result<(Vec<f64>, usize)> {
        match *params {
            HyperParams::Lff { sigma2 } => {
                let (_, unit) = train.fit_transform(self.margin)?;
                let mut config = self.lff.clone();
                config.sigma2 = vec![sigma2; train.dim()];
                if config.basis_sizes.len() != train.dim() {
                    let size = config.basis_sizes.first().copied().unwrap_or(crate::trainer::DEFAULT_BASIS_SIZE);
                    config.basis_sizes = vec![size; train.dim()];
                }
                let (model, diag) = fit(&unit, &config)?;
                Ok((model.predict(test.x())?, diag.num_bases))
            }
            HyperParams::Gp {
                kernel_width,
                prior_precision,
            } => {
                let tf = InputTransform::fit_standardize(train.x())?;
                let std = train.apply_transform(&tf)?;
                let config = GpConfig {
                    kernel_width,
                    prior_precision,
                    ..self.gp.clone()
                };
                let model = gp_fit(&std, &config)?;
                Ok((model.predict(test.x())?, model.support_size()))
            }
        }
    }
}

/// Cross-validation results of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPointResult {
    pub params: HyperParams,
    pub fold_rmse: Vec<f64>,
    pub fold_m: Vec<usize>,
    pub fold_seconds: Vec<f64>,
    pub mean_rmse: f64,
    pub std_rmse: f64,
    pub mean_m: f64,
    pub std_m: f64,
}

/// Outcome of a k-fold cross-validation over a hyper-parameter grid. The
/// reported numbers are those of the grid point with the lowest mean RMSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub learner: LearnerKind,
    pub folds: usize,
    pub seed: u64,
    pub n: usize,
    pub selection: String,
    pub best: usize,
    pub params: HyperParams,
    pub fold_rmse: Vec<f64>,
    pub fold_m: Vec<usize>,
    pub fold_seconds: Vec<f64>,
    pub mean_rmse: f64,
    pub std_rmse: f64,
    pub mean_m: f64,
    pub std_m: f64,
    pub grid: Vec<GridPointResult>,
}

impl CvReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("report", e.to_string()))
    }

    /// One row per grid point and fold.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("grid_index,learner,sigma2,kernel_width,prior_precision,fold,rmse,m,seconds\n");
        for (g, point) in self.grid.iter().enumerate() {
            let (learner, s, w, p) = match point.params {
                HyperParams::Lff { sigma2 } => ("lff", sigma2.to_string(), String::new(), String::new()),
                HyperParams::Gp {
                    kernel_width,
                    prior_precision,
                } => ("gp", String::new(), kernel_width.to_string(), prior_precision.to_string()),
            };
            for f in 0..point.fold_rmse.len() {
                let _ = writeln!(
                    out,
                    "{g},{learner},{s},{w},{p},{f},{},{},{}",
                    point.fold_rmse[f], point.fold_m[f], point.fold_seconds[f]
                );
            }
        }
        out
    }

    /// The report with all wall-clock entries zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        out.fold_seconds.iter_mut().for_each(|s| *s = 0.0);
        for g in &mut out.grid {
            g.fold_seconds.iter_mut().for_each(|s| *s = 0.0);
        }
        out
    }
}

/// Fold index of every sample: a seeded shuffle followed by round-robin
/// assignment, so fold sizes differ by at most one.
pub fn kfold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (i, &p) in perm.iter().enumerate() {
        fold[p] = i % folds;
    }
    fold
}

/// K-fold cross-validation of `learner` over its whole grid on raw `data`.
/// Transforms are fitted on each training fold. `workers` bounds the number
/// of threads (1 runs everything on the calling thread).
pub fn kfold_cv(data: &Dataset, folds: usize, learner: &Learner, seed: u64, workers: usize) -> Result<CvReport> {
    if learner.grid.is_empty() {
        return Err(Error::invalid("hyper-parameter grid is empty"));
    }
    if folds < 2 {
        return Err(Error::invalid("at least 2 folds are required"));
    }
    if data.n() < folds {
        return Err(Error::invalid(format!("{} samples cannot fill {folds} folds", data.n())));
    }
    if data.is_transformed() {
        return Err(Error::invalid("cross-validation expects raw inputs"));
    }
    let assignment = kfold_assignment(data.n(), folds, seed);
    let splits: Vec<(Dataset, Dataset)> = (0..folds)
        .map(|f| {
            let train: Vec<usize> = (0..data.n()).filter(|&i| assignment[i] != f).collect();
            let test: Vec<usize> = (0..data.n()).filter(|&i| assignment[i] == f).collect();
            (data.subset(&train), data.subset(&test))
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..learner.grid.len())
        .flat_map(|g| (0..folds).map(move |f| (g, f)))
        .collect();
    let run = |&(g, f): &(usize, usize)| -> Result<(f64, usize, f64)> {
        let (train, test) = &splits[f];
        let start = Instant::now();
        let (pred, m) = learner.fit_predict(&learner.grid[g], train, test)?;
        let seconds = start.elapsed().as_secs_f64();
        Ok((rmse(&pred, test.y())?, m, seconds))
    };
    let outcomes: Vec<Result<(f64, usize, f64)>> = if workers <= 1 {
        jobs.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect())
    };
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let grid: Vec<GridPointResult> = learner
        .grid
        .iter()
        .enumerate()
        .map(|(g, &params)| {
            let row = &outcomes[g * folds..(g + 1) * folds];
            let fold_rmse: Vec<f64> = row.iter().map(|o| o.0).collect();
            let fold_m: Vec<usize> = row.iter().map(|o| o.1).collect();
            let (mean_rmse, std_rmse) = mean_std(&fold_rmse);
            let (mean_m, std_m) = mean_std(&fold_m.iter().map(|&m| m as f64).collect::<Vec<_>>());
            GridPointResult {
                params,
                fold_rmse,
                fold_m,
                fold_seconds: row.iter().map(|o| o.2).collect(),
                mean_rmse,
                std_rmse,
                mean_m,
                std_m,
            }
        })
        .collect();
    let best = (0..grid.len())
        .min_by(|&a, &b| grid[a].mean_rmse.total_cmp(&grid[b].mean_rmse))
        .expect("grid is non-empty");
    let chosen = grid[best].clone();
    Ok(CvReport {
        learner: learner.kind,
        folds,
        seed,
        n: data.n(),
        selection: "best grid point by mean fold RMSE".into(),
        best,
        params: chosen.params,
        fold_rmse: chosen.fold_rmse,
        fold_m: chosen.fold_m,
        fold_seconds: chosen.fold_seconds,
        mean_rmse: chosen.mean_rmse,
        std_rmse: chosen.std_rmse,
        mean_m: chosen.mean_m,
        std_m: chosen.std_m,
        grid,
    })
}
