//! Regression with linear factored functions (LFF): sums of products of
//! one-dimensional cosine expansions, trained greedily one basis function at
//! a time.
//!
//! ```
//! use lff::harness::generate_spiral;
//! use lff::trainer::{fit, TrainerConfig};
//!
//! let raw = generate_spiral(200, 0, 1).unwrap();
//! let (_, data) = raw.fit_transform(0.05).unwrap();
//! let mut config = TrainerConfig::uniform(2, 1e-3).with_basis_size(10);
//! config.max_outer = 3;
//! let (model, diagnostics) = fit(&data, &config).unwrap();
//! assert_eq!(model.num_bases(), diagnostics.num_bases);
//! let predictions = model.predict(raw.x()).unwrap();
//! assert_eq!(predictions.len(), 200);
//! ```

pub mod basis;
pub mod error;
pub mod gp;
pub mod harness;
pub mod lff;
pub mod linalg;
pub mod trainer;

pub use basis::{BasisKind, BasisSpec};
pub use error::{Error, Result};
pub use gp::{gp_fit, gp_predict, GpConfig, GpModel};
pub use harness::{CvReport, Dataset, InputTransform};
pub use lff::{FactoredBasisFunction, Lff, ModelFormat};
pub use trainer::{fit, FitDiagnostics, InnerRule, TrainerConfig};
