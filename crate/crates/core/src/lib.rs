//! Operator-network surrogate for transient adsorption in a packed bed.
//!
//! The crate covers the dimensionless column model and its finite-volume
//! reference solver, randomized initial-profile datasets, a branch/trunk
//! operator network with hand-written gradients, the training loop, error
//! metrics and the `adsorb` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod cli;
pub mod deeponet;
pub mod error;
pub mod field;
pub mod icgen;
pub mod io;
pub mod metrics;
pub mod nn;
pub mod physics;
pub mod solver;
pub mod store;
pub mod trainer;

pub use deeponet::{AnyModel, DeepONet, DeepONetConfig};
pub use error::{Error, Result};
pub use field::{Field, FieldPredictor, Phase};
pub use icgen::{build_dataset, build_ood_dataset, Dataset, DatasetConfig, Family, ICSpec, Split};
pub use metrics::{evaluate, relative_l2, EvalReport};
pub use physics::{dimensionless_coefficients, DimlessCoeffs, PhysicalParams};
pub use solver::{solve, Grid, ReferenceSolver, SolveOutput};
pub use store::{load_dataset, save_dataset};
pub use trainer::{train, TrainConfig, TrainReport, Trained};
