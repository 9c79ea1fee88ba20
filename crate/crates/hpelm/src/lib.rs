//! Extreme learning machine classifier toolkit.
//!
//! A single-hidden-layer network whose hidden weights are random and frozen;
//! only the linear output layer is trained, by solving a regularized
//! least-squares problem over streamed normal-equation factors. The crate
//! bundles the six classic activation kinds (linear, sigmoid, tanh, and
//! L1/L2/L∞ Gaussian RBF units), F-score/Fisher-score feature selection, a
//! CSV ingestion pipeline with stratified 70/30 splitting, and a CLI that
//! runs full activation-combination experiment grids.
//!
//! Everything is deterministic given a seed: hidden weights come from
//! per-neuron substreams, splits from a seeded shuffle, and grid rows from
//! per-row derived seeds, so reports reproduce bit-for-bit across runs and
//! `--jobs` settings.

pub mod activation;
pub mod cli;
pub mod data;
pub mod error;
pub mod featsel;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod seeding;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, NormalEqAccumulator, Ridge, SolveReport};
