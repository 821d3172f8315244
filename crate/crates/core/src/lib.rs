//! Adaptive nonparametric active learning under a local smoothness
//! condition.
//!
//! The learner works on a pool of unlabeled points and a label budget. It
//! adapts to unknown smoothness and margin-noise exponents by sweeping a grid
//! of smoothness levels, inferring labels of selected pool points from
//! sequential majority votes over their nearest neighbors, and returning the
//! 1-NN classifier on the points whose labels it could certify.
//!
//! - [`problem`]: synthetic problems with known `eta`, pools and the label oracle
//! - [`neighbors`]: exact nearest-neighbor ordering
//! - [`stats`]: confidence radius, sample-size bound and parameter grids
//! - [`engine`]: the learner itself
//! - [`classifier`]: 1-NN output, passive k-NN baseline, reference classifiers
//! - [`eval`]: excess risk, assumption audits, rate fitting

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod engine;
pub mod error;
pub mod eval;
pub mod neighbors;
pub mod problem;
pub mod stats;

pub use classifier::{Classifier, LabeledPoint, OneNNClassifier, PassiveKnn};
pub use engine::{confident_adapt, reliable, run_akalls, ActiveState, AkallsRun, EngineParams};
pub use error::{Error, Result};
pub use neighbors::NeighborIndex;
pub use problem::{draw_pool, parse_problem, Label, Oracle, Points, Pool, Problem};
pub use stats::StatParams;
