//! Seeded experiment harness around the `akalls` learner: JSON configs,
//! parallel trial runs, record tables, rate summaries and plots.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod record;
pub mod report;
pub mod runner;

pub use config::{EvalMethod, ExperimentConfig};
pub use error::{BenchError, Result};
pub use record::{load_records, RecordSet, RunRecord};
pub use report::{emit_report, summarize, ReportFormat, Summary};
pub use runner::{run_experiment, Execution};
