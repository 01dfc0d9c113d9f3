//! Metrics, experiment runners and the update-time benchmark.

mod bench;
mod experiment;
pub mod metrics;
mod report;
mod sketch;

pub use bench::bench_update;
pub use experiment::{
    run_experiment, run_experiment_with, run_on_stream, run_quantiles, Distribution, EvalOptions, ExperimentSpec,
    GeneratorSpec, MAX_ENUMERABLE_BITS,
};
pub use metrics::{ks_divergence, mse, precision, recall, RankDeviation};
pub use report::{reports_to_json, write_csv, EvalReport, EvalSet, QuantileAnswer, QuantileReport};
pub use sketch::{AnySketch, SketchKind, SketchSpec};

use crate::error::SketchError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error("guarantee violated: {}", failures.join("; "))]
    Guarantee { reports: Vec<EvalReport>, failures: Vec<String> },
    #[error("guarantee violated: {}", failures.join("; "))]
    QuantileGuarantee { report: Box<QuantileReport>, failures: Vec<String> },
}
