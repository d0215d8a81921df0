//! Optimization, the training loop and repeated-run statistics.

mod adam;
mod benchmark;
mod data;
mod repeat;
mod run;

pub use adam::OptimizerState;
pub use benchmark::Benchmark;
pub use data::{LabeledSet, PreparedData};
pub use repeat::{repeat_runs, summarize, write_curve_csv, write_json, AggregateResult, Summary};
pub use run::{evaluate, evaluate_set, train, train_model, EpochRecord, Hyper, RunResult, TrainedRun};
