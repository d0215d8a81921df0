use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoders::ModelSpec;
use crate::error::{Error, Result};
use crate::smoothing::{Regime, RegimeConfig};

use super::data::PreparedData;
use super::run::{train, Hyper, RunResult};

/// Mean, sample standard deviation and range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub max_minus_min: f64,
}

/// `None` for fewer than two values.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Some(Summary {
        mean,
        std: var.sqrt(),
        max_minus_min: max - min,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub regime: Regime,
    pub encoder: String,
    pub runs: Vec<RunResult>,
    /// Test accuracy statistics over the runs that did not fail.
    pub test_accuracy: Option<Summary>,
    pub failed_seeds: Vec<u64>,
}

/// Trains with seeds `base_seed .. base_seed + n` on at most `jobs` threads
/// and aggregates test accuracy. Results are in seed order regardless of
/// scheduling.
pub fn repeat_runs(
    spec: &ModelSpec,
    cfg: &RegimeConfig,
    data: &PreparedData,
    hyper: &Hyper,
    n: usize,
    base_seed: u64,
    jobs: usize,
) -> Result<AggregateResult> {
    if n < 2 {
        return Err(Error::config("repeats", "need at least 2 runs to aggregate"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    let runs = pool.install(|| {
        (0..n as u64)
            .into_par_iter()
            .map(|i| train(spec, cfg, data, hyper, base_seed + i))
            .collect::<Result<Vec<_>>>()
    })?;
    let ok: Vec<f64> = runs
        .iter()
        .filter(|r| !r.failed())
        .map(|r| r.test_accuracy_at_best)
        .collect();
    let failed_seeds: Vec<u64> = runs.iter().filter(|r| r.failed()).map(|r| r.seed).collect();
    if !failed_seeds.is_empty() {
        log::warn!("{} of {n} runs failed: seeds {failed_seeds:?}", failed_seeds.len());
    }
    Ok(AggregateResult {
        regime: cfg.regime,
        encoder: spec.encoder.name().to_string(),
        test_accuracy: summarize(&ok),
        failed_seeds,
        runs,
    })
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `epoch,train_loss,val_accuracy` rows.
pub fn write_curve_csv(path: &Path, run: &RunResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["epoch", "train_loss", "val_accuracy"])
        .map_err(|e| csv_error(path, e))?;
    for e in &run.epochs {
        w.write_record([
            e.epoch.to_string(),
            e.train_loss.to_string(),
            e.val_accuracy.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}
