use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::SplitSpec;
use crate::encoders::{EncoderSpec, ModelSpec};
use crate::error::{Error, Result};
use crate::smoothing::{Regime, RegimeConfig};
use crate::trainer::{train, write_json, Hyper, PreparedData, RunResult};

use super::commands::create_dir;
use super::config::ExperimentConfig;
use super::prepare::{load_corpus, prepare, splits_for};

/// One table column: a regime, with an unlabeled multiplier for the
/// regimes that use unlabeled data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub regime: Regime,
    pub multiplier: Option<usize>,
}

impl Column {
    /// `Sup`, `AT`, `Pi x20`, `AT+VAT x2`, ...
    pub fn label(&self) -> String {
        match self.multiplier {
            Some(m) => format!("{} x{m}", self.regime),
            None => self.regime.to_string(),
        }
    }
}

/// Columns in regime order; semi-supervised regimes expand over the multipliers.
pub fn columns(cfg: &ExperimentConfig) -> Vec<Column> {
    cfg.grid
        .regimes
        .iter()
        .flat_map(|&regime| {
            if regime.uses_unlabeled() {
                cfg.grid
                    .multipliers
                    .iter()
                    .map(|&m| Column {
                        regime,
                        multiplier: Some(m),
                    })
                    .collect()
            } else {
                vec![Column {
                    regime,
                    multiplier: None,
                }]
            }
        })
        .collect()
}

/// Encoder-by-column cells of the grid, row-major.
pub fn cells(cfg: &ExperimentConfig) -> Vec<(EncoderSpec, Column)> {
    let cols = columns(cfg);
    cfg.grid
        .encoders
        .iter()
        .flat_map(|e| cols.iter().map(move |c| (e.clone(), *c)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub dropout: f64,
    pub learning_rate: f64,
    /// Means over the repeated seeds; absent if any run failed.
    pub val_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub encoder: String,
    pub column: String,
    pub regime: Regime,
    pub multiplier: Option<usize>,
    /// Index into `candidates` of the best mean validation accuracy.
    pub selected: Option<usize>,
    pub candidates: Vec<CandidateResult>,
}

impl GridCell {
    pub fn test_accuracy(&self) -> Option<f64> {
        self.selected.and_then(|i| self.candidates[i].test_accuracy)
    }
}

/// Test accuracies in percent, rounded to two decimals; `None` marks a failed cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

const FAILED: &str = "FAILED";

fn percent(fraction: f64) -> f64 {
    (fraction * 10_000.0).round() / 100.0
}

impl GridTable {
    pub fn from_cells(rows: Vec<String>, columns: Vec<String>, cells: &[GridCell]) -> Self {
        let values = cells
            .chunks(columns.len().max(1))
            .map(|row| row.iter().map(|c| c.test_accuracy().map(percent)).collect())
            .collect();
        Self { rows, columns, values }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("encoder".to_string()).chain(self.columns.iter().cloned());
        w.write_record(header).map_err(csv_err)?;
        for (name, vals) in self.rows.iter().zip(&self.values) {
            let fields = std::iter::once(name.clone()).chain(vals.iter().map(|v| match v {
                Some(x) => format!("{x:.2}"),
                None => FAILED.to_string(),
            }));
            w.write_record(fields).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::config("grid", e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::config("grid", e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_err)?.clone();
        let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut rows = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            rows.push(rec.get(0).unwrap_or_default().to_string());
            let vals = rec
                .iter()
                .skip(1)
                .map(|f| match f {
                    FAILED => Ok(None),
                    x => x
                        .parse::<f64>()
                        .map(Some)
                        .map_err(|_| Error::config("grid.csv", format!("bad cell `{x}`"))),
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(vals);
        }
        Ok(Self { rows, columns, values })
    }

    /// Right-aligned columns for terminal display.
    pub fn to_text(&self) -> String {
        let cell = |v: &Option<f64>| v.map_or_else(|| FAILED.to_string(), |x| format!("{x:.2}"));
        let first = self.rows.iter().map(String::len).chain([7]).max().unwrap_or(7);
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| {
                self.values
                    .iter()
                    .map(|r| cell(&r[j]).len())
                    .chain([c.len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = format!("{:<first$}", "encoder");
        for (c, w) in self.columns.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
        for (name, vals) in self.rows.iter().zip(&self.values) {
            let _ = write!(out, "{name:<first$}");
            for (v, w) in vals.iter().zip(&widths) {
                let _ = write!(out, "  {:>w$}", cell(v));
            }
            out.push('\n');
        }
        out
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::config("grid.csv", e.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub table: GridTable,
    pub cells: Vec<GridCell>,
}

struct Job {
    cell: usize,
    candidate: usize,
    spec: ModelSpec,
    regime: RegimeConfig,
    hyper: Hyper,
    data_key: Option<usize>,
    seed: u64,
}

/// Runs every cell with every dropout and learning-rate candidate over
/// `repeats` seeds, keeps the candidate with the best mean validation
/// accuracy, and writes `grid.csv`, `grid.txt` and `grid.json`.
pub fn cmd_grid(cfg: &ExperimentConfig) -> Result<GridReport> {
    create_dir(&cfg.output_dir)?;
    let plan = cells(cfg);
    let corpus = load_corpus(cfg)?;

    // Supervised columns use the configured split; the labeled, validation
    // and test parts do not depend on the multiplier.
    let mut datasets: BTreeMap<Option<usize>, PreparedData> = BTreeMap::new();
    for (_, col) in &plan {
        if datasets.contains_key(&col.multiplier) {
            continue;
        }
        let split = SplitSpec {
            unlabeled_multiplier: col.multiplier.unwrap_or(cfg.split.unlabeled_multiplier),
            ..cfg.split.clone()
        };
        let splits = splits_for(&corpus, &split)?;
        datasets.insert(col.multiplier, prepare(cfg, &corpus, &splits)?);
    }

    let candidates: Vec<(f64, f64)> = cfg
        .grid
        .dropout
        .iter()
        .flat_map(|&d| cfg.grid.learning_rate.iter().map(move |&lr| (d, lr)))
        .collect();
    let mut jobs = Vec::new();
    for (cell, (encoder, col)) in plan.iter().enumerate() {
        for (candidate, &(dropout, lr)) in candidates.iter().enumerate() {
            for r in 0..cfg.repeats as u64 {
                jobs.push(Job {
                    cell,
                    candidate,
                    spec: ModelSpec {
                        encoder: encoder.clone(),
                        dropout_rate: dropout,
                        ..cfg.model.clone()
                    },
                    regime: RegimeConfig {
                        regime: col.regime,
                        ..cfg.regime.clone()
                    },
                    hyper: Hyper {
                        learning_rate: lr,
                        ..cfg.trainer.clone()
                    },
                    data_key: col.multiplier,
                    seed: cfg.seed + r,
                });
            }
        }
    }
    log::info!(
        "grid: {} cells x {} candidates x {} seeds",
        plan.len(),
        candidates.len(),
        cfg.repeats
    );

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    let outcomes: Vec<std::result::Result<RunResult, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|j| {
                let run =
                    train(&j.spec, &j.regime, &datasets[&j.data_key], &j.hyper, j.seed).map_err(|e| e.to_string())?;
                match run.failure {
                    Some(why) => Err(why),
                    None => Ok(run),
                }
            })
            .collect()
    });

    let mut grouped: Vec<Vec<Vec<&std::result::Result<RunResult, String>>>> =
        vec![vec![Vec::new(); candidates.len()]; plan.len()];
    for (j, o) in jobs.iter().zip(&outcomes) {
        grouped[j.cell][j.candidate].push(o);
    }

    let mut report_cells = Vec::with_capacity(plan.len());
    for ((encoder, col), per_candidate) in plan.iter().zip(grouped) {
        let results: Vec<CandidateResult> = candidates
            .iter()
            .zip(per_candidate)
            .map(|(&(dropout, learning_rate), runs)| {
                let failure = runs.iter().find_map(|r| r.as_ref().err().cloned());
                let ok: Vec<&RunResult> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
                let mean = |f: fn(&RunResult) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64;
                let complete = failure.is_none() && !ok.is_empty();
                CandidateResult {
                    dropout,
                    learning_rate,
                    val_accuracy: complete.then(|| mean(|r| r.best_val_accuracy)),
                    test_accuracy: complete.then(|| mean(|r| r.test_accuracy_at_best)),
                    failure,
                }
            })
            .collect();
        let mut selected: Option<usize> = None;
        for (i, c) in results.iter().enumerate() {
            if let Some(v) = c.val_accuracy {
                if selected.is_none_or(|s| v > results[s].val_accuracy.unwrap_or(f64::NEG_INFINITY)) {
                    selected = Some(i);
                }
            }
        }
        let cell = GridCell {
            encoder: encoder.name().to_string(),
            column: col.label(),
            regime: col.regime,
            multiplier: col.multiplier,
            selected,
            candidates: results,
        };
        match (cell.selected, cell.test_accuracy()) {
            (Some(i), Some(t)) => println!(
                "{} {}: test {:.2}% (dropout {}, lr {})",
                cell.encoder,
                cell.column,
                100.0 * t,
                cell.candidates[i].dropout,
                cell.candidates[i].learning_rate
            ),
            _ => println!(
                "{} {}: FAILED ({})",
                cell.encoder,
                cell.column,
                cell.candidates
                    .iter()
                    .find_map(|c| c.failure.clone())
                    .unwrap_or_default()
            ),
        }
        report_cells.push(cell);
    }

    let rows = cfg.grid.encoders.iter().map(|e| e.name().to_string()).collect();
    let cols = columns(cfg).iter().map(Column::label).collect();
    let table = GridTable::from_cells(rows, cols, &report_cells);
    let out = &cfg.output_dir;
    let csv_path = out.join("grid.csv");
    fs::write(&csv_path, table.to_csv()?).map_err(|e| Error::io(&csv_path, e))?;
    let txt_path = out.join("grid.txt");
    let text = table.to_text();
    fs::write(&txt_path, &text).map_err(|e| Error::io(&txt_path, e))?;
    print!("{text}");
    let report = GridReport {
        table,
        cells: report_cells,
    };
    write_json(&out.join("grid.json"), &report)?;
    Ok(report)
}
