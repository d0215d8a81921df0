use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{DocumentBatch, SplitManifest};
use crate::encoders::{read_checkpoint, write_checkpoint, EncoderSpec, TextClassifier, EMBEDDING};
use crate::error::{Error, Result};
use crate::trainer::{repeat_runs, train_model, write_curve_csv, write_json, AggregateResult, RunResult};

use super::config::ExperimentConfig;
use super::prepare::{load_corpus, manifest, prepare, splits_for};

/// Result of `run`: one run, or an aggregate over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RunOutcome {
    Single(RunResult),
    Repeated(AggregateResult),
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// One line per run, e.g. `SWEM Sup seed 0: test 81.25% (best val 80.50% at epoch 3 of 13, 1.2s)`.
pub fn summary_line(run: &RunResult) -> String {
    let head = format!("{} {} seed {}", run.encoder, run.regime, run.seed);
    match &run.failure {
        Some(why) => format!("{head}: FAILED ({why})"),
        None => format!(
            "{head}: test {:.2}% (best val {:.2}% at epoch {} of {}, {:.1}s)",
            100.0 * run.test_accuracy_at_best,
            100.0 * run.best_val_accuracy,
            run.best_epoch,
            run.epochs_run,
            run.wall_clock_secs
        ),
    }
}

/// Trains the configured experiment and writes `manifest.json`,
/// `result.json` and the curves. A single run also writes `model.ckpt`.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let out = &cfg.output_dir;
    create_dir(out)?;
    let corpus = load_corpus(cfg)?;
    let splits = splits_for(&corpus, &cfg.split)?;
    let data = prepare(cfg, &corpus, &splits)?;
    write_json(&out.join("manifest.json"), &manifest(cfg, &corpus, splits))?;

    if cfg.repeats == 1 {
        let trained = train_model::<f32>(&cfg.model, &cfg.regime, &data, &cfg.trainer, cfg.seed)?;
        let run = trained.result;
        write_json(&out.join("result.json"), &run)?;
        write_curve_csv(&out.join("curves.csv"), &run)?;
        write_checkpoint(&out.join("model.ckpt"), &trained.model)?;
        println!("{}", summary_line(&run));
        return Ok(RunOutcome::Single(run));
    }

    let agg = repeat_runs(
        &cfg.model,
        &cfg.regime,
        &data,
        &cfg.trainer,
        cfg.repeats,
        cfg.seed,
        cfg.jobs,
    )?;
    for run in &agg.runs {
        write_curve_csv(&out.join(format!("curves_seed{}.csv", run.seed)), run)?;
        println!("{}", summary_line(run));
    }
    write_json(&out.join("result.json"), &agg)?;
    match &agg.test_accuracy {
        Some(s) => println!(
            "{} {}: mean {:.2} std {:.2} max-min {:.2} over {} runs",
            agg.encoder,
            agg.regime,
            100.0 * s.mean,
            100.0 * s.std,
            100.0 * s.max_minus_min,
            agg.runs.len() - agg.failed_seeds.len()
        ),
        None => println!("{} {}: too few successful runs to aggregate", agg.encoder, agg.regime),
    }
    Ok(RunOutcome::Repeated(agg))
}

/// Timestep counts for one document of the histogram batch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub doc: usize,
    pub length: usize,
    pub counts: Vec<usize>,
}

/// Writes `histogram.csv` for the first `histogram.batch_size` test
/// documents: for each document, how many pooled features took their
/// maximum at each timestep.
pub fn cmd_histogram(cfg: &ExperimentConfig, checkpoint: Option<&Path>) -> Result<Vec<HistogramRow>> {
    let path: PathBuf = checkpoint
        .map(Path::to_path_buf)
        .or_else(|| cfg.histogram.checkpoint.clone())
        .unwrap_or_else(|| cfg.output_dir.join("model.ckpt"));
    let model: TextClassifier<f32> = read_checkpoint(&path)?;
    if !matches!(model.spec().encoder, EncoderSpec::BilstmMax { .. }) {
        return Err(Error::WrongEncoder {
            op: "histogram",
            expected: "bilstm_max",
            found: model.spec().encoder.name().to_string(),
        });
    }
    let corpus = load_corpus(cfg)?;
    let splits = splits_for(&corpus, &cfg.split)?;
    let data = prepare(cfg, &corpus, &splits)?;
    let rows = model
        .params()
        .find(EMBEDDING)
        .map(|p| p.tensor.shape()[0])
        .unwrap_or_default();
    if rows != data.vocab.len() {
        return Err(Error::Checkpoint(format!(
            "{}: embedding has {rows} rows but the configured data yields a vocabulary of {}",
            path.display(),
            data.vocab.len()
        )));
    }
    let n = cfg.histogram.batch_size.min(data.test.len());
    if n == 0 {
        return Err(Error::InsufficientData("test split is empty".into()));
    }
    let docs: Vec<&[usize]> = data.test.docs[..n].iter().map(Vec::as_slice).collect();
    let batch = DocumentBatch::new(&docs, None)?;
    let counts = model.timestep_histogram(&batch)?;
    let hist: Vec<HistogramRow> = counts
        .into_iter()
        .enumerate()
        .map(|(doc, counts)| HistogramRow {
            doc,
            length: batch.lengths()[doc],
            counts,
        })
        .collect();

    create_dir(&cfg.output_dir)?;
    let csv_path = cfg.output_dir.join("histogram.csv");
    write_histogram_csv(&csv_path, &hist, batch.max_len())?;
    println!(
        "{} rows x {} timesteps -> {}",
        hist.len(),
        batch.max_len(),
        csv_path.display()
    );
    Ok(hist)
}

/// Header `doc,length,t0,t1,..`.
pub fn write_histogram_csv(path: &Path, rows: &[HistogramRow], width: usize) -> Result<()> {
    let err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    let mut header = vec!["doc".to_string(), "length".to_string()];
    header.extend((0..width).map(|t| format!("t{t}")));
    w.write_record(&header).map_err(err)?;
    for r in rows {
        let mut rec = vec![r.doc.to_string(), r.length.to_string()];
        rec.extend(r.counts.iter().map(usize::to_string));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `manifest.json` without training and reports the split sizes.
pub fn cmd_splits(cfg: &ExperimentConfig) -> Result<SplitManifest> {
    create_dir(&cfg.output_dir)?;
    let corpus = load_corpus(cfg)?;
    let splits = splits_for(&corpus, &cfg.split)?;
    let m = manifest(cfg, &corpus, splits);
    let path = cfg.output_dir.join("manifest.json");
    write_json(&path, &m)?;
    println!(
        "{}: {} labeled {:?}, {} unlabeled, {} validation {:?}, {} test; disjoint: {}",
        m.dataset,
        m.splits.labeled.len(),
        m.labeled_per_class,
        m.splits.unlabeled.len(),
        m.splits.validation.len(),
        m.validation_per_class,
        m.splits.test.len(),
        if m.disjoint { "yes" } else { "NO" }
    );
    Ok(m)
}
