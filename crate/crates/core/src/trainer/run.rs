use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Batcher, CyclingBatcher, DocumentBatch, DEFAULT_T_CAP};
use crate::encoders::{ModelSpec, TextClassifier};
use crate::error::{Error, Result};
use crate::gradcore::{Graph, Scalar};
use crate::smoothing::{regime_loss, standardize_embeddings, Regime, RegimeConfig};

use super::adam::OptimizerState;
use super::data::{LabeledSet, PreparedData};

/// Optimization and data-handling settings of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    pub labeled_batch: usize,
    pub unlabeled_batch: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// When false, every run lasts exactly `max_epochs` epochs.
    pub early_stopping: bool,
    pub learning_rate: f64,
    /// Optimizer steps per epoch. Unset means one pass over the labeled set;
    /// when set, the labeled stream cycles like the unlabeled one.
    pub steps_per_epoch: Option<usize>,
    pub eval_batch: usize,
    /// Documents are truncated to this many tokens.
    pub t_cap: usize,
    pub min_count: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            labeled_batch: 32,
            unlabeled_batch: 128,
            max_epochs: 100,
            patience: 10,
            early_stopping: true,
            learning_rate: 1e-3,
            steps_per_epoch: None,
            eval_batch: 256,
            t_cap: DEFAULT_T_CAP,
            min_count: 1,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if self.labeled_batch == 0 || self.unlabeled_batch == 0 || self.eval_batch == 0 {
            return Err(Error::config("trainer.labeled_batch", "batch sizes must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("trainer.max_epochs", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("trainer.learning_rate", "must be positive"));
        }
        if self.steps_per_epoch == Some(0) {
            return Err(Error::config("trainer.steps_per_epoch", "must be at least 1"));
        }
        if self.t_cap == 0 {
            return Err(Error::config("trainer.t_cap", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

/// Outcome of one training run. Accuracies are fractions in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub regime: Regime,
    pub encoder: String,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose checkpoint was kept; 0 if none completed.
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    /// Measured with the checkpoint of `best_epoch`.
    pub test_accuracy_at_best: f64,
    pub epochs_run: usize,
    pub wall_clock_secs: f64,
    /// Set when the run diverged; such runs are left out of aggregates.
    pub failure: Option<String>,
}

impl RunResult {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    /// Sample standard deviation of validation accuracy over the last `k`
    /// epochs; `None` if fewer than two epochs ran.
    pub fn tail_val_std(&self, k: usize) -> Option<f64> {
        let tail: Vec<f64> = self.epochs.iter().rev().take(k).map(|e| e.val_accuracy).collect();
        super::repeat::summarize(&tail).map(|s| s.std)
    }
}

/// A run's result together with its best checkpoint.
pub struct TrainedRun<T> {
    pub result: RunResult,
    pub model: TextClassifier<T>,
}

/// Fraction of documents whose most probable class is their label, with dropout off.
pub fn evaluate<T: Scalar>(model: &TextClassifier<T>, batches: &[DocumentBatch]) -> Result<f64> {
    let counts = batches
        .par_iter()
        .map(|b| -> Result<(usize, usize)> {
            let labels = b.labels().ok_or_else(|| Error::InvalidShape {
                op: "evaluate",
                shape: vec![b.size()],
                reason: "batch carries no labels".into(),
            })?;
            let pred = model.predict(b)?.argmax_rows();
            Ok((pred.iter().zip(labels).filter(|(p, y)| p == y).count(), b.size()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (correct, total) = counts.iter().fold((0, 0), |(c, t), &(a, b)| (c + a, t + b));
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}

pub fn evaluate_set<T: Scalar>(model: &TextClassifier<T>, set: &LabeledSet, batch_size: usize) -> Result<f64> {
    evaluate(model, &set.batches(batch_size)?)
}

/// Trains and returns only the result.
pub fn train(spec: &ModelSpec, cfg: &RegimeConfig, data: &PreparedData, hyper: &Hyper, seed: u64) -> Result<RunResult> {
    train_model::<f32>(spec, cfg, data, hyper, seed).map(|r| r.result)
}

/// Trains one model. Initialization, shuffling, dropout and perturbation
/// noise are all derived from `seed`.
pub fn train_model<T: Scalar>(
    spec: &ModelSpec,
    cfg: &RegimeConfig,
    data: &PreparedData,
    hyper: &Hyper,
    seed: u64,
) -> Result<TrainedRun<T>> {
    hyper.validate()?;
    cfg.validate()?;
    if spec.num_classes != data.num_classes {
        return Err(Error::ClassCount {
            expected: spec.num_classes,
            found: data.num_classes,
        });
    }
    if data.labeled.is_empty() {
        return Err(Error::InsufficientData("no labeled documents".into()));
    }
    let start = Instant::now();
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut embedding = data.embedding::<T>(spec.embedding_dim, seeds.random())?;
    if cfg.normalize_embeddings {
        standardize_embeddings(&mut embedding.weights)?;
    }
    let mut model = TextClassifier::new(spec.clone(), embedding, seeds.random())?;
    let mut labeled = CyclingBatcher::new(Batcher::new(
        data.labeled.docs.clone(),
        Some(data.labeled.labels.clone()),
        hyper.labeled_batch,
        seeds.random(),
    )?);
    let mut unlabeled = CyclingBatcher::new(Batcher::new(
        data.unlabeled.clone(),
        None,
        hyper.unlabeled_batch,
        seeds.random(),
    )?);
    let mut step_rng = ChaCha8Rng::seed_from_u64(seeds.random());
    let steps_per_epoch = hyper
        .steps_per_epoch
        .unwrap_or_else(|| data.labeled.len().div_ceil(hyper.labeled_batch));
    let validation = data.validation.batches(hyper.eval_batch)?;
    let mut opt = OptimizerState::new(hyper.learning_rate);

    let mut result = RunResult {
        regime: cfg.regime,
        encoder: spec.encoder.name().to_string(),
        seed,
        epochs: Vec::new(),
        best_epoch: 0,
        best_val_accuracy: 0.0,
        test_accuracy_at_best: 0.0,
        epochs_run: 0,
        wall_clock_secs: 0.0,
        failure: None,
    };
    let mut best = model.params().snapshot();
    let mut since_best = 0;

    'epochs: for epoch in 1..=hyper.max_epochs {
        let mut loss_sum = 0.0;
        for step in 0..steps_per_epoch {
            let lb = labeled.next_batch()?.expect("labeled set is non-empty");
            let ub = if cfg.regime.uses_unlabeled() {
                unlabeled.next_batch()?
            } else {
                None
            };
            let mut rng = ChaCha8Rng::seed_from_u64(step_rng.random());
            let mut g = Graph::new();
            let terms = regime_loss(&mut g, &model, &lb, ub.as_ref(), cfg, &mut rng)?;
            let loss = g.scalar(terms.total).as_f64();
            if !loss.is_finite() {
                result.failure = Some(format!("non-finite loss at epoch {epoch}, step {}", step + 1));
                log::error!("seed {seed}: {}", result.failure.as_deref().unwrap_or_default());
                break 'epochs;
            }
            loss_sum += loss;
            g.backward(terms.total)?;
            let grads = g.param_grads();
            drop(g);
            model.params_mut().accumulate(&grads)?;
            model.freeze_padding();
            opt.step(model.params_mut())?;
        }
        let val = evaluate(&model, &validation)?;
        result.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / steps_per_epoch as f64,
            val_accuracy: val,
        });
        result.epochs_run = epoch;
        log::debug!(
            "seed {seed} epoch {epoch}: loss {:.4} val {:.4}",
            loss_sum / steps_per_epoch as f64,
            val
        );
        if result.best_epoch == 0 || val > result.best_val_accuracy {
            result.best_epoch = epoch;
            result.best_val_accuracy = val;
            best = model.params().snapshot();
            since_best = 0;
        } else {
            since_best += 1;
            if hyper.early_stopping && since_best >= hyper.patience.max(1) {
                break;
            }
        }
    }

    model.params_mut().load_values(&best)?;
    if result.best_epoch > 0 {
        result.test_accuracy_at_best = evaluate_set(&model, &data.test, hyper.eval_batch)?;
    }
    result.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(TrainedRun { result, model })
}
