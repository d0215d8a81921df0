//! The synthetic semi-supervised benchmark: 10 labeled and 500 unlabeled
//! documents from the bundled two-class corpus, with overlapping classes.

use crate::corpus::{make_splits, SplitSpec, SyntheticCorpus, SyntheticSpec};
use crate::encoders::{EncoderSpec, ModelSpec};
use crate::error::Result;
use crate::smoothing::{Regime, RegimeConfig};

use super::data::PreparedData;
use super::run::Hyper;

#[derive(Clone, Debug, PartialEq)]
pub struct Benchmark {
    pub corpus: SyntheticSpec,
    pub split: SplitSpec,
    pub hyper: Hyper,
    pub classifier_dim: usize,
    pub dropout_rate: f64,
    /// Hidden width used for the recurrent encoders.
    pub hidden_state: usize,
    pub epsilon: f64,
    pub lambda_entropy: f64,
}

impl Default for Benchmark {
    fn default() -> Self {
        Self {
            corpus: SyntheticSpec {
                topic_words: 200,
                topic_rate: 0.45,
                overlap_rate: 0.02,
                centroid_scale: 0.6,
                ..SyntheticSpec::default()
            },
            // 2000 training documents: 0.5% gives 10 labeled, 50x gives 500 unlabeled.
            split: SplitSpec {
                labeled_fraction: 0.005,
                unlabeled_multiplier: 50,
                ..SplitSpec::default()
            },
            hyper: Hyper {
                labeled_batch: 5,
                unlabeled_batch: 50,
                max_epochs: 40,
                early_stopping: false,
                learning_rate: 3e-3,
                steps_per_epoch: Some(10),
                ..Hyper::default()
            },
            classifier_dim: 32,
            dropout_rate: 0.3,
            hidden_state: 16,
            epsilon: 0.3,
            lambda_entropy: 0.1,
        }
    }
}

impl Benchmark {
    pub fn corpus(&self) -> Result<SyntheticCorpus> {
        self.corpus.generate()
    }

    pub fn prepare(&self) -> Result<PreparedData> {
        let corpus = self.corpus()?;
        let splits = make_splits(
            &corpus.train.labels(),
            &corpus.test.labels(),
            corpus.train.num_classes,
            &self.split,
        )?;
        PreparedData::new(&corpus.train, &corpus.test, &splits, corpus.vectors, &self.hyper)
    }

    /// `BiLSTM` widths in `encoder` are replaced by [`Benchmark::hidden_state`].
    pub fn model(&self, encoder: EncoderSpec) -> ModelSpec {
        let encoder = match encoder {
            EncoderSpec::Bilstm { .. } => EncoderSpec::Bilstm {
                hidden_state: self.hidden_state,
            },
            EncoderSpec::BilstmMax { .. } => EncoderSpec::BilstmMax {
                hidden_state: self.hidden_state,
            },
            other => other,
        };
        ModelSpec {
            encoder,
            embedding_dim: self.corpus.embedding_dim,
            classifier_dim: self.classifier_dim,
            dropout_rate: self.dropout_rate,
            num_classes: self.corpus.num_classes,
            train_embeddings: true,
        }
    }

    pub fn regime(&self, regime: Regime) -> RegimeConfig {
        RegimeConfig {
            epsilon: self.epsilon,
            lambda_entropy: self.lambda_entropy,
            ..RegimeConfig::new(regime)
        }
    }
}
