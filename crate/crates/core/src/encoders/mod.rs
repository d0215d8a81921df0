//! Composition functions (document encoders) and the classifier head.
//!
//! A model maps a padded batch of token indices through the embedding
//! table to `X: [b, T, d]`, encodes `X` into a fixed-width feature `z`,
//! and classifies `z` with a one-hidden-layer MLP. Every encoder respects
//! document lengths, so padding never changes an output.

mod checkpoint;
mod cnn;
mod lstm;
mod params;
mod swem;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{DocumentBatch, EmbeddingTable, PAD};
use crate::error::{Error, Result};
use crate::gradcore::{Dropout, Graph, Scalar, Tensor, Var};

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use lstm::LstmWeights;
pub use params::{glorot, Param, ParamStore};

pub const EMBEDDING: &str = "embedding";

/// Encoder architecture and its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EncoderSpec {
    /// Concatenated average and max pooling; no parameters.
    SwemConcat,
    Cnn {
        #[serde(default = "default_kernels")]
        num_kernel: usize,
        #[serde(default = "default_context")]
        context_size: usize,
        #[serde(default = "default_stride")]
        stride: usize,
    },
    /// Bidirectional LSTM read out from its final states.
    Bilstm {
        #[serde(default = "default_hidden")]
        hidden_state: usize,
    },
    /// Bidirectional LSTM max-pooled over timesteps.
    BilstmMax {
        #[serde(default = "default_hidden")]
        hidden_state: usize,
    },
}

fn default_kernels() -> usize {
    300
}
fn default_context() -> usize {
    7
}
fn default_stride() -> usize {
    2
}
fn default_hidden() -> usize {
    256
}

impl EncoderSpec {
    pub fn cnn() -> Self {
        EncoderSpec::Cnn {
            num_kernel: default_kernels(),
            context_size: default_context(),
            stride: default_stride(),
        }
    }

    pub fn bilstm() -> Self {
        EncoderSpec::Bilstm {
            hidden_state: default_hidden(),
        }
    }

    pub fn bilstm_max() -> Self {
        EncoderSpec::BilstmMax {
            hidden_state: default_hidden(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EncoderSpec::SwemConcat => "SWEM",
            EncoderSpec::Cnn { .. } => "CNN",
            EncoderSpec::Bilstm { .. } => "BiLSTM",
            EncoderSpec::BilstmMax { .. } => "BiLSTM(MAX)",
        }
    }

    /// Width of the encoded feature for embedding dimension `d`.
    pub fn output_dim(&self, d: usize) -> usize {
        match *self {
            EncoderSpec::SwemConcat => 2 * d,
            EncoderSpec::Cnn { num_kernel, .. } => num_kernel,
            EncoderSpec::Bilstm { hidden_state } | EncoderSpec::BilstmMax { hidden_state } => 2 * hidden_state,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub encoder: EncoderSpec,
    pub embedding_dim: usize,
    pub classifier_dim: usize,
    pub dropout_rate: f64,
    pub num_classes: usize,
    /// Fine-tune the embedding table along with the other weights.
    pub train_embeddings: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            encoder: EncoderSpec::SwemConcat,
            embedding_dim: 300,
            classifier_dim: 300,
            dropout_rate: 0.3,
            num_classes: 4,
            train_embeddings: true,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config("model.dropout_rate", "must be in [0, 1)"));
        }
        if self.embedding_dim == 0 || self.classifier_dim == 0 {
            return Err(Error::config("model.embedding_dim", "dimensions must be positive"));
        }
        if self.num_classes < 2 {
            return Err(Error::config("model.num_classes", "need at least 2 classes"));
        }
        match self.encoder {
            EncoderSpec::Cnn {
                num_kernel,
                context_size,
                stride,
            } if num_kernel == 0 || context_size == 0 || stride == 0 => {
                Err(Error::config("model.encoder", "CNN sizes must be positive"))
            }
            EncoderSpec::Bilstm { hidden_state: 0 } | EncoderSpec::BilstmMax { hidden_state: 0 } => {
                Err(Error::config("model.encoder.hidden_state", "must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// What the regularizers need from a model: embedding lookup and a
/// forward pass from embedded input to logits.
pub trait Classifier<T: Scalar> {
    fn num_classes(&self) -> usize;

    fn dropout_rate(&self) -> f64;

    /// Differentiable embedding lookup, `[b, T, d]`.
    fn embed<'a>(&'a self, g: &mut Graph<'a, T>, batch: &DocumentBatch) -> Result<Var>;

    /// Embedding values outside any graph.
    fn lookup(&self, batch: &DocumentBatch) -> Result<Tensor<T>>;

    /// Logits `[b, k]` for embedded input `x`.
    fn logits<'a>(&'a self, g: &mut Graph<'a, T>, x: Var, lengths: &[usize], dropout: &mut Dropout<T>) -> Result<Var>;
}

#[derive(Clone, Debug, PartialEq)]
enum EncoderParams {
    None,
    Cnn { weight: usize, bias: usize },
    Lstm { fwd: LstmWeights, bwd: LstmWeights },
}

#[derive(Clone, Debug, PartialEq)]
struct Layout {
    embedding: usize,
    encoder: EncoderParams,
    hidden_w: usize,
    hidden_b: usize,
    out_w: usize,
    out_b: usize,
}

/// Embedding table, encoder and MLP head.
#[derive(Clone, Debug, PartialEq)]
pub struct TextClassifier<T> {
    spec: ModelSpec,
    params: ParamStore<T>,
    layout: Layout,
}

/// Encoder output and, for max-pooling encoders, the winning timestep per feature.
pub struct Encoded {
    pub features: Var,
    pub argmax: Option<Vec<usize>>,
}

impl<T: Scalar> TextClassifier<T> {
    /// Initializes encoder and classifier weights from `seed`; the embedding
    /// table is taken as given.
    pub fn new(spec: ModelSpec, embedding: EmbeddingTable<T>, seed: u64) -> Result<Self> {
        spec.validate()?;
        if embedding.dim() != spec.embedding_dim {
            return Err(Error::config(
                "model.embedding_dim",
                format!("embedding table has dimension {}", embedding.dim()),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let d = spec.embedding_dim;
        let embedding = params.add(EMBEDDING, embedding.weights, spec.train_embeddings);
        let encoder = match spec.encoder {
            EncoderSpec::SwemConcat => EncoderParams::None,
            EncoderSpec::Cnn {
                num_kernel,
                context_size,
                ..
            } => EncoderParams::Cnn {
                weight: params.add("cnn.weight", glorot(context_size * d, num_kernel, &mut rng), true),
                bias: params.add("cnn.bias", Tensor::zeros([num_kernel]), true),
            },
            EncoderSpec::Bilstm { hidden_state } | EncoderSpec::BilstmMax { hidden_state } => EncoderParams::Lstm {
                fwd: LstmWeights::init(&mut params, "lstm.fwd", d, hidden_state, &mut rng),
                bwd: LstmWeights::init(&mut params, "lstm.bwd", d, hidden_state, &mut rng),
            },
        };
        let f = spec.encoder.output_dim(d);
        let c = spec.classifier_dim;
        let k = spec.num_classes;
        let hidden_w = params.add("classifier.hidden.weight", glorot(f, c, &mut rng), true);
        let hidden_b = params.add("classifier.hidden.bias", Tensor::zeros([c]), true);
        let out_w = params.add("classifier.out.weight", glorot(c, k, &mut rng), true);
        let out_b = params.add("classifier.out.bias", Tensor::zeros([k]), true);
        Ok(Self {
            spec,
            params,
            layout: Layout {
                embedding,
                encoder,
                hidden_w,
                hidden_b,
                out_w,
                out_b,
            },
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    /// Number of trainable values outside the embedding table and classifier head.
    pub fn encoder_param_count(&self) -> usize {
        match &self.layout.encoder {
            EncoderParams::None => 0,
            _ => self
                .params
                .iter()
                .filter(|p| p.name.starts_with("cnn.") || p.name.starts_with("lstm."))
                .map(|p| p.tensor.numel())
                .sum(),
        }
    }

    /// Keeps the padding row of the embedding table at zero.
    pub fn freeze_padding(&mut self) {
        let d = self.spec.embedding_dim;
        let emb = &mut self.params.get_mut(self.layout.embedding).tensor;
        if let Some(g) = emb.grad_mut() {
            g[PAD * d..(PAD + 1) * d].iter_mut().for_each(|v| *v = T::zero());
        }
    }

    /// Runs the encoder on embedded input `x: [b, T, d]`.
    pub fn encode<'a>(&'a self, g: &mut Graph<'a, T>, x: Var, lengths: &[usize]) -> Result<Encoded> {
        match (&self.spec.encoder, &self.layout.encoder) {
            (EncoderSpec::SwemConcat, _) => Ok(Encoded {
                features: swem::encode(g, x, lengths)?,
                argmax: None,
            }),
            (
                &EncoderSpec::Cnn {
                    context_size, stride, ..
                },
                &EncoderParams::Cnn { weight, bias },
            ) => {
                let w = self.params.leaf(g, weight);
                let b = self.params.leaf(g, bias);
                Ok(Encoded {
                    features: cnn::encode(g, x, lengths, w, b, context_size, stride)?,
                    argmax: None,
                })
            }
            (EncoderSpec::Bilstm { .. }, EncoderParams::Lstm { fwd, bwd }) => {
                let (f, b) = (fwd.leaves(&self.params, g), bwd.leaves(&self.params, g));
                Ok(Encoded {
                    features: lstm::bilstm_final(g, x, lengths, &f, &b)?,
                    argmax: None,
                })
            }
            (EncoderSpec::BilstmMax { .. }, EncoderParams::Lstm { fwd, bwd }) => {
                let (f, b) = (fwd.leaves(&self.params, g), bwd.leaves(&self.params, g));
                let (features, argmax) = lstm::bilstm_max(g, x, lengths, &f, &b)?;
                Ok(Encoded {
                    features,
                    argmax: Some(argmax),
                })
            }
            _ => unreachable!("layout is built from the ModelSpec"),
        }
    }

    /// dropout, dense, relu, dropout, dense. Returns logits.
    pub fn classify<'a>(&'a self, g: &mut Graph<'a, T>, z: Var, dropout: &mut Dropout<T>) -> Result<Var> {
        let l = &self.layout;
        let z = dropout.apply(g, z)?;
        let w1 = self.params.leaf(g, l.hidden_w);
        let b1 = self.params.leaf(g, l.hidden_b);
        let h = g.matmul(z, w1)?;
        let h = g.add_bias(h, b1)?;
        let h = g.relu(h);
        let h = dropout.apply(g, h)?;
        let w2 = self.params.leaf(g, l.out_w);
        let b2 = self.params.leaf(g, l.out_b);
        let o = g.matmul(h, w2)?;
        g.add_bias(o, b2)
    }

    /// Class distributions with dropout disabled.
    pub fn predict(&self, batch: &DocumentBatch) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let x = self.embed(&mut g, batch)?;
        let logits = self.logits(&mut g, x, batch.lengths(), &mut Dropout::eval())?;
        let p = g.softmax(logits)?;
        Ok(g.tensor(p))
    }

    /// For each document, how many of the pooled features took their
    /// maximum at each timestep. Rows have `batch.max_len()` entries.
    pub fn timestep_histogram(&self, batch: &DocumentBatch) -> Result<Vec<Vec<usize>>> {
        if !matches!(self.spec.encoder, EncoderSpec::BilstmMax { .. }) {
            return Err(Error::WrongEncoder {
                op: "timestep_histogram",
                expected: "bilstm_max",
                found: self.spec.encoder.name().to_string(),
            });
        }
        let mut g = Graph::new();
        let x = self.embed(&mut g, batch)?;
        let enc = self.encode(&mut g, x, batch.lengths())?;
        let argmax = enc.argmax.expect("max pooling exposes argmax");
        let f = g.shape(enc.features)[1];
        let mut counts = vec![vec![0usize; batch.max_len()]; batch.size()];
        for (k, &t) in argmax.iter().enumerate() {
            counts[k / f][t] += 1;
        }
        Ok(counts)
    }
}

impl<T: Scalar> Classifier<T> for TextClassifier<T> {
    fn num_classes(&self) -> usize {
        self.spec.num_classes
    }

    fn dropout_rate(&self) -> f64 {
        self.spec.dropout_rate
    }

    fn embed<'a>(&'a self, g: &mut Graph<'a, T>, batch: &DocumentBatch) -> Result<Var> {
        let table = self.params.leaf(g, self.layout.embedding);
        g.gather(table, batch.token_ids(), &[batch.size(), batch.max_len()])
    }

    fn lookup(&self, batch: &DocumentBatch) -> Result<Tensor<T>> {
        let table = &self.params.get(self.layout.embedding).tensor;
        let d = self.spec.embedding_dim;
        let mut data = Vec::with_capacity(batch.token_ids().len() * d);
        for &id in batch.token_ids() {
            data.extend_from_slice(&table.data()[id * d..(id + 1) * d]);
        }
        Tensor::new([batch.size(), batch.max_len(), d], data)
    }

    fn logits<'a>(&'a self, g: &mut Graph<'a, T>, x: Var, lengths: &[usize], dropout: &mut Dropout<T>) -> Result<Var> {
        let z = self.encode(g, x, lengths)?.features;
        self.classify(g, z, dropout)
    }
}

#[cfg(test)]
mod tests;
