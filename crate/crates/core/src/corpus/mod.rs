//! Text preprocessing and the labeled/unlabeled data protocol.

mod batch;
mod dataset;
mod embedding;
mod splits;
mod synthetic;
mod tokenize;
mod vocab;

pub use batch::{encode_document, Batcher, CyclingBatcher, DocumentBatch, DEFAULT_T_CAP};
pub use dataset::{load_dataset, write_dataset, Dataset, DatasetDescriptor, Document, DESCRIPTORS};
pub use embedding::{load_pretrained, read_vectors, Coverage, EmbeddingTable, OOV_INIT_RANGE};
pub use splits::{make_splits, SplitManifest, SplitSpec, Splits, PROTOCOL_MULTIPLIERS};
pub use synthetic::{SyntheticCorpus, SyntheticSpec};
pub use tokenize::tokenize;
pub use vocab::{Vocabulary, PAD, PAD_TOKEN, UNK, UNK_TOKEN};
