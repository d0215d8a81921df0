use std::collections::HashMap;

use crate::corpus::{encode_document, tokenize, Dataset, DocumentBatch, EmbeddingTable, Splits, Vocabulary};
use crate::error::{Error, Result};
use crate::gradcore::Scalar;

use super::run::Hyper;

/// Encoded documents with their labels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledSet {
    pub docs: Vec<Vec<usize>>,
    pub labels: Vec<usize>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Consecutive batches in stored order.
    pub fn batches(&self, batch_size: usize) -> Result<Vec<DocumentBatch>> {
        let size = batch_size.max(1);
        self.docs
            .chunks(size)
            .zip(self.labels.chunks(size))
            .map(|(d, y)| {
                let refs: Vec<&[usize]> = d.iter().map(Vec::as_slice).collect();
                DocumentBatch::new(&refs, Some(y.to_vec()))
            })
            .collect()
    }
}

/// Everything a run needs besides the model spec: encoded splits, the
/// vocabulary and the pretrained vectors found for it.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub vocab: Vocabulary,
    /// Pretrained vectors keyed by token; tokens without one get a small random row.
    pub vectors: HashMap<String, Vec<f64>>,
    pub num_classes: usize,
    pub labeled: LabeledSet,
    pub unlabeled: Vec<Vec<usize>>,
    pub validation: LabeledSet,
    pub test: LabeledSet,
}

impl PreparedData {
    /// Tokenizes the split documents. The vocabulary comes from the labeled
    /// and unlabeled training documents only.
    pub fn new(
        train: &Dataset,
        test: &Dataset,
        splits: &Splits,
        vectors: HashMap<String, Vec<f64>>,
        hyper: &Hyper,
    ) -> Result<Self> {
        let tok = |ds: &Dataset, idx: &[usize], part: &str| -> Result<Vec<(Vec<String>, usize)>> {
            idx.iter()
                .map(|&i| {
                    ds.docs
                        .get(i)
                        .map(|d| (tokenize(&d.text), d.label))
                        .ok_or_else(|| Error::InsufficientData(format!("{part} index {i} is out of range")))
                })
                .collect()
        };
        let labeled = tok(train, &splits.labeled, "labeled")?;
        let unlabeled = tok(train, &splits.unlabeled, "unlabeled")?;
        let validation = tok(test, &splits.validation, "validation")?;
        let test_docs = tok(test, &splits.test, "test")?;
        let vocab = Vocabulary::build(
            labeled.iter().chain(&unlabeled).map(|(t, _)| t.as_slice()),
            hyper.min_count,
        );
        let encode = |docs: &[(Vec<String>, usize)]| LabeledSet {
            docs: docs
                .iter()
                .map(|(t, _)| encode_document(t, &vocab, hyper.t_cap))
                .collect(),
            labels: docs.iter().map(|&(_, y)| y).collect(),
        };
        let vectors = vectors.into_iter().filter(|(w, _)| vocab.get(w).is_some()).collect();
        Ok(Self {
            labeled: encode(&labeled),
            unlabeled: encode(&unlabeled).docs,
            validation: encode(&validation),
            test: encode(&test_docs),
            num_classes: train.num_classes,
            vectors,
            vocab,
        })
    }

    /// Embedding table for one run; random rows depend on `seed`.
    pub fn embedding<T: Scalar>(&self, dim: usize, seed: u64) -> Result<EmbeddingTable<T>> {
        EmbeddingTable::from_vectors(&self.vocab, dim, &self.vectors, seed).map(|(t, _)| t)
    }

    /// Fraction of vocabulary entries (excluding reserved tokens) with a pretrained vector.
    pub fn coverage(&self) -> f64 {
        let total = self.vocab.len().saturating_sub(2);
        if total == 0 {
            0.0
        } else {
            self.vectors.len() as f64 / total as f64
        }
    }
}
