use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::vocab::{Vocabulary, PAD, UNK};

/// Default cap on document length in tokens.
pub const DEFAULT_T_CAP: usize = 400;

/// Padded `[batch, T]` token-index matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocumentBatch {
    token_ids: Vec<usize>,
    max_len: usize,
    lengths: Vec<usize>,
    labels: Option<Vec<usize>>,
}

impl DocumentBatch {
    /// Pads every document to the longest one. Documents must be non-empty.
    pub fn new(docs: &[&[usize]], labels: Option<Vec<usize>>) -> Result<Self> {
        let max_len = docs.iter().map(|d| d.len()).max().unwrap_or(0);
        Self::padded(docs, labels, max_len)
    }

    /// Pads every document to exactly `max_len` tokens.
    pub fn padded(docs: &[&[usize]], labels: Option<Vec<usize>>, max_len: usize) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::InsufficientData("empty batch".into()));
        }
        if let Some(l) = &labels {
            if l.len() != docs.len() {
                return Err(Error::ShapeMismatch {
                    op: "batch",
                    left: vec![docs.len()],
                    right: vec![l.len()],
                });
            }
        }
        let mut token_ids = vec![PAD; docs.len() * max_len];
        let mut lengths = Vec::with_capacity(docs.len());
        for (r, doc) in docs.iter().enumerate() {
            if doc.is_empty() || doc.len() > max_len {
                return Err(Error::InvalidShape {
                    op: "batch",
                    shape: vec![docs.len(), max_len],
                    reason: format!("document {r} has {} tokens", doc.len()),
                });
            }
            token_ids[r * max_len..r * max_len + doc.len()].copy_from_slice(doc);
            lengths.push(doc.len());
        }
        Ok(Self {
            token_ids,
            max_len,
            lengths,
            labels,
        })
    }

    pub fn size(&self) -> usize {
        self.lengths.len()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Row-major `[batch, max_len]` indices, padding included.
    pub fn token_ids(&self) -> &[usize] {
        &self.token_ids
    }

    /// The real tokens of one document.
    pub fn doc(&self, row: usize) -> &[usize] {
        let start = row * self.max_len;
        &self.token_ids[start..start + self.lengths[row]]
    }

    pub fn docs(&self) -> Vec<&[usize]> {
        (0..self.size()).map(|r| self.doc(r)).collect()
    }

    /// Same documents with labels removed.
    pub fn without_labels(&self) -> Self {
        Self {
            labels: None,
            ..self.clone()
        }
    }

    /// Same documents padded out to `max_len` columns.
    pub fn pad_to(&self, max_len: usize) -> Result<Self> {
        Self::padded(&self.docs(), self.labels.clone(), max_len)
    }

    /// Replaces the real tokens of every document; lengths must not change.
    pub fn map_docs(&self, mut f: impl FnMut(usize, &mut [usize])) -> Self {
        let mut out = self.clone();
        for r in 0..self.size() {
            let start = r * self.max_len;
            f(r, &mut out.token_ids[start..start + self.lengths[r]]);
        }
        out
    }
}

/// Maps tokens to indices and truncates to `t_cap`; an empty document
/// becomes a single unknown token so that pooling stays defined.
pub fn encode_document(tokens: &[String], vocab: &Vocabulary, t_cap: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = tokens.iter().take(t_cap.max(1)).map(|t| vocab.id(t)).collect();
    if ids.is_empty() {
        ids.push(UNK);
    }
    ids
}

/// Shuffled mini-batches over a fixed set of encoded documents.
#[derive(Clone, Debug)]
pub struct Batcher {
    docs: Vec<Vec<usize>>,
    labels: Option<Vec<usize>>,
    batch_size: usize,
    rng: ChaCha8Rng,
}

impl Batcher {
    pub fn new(docs: Vec<Vec<usize>>, labels: Option<Vec<usize>>, batch_size: usize, seed: u64) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if let Some(l) = &labels {
            if l.len() != docs.len() {
                return Err(Error::ShapeMismatch {
                    op: "batcher",
                    left: vec![docs.len()],
                    right: vec![l.len()],
                });
            }
        }
        Ok(Self {
            docs,
            labels,
            batch_size,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Batches covering every document once, in a fresh random order.
    pub fn epoch(&mut self) -> Result<Vec<DocumentBatch>> {
        let mut order: Vec<usize> = (0..self.docs.len()).collect();
        order.shuffle(&mut self.rng);
        self.batches_in(&order)
    }

    /// Batches in the stored order, for evaluation.
    pub fn in_order(&self) -> Result<Vec<DocumentBatch>> {
        let order: Vec<usize> = (0..self.docs.len()).collect();
        self.batches_in(&order)
    }

    fn batches_in(&self, order: &[usize]) -> Result<Vec<DocumentBatch>> {
        order
            .chunks(self.batch_size)
            .map(|chunk| {
                let docs: Vec<&[usize]> = chunk.iter().map(|&i| self.docs[i].as_slice()).collect();
                let labels = self.labels.as_ref().map(|l| chunk.iter().map(|&i| l[i]).collect());
                DocumentBatch::new(&docs, labels)
            })
            .collect()
    }
}

/// Endless stream of batches that reshuffles after every pass.
#[derive(Clone, Debug)]
pub struct CyclingBatcher {
    inner: Batcher,
    queue: VecDeque<DocumentBatch>,
}

impl CyclingBatcher {
    pub fn new(inner: Batcher) -> Self {
        Self {
            inner,
            queue: VecDeque::new(),
        }
    }

    /// Next batch, or `None` if there are no documents at all.
    pub fn next_batch(&mut self) -> Result<Option<DocumentBatch>> {
        if self.inner.is_empty() {
            return Ok(None);
        }
        if self.queue.is_empty() {
            self.queue.extend(self.inner.epoch()?);
        }
        Ok(self.queue.pop_front())
    }
}
