use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gradcore::{Scalar, Tensor};

use super::vocab::{Vocabulary, PAD, UNK};

/// Half-width of the uniform initializer for rows without a pretrained vector.
pub const OOV_INIT_RANGE: f64 = 0.01;

/// Trainable `[|V|, d]` embedding matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable<T> {
    pub weights: Tensor<T>,
}

/// How much of the vocabulary a pretrained file covered.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Coverage {
    /// Non-reserved tokens that received a pretrained vector.
    pub found: usize,
    /// Non-reserved tokens in the vocabulary.
    pub total: usize,
    /// Lines skipped for wrong arity or unparsable numbers.
    pub skipped_lines: usize,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.found as f64 / self.total as f64
        }
    }
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn dim(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn rows(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn row(&self, id: usize) -> &[T] {
        let d = self.dim();
        &self.weights.data()[id * d..(id + 1) * d]
    }

    /// Builds the table from in-memory vectors.
    ///
    /// Every non-reserved row is first drawn uniformly from
    /// `[-0.01, 0.01]` in vocabulary order, so the random rows depend only
    /// on the seed; rows with a pretrained vector are then overwritten.
    /// The padding row is zero; the unknown row is random.
    pub fn from_vectors(
        vocab: &Vocabulary,
        dim: usize,
        vectors: &HashMap<String, Vec<f64>>,
        seed: u64,
    ) -> Result<(Self, Coverage)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![T::zero(); vocab.len() * dim];
        let mut found = 0;
        for id in 0..vocab.len() {
            if id == PAD {
                continue;
            }
            let row = &mut data[id * dim..(id + 1) * dim];
            for v in row.iter_mut() {
                *v = T::lit(rng.random_range(-OOV_INIT_RANGE..=OOV_INIT_RANGE));
            }
            if id == UNK {
                continue;
            }
            let token = vocab.token(id).expect("id in range");
            if let Some(vec) = vectors.get(token) {
                if vec.len() != dim {
                    return Err(Error::InvalidShape {
                        op: "embedding",
                        shape: vec![vec.len()],
                        reason: format!("vector for `{token}` has wrong dimension, expected {dim}"),
                    });
                }
                for (dst, &src) in row.iter_mut().zip(vec) {
                    *dst = T::lit(src);
                }
                found += 1;
            }
        }
        let table = Self {
            weights: Tensor::new([vocab.len(), dim], data)?,
        };
        let coverage = Coverage {
            found,
            total: vocab.len().saturating_sub(2),
            skipped_lines: 0,
        };
        Ok((table, coverage))
    }

    /// Random initialization only.
    pub fn random(vocab: &Vocabulary, dim: usize, seed: u64) -> Self {
        Self::from_vectors(vocab, dim, &HashMap::new(), seed)
            .expect("no pretrained vectors to mismatch")
            .0
    }
}

/// Reads whitespace-separated `token v1 .. vd` lines, keeping only tokens in `vocab`.
///
/// The first data line fixes the file's dimension; a word2vec-style
/// `count dim` header is recognized and skipped. Later lines with a
/// different arity are skipped and counted.
pub fn read_vectors(path: &Path, vocab: &Vocabulary, dim: usize) -> Result<(HashMap<String, Vec<f64>>, usize)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut vectors = HashMap::new();
    let mut skipped = 0;
    let mut file_dim: Option<usize> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if lineno == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            let declared: usize = fields[1].parse().expect("checked");
            if declared != dim {
                return Err(Error::EmbeddingDim {
                    path: path.to_path_buf(),
                    expected: dim,
                    found: declared,
                });
            }
            file_dim = Some(declared);
            continue;
        }
        let arity = fields.len() - 1;
        match file_dim {
            None if arity != dim => {
                return Err(Error::EmbeddingDim {
                    path: path.to_path_buf(),
                    expected: dim,
                    found: arity,
                })
            }
            None => file_dim = Some(arity),
            Some(d) if d != arity => {
                skipped += 1;
                continue;
            }
            Some(_) => {}
        }
        let token = fields[0];
        if vocab.get(token).is_none_or(|id| id == PAD || id == UNK) {
            continue;
        }
        let parsed: Option<Vec<f64>> = fields[1..].iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) => {
                vectors.insert(token.to_string(), v);
            }
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} malformed lines", path.display());
    }
    Ok((vectors, skipped))
}

/// Loads a pretrained-vector text file into an embedding table for `vocab`.
pub fn load_pretrained<T: Scalar>(
    path: &Path,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<(EmbeddingTable<T>, Coverage)> {
    let (vectors, skipped) = read_vectors(path, vocab, dim)?;
    let (table, mut coverage) = EmbeddingTable::from_vectors(vocab, dim, &vectors, seed)?;
    coverage.skipped_lines = skipped;
    Ok((table, coverage))
}
