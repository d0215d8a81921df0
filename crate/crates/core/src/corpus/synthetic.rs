//! Generator for a small topic-classification corpus with controllable
//! class overlap, plus class-structured "pretrained" word vectors.
//!
//! Each class owns a set of topic words (`c{class}w{i}`); all classes share
//! filler words (`s{i}`). A document draws each token from its own topics
//! with probability `topic_rate`, from another class's topics with
//! probability `overlap_rate`, and from the filler otherwise. Topic-word
//! vectors scatter around a per-class centroid so that, as with real
//! pretrained embeddings, words of one topic sit near each other.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::dataset::{Dataset, Document};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub topic_words: usize,
    pub shared_words: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub topic_rate: f64,
    pub overlap_rate: f64,
    pub embedding_dim: usize,
    /// Distance of each class centroid from the origin.
    pub centroid_scale: f64,
    /// Standard deviation of word vectors around their centroid.
    pub word_noise: f64,
    /// Filler words are split into this many groups; each document draws
    /// its filler from a single group.
    pub filler_groups: usize,
    /// Distance of each filler group's centroid from the origin.
    pub filler_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_classes: 2,
            train_size: 2000,
            test_size: 800,
            topic_words: 60,
            shared_words: 200,
            min_len: 8,
            max_len: 24,
            topic_rate: 0.25,
            overlap_rate: 0.1,
            embedding_dim: 16,
            centroid_scale: 1.0,
            word_noise: 1.0,
            filler_groups: 1,
            filler_scale: 0.0,
            seed: 1234,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub train: Dataset,
    pub test: Dataset,
    /// Word vectors for every topic and filler word.
    pub vectors: HashMap<String, Vec<f64>>,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::config(format!("dataset.synthetic.{field}"), msg));
        if self.num_classes < 2 {
            return bad("num_classes", "need at least 2 classes");
        }
        if self.topic_words == 0 || self.shared_words == 0 {
            return bad("topic_words", "word inventories must be non-empty");
        }
        if self.filler_groups == 0 || self.filler_groups > self.shared_words {
            return bad("filler_groups", "need 1 <= filler_groups <= shared_words");
        }
        if self.min_len == 0 || self.max_len < self.min_len {
            return bad("min_len", "need 1 <= min_len <= max_len");
        }
        if self.topic_rate < 0.0 || self.overlap_rate < 0.0 || self.topic_rate + self.overlap_rate > 1.0 {
            return bad("topic_rate", "topic_rate + overlap_rate must lie in [0, 1]");
        }
        if self.embedding_dim == 0 {
            return bad("embedding_dim", "must be positive");
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<SyntheticCorpus> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let vectors = self.word_vectors(&mut rng);
        let train = self.documents(self.train_size, &mut rng);
        let test = self.documents(self.test_size, &mut rng);
        Ok(SyntheticCorpus {
            train: Dataset {
                docs: train,
                num_classes: self.num_classes,
            },
            test: Dataset {
                docs: test,
                num_classes: self.num_classes,
            },
            vectors,
        })
    }

    fn word_vectors(&self, rng: &mut ChaCha8Rng) -> HashMap<String, Vec<f64>> {
        let d = self.embedding_dim;
        let gauss = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        let centroid = |rng: &mut ChaCha8Rng, scale: f64| -> Vec<f64> {
            let mut c: Vec<f64> = (0..d).map(|_| gauss(rng)).collect();
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            c.iter_mut().for_each(|v| *v *= scale / norm);
            c
        };
        let mut vectors = HashMap::new();
        for c in 0..self.num_classes {
            let centroid = centroid(rng, self.centroid_scale);
            for i in 0..self.topic_words {
                let v = centroid
                    .iter()
                    .map(|&m| m + self.word_noise * gauss(rng) / (d as f64).sqrt())
                    .collect();
                vectors.insert(topic_word(c, i), v);
            }
        }
        let groups: Vec<Vec<f64>> = (0..self.filler_groups)
            .map(|_| centroid(rng, self.filler_scale))
            .collect();
        for i in 0..self.shared_words {
            let v = groups[i % self.filler_groups]
                .iter()
                .map(|&m| m + self.word_noise * gauss(rng) / (d as f64).sqrt())
                .collect();
            vectors.insert(shared_word(i), v);
        }
        vectors
    }

    fn documents(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Document> {
        (0..n)
            .map(|i| {
                let label = i % self.num_classes;
                let len = rng.random_range(self.min_len..=self.max_len);
                let group = rng.random_range(0..self.filler_groups);
                let per_group = (self.shared_words - group).div_ceil(self.filler_groups);
                let words: Vec<String> = (0..len)
                    .map(|_| {
                        let u: f64 = rng.random();
                        if u < self.topic_rate {
                            topic_word(label, rng.random_range(0..self.topic_words))
                        } else if u < self.topic_rate + self.overlap_rate {
                            let other = (label + rng.random_range(1..self.num_classes)) % self.num_classes;
                            topic_word(other, rng.random_range(0..self.topic_words))
                        } else {
                            shared_word(group + self.filler_groups * rng.random_range(0..per_group))
                        }
                    })
                    .collect();
                Document {
                    text: words.join(" "),
                    label,
                }
            })
            .collect()
    }
}

fn topic_word(class: usize, i: usize) -> String {
    format!("c{class}w{i}")
}

fn shared_word(i: usize) -> String {
    format!("s{i}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_balanced() {
        let spec = SyntheticSpec {
            train_size: 100,
            test_size: 20,
            ..Default::default()
        };
        let a = spec.generate().unwrap();
        let b = spec.generate().unwrap();
        assert_eq!(a.train, b.train);
        let ones = a.train.docs.iter().filter(|d| d.label == 1).count();
        assert_eq!(ones, 50);
        assert_eq!(a.vectors.len(), 2 * 60 + 200);
    }

    #[test]
    fn rejects_bad_rates() {
        let spec = SyntheticSpec {
            topic_rate: 0.8,
            overlap_rate: 0.5,
            ..Default::default()
        };
        assert!(spec.generate().is_err());
    }
}
