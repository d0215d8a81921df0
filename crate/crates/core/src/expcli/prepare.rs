use std::collections::HashMap;

use crate::corpus::{load_dataset, make_splits, read_vectors, Dataset, SplitManifest, SplitSpec, Splits};
use crate::error::{Error, Result};
use crate::trainer::PreparedData;

use super::config::ExperimentConfig;

/// Train and test sets, plus word vectors when the corpus ships its own.
pub struct Corpus {
    pub train: Dataset,
    pub test: Dataset,
    pub vectors: HashMap<String, Vec<f64>>,
}

pub fn load_corpus(cfg: &ExperimentConfig) -> Result<Corpus> {
    if let Some(syn) = &cfg.dataset.synthetic {
        let c = syn.generate()?;
        return Ok(Corpus {
            train: c.train,
            test: c.test,
            vectors: c.vectors,
        });
    }
    let classes = Some(cfg.num_classes()?);
    let path = |p: &Option<std::path::PathBuf>, field: &str| {
        p.clone()
            .ok_or_else(|| Error::config(field, "unresolved; load the config with ExperimentConfig::load"))
    };
    let train = load_dataset(&path(&cfg.dataset.train_csv, "dataset.train_csv")?, classes)?;
    let test = load_dataset(&path(&cfg.dataset.test_csv, "dataset.test_csv")?, classes)?;
    Ok(Corpus {
        train,
        test,
        vectors: HashMap::new(),
    })
}

pub fn splits_for(corpus: &Corpus, spec: &SplitSpec) -> Result<Splits> {
    make_splits(
        &corpus.train.labels(),
        &corpus.test.labels(),
        corpus.train.num_classes,
        spec,
    )
}

pub fn manifest(cfg: &ExperimentConfig, corpus: &Corpus, splits: Splits) -> SplitManifest {
    SplitManifest::new(
        cfg.dataset.name.clone(),
        &cfg.split,
        &corpus.train.labels(),
        &corpus.test.labels(),
        corpus.train.num_classes,
        splits,
    )
}

/// Encodes the splits and attaches pretrained vectors for the vocabulary.
pub fn prepare(cfg: &ExperimentConfig, corpus: &Corpus, splits: &Splits) -> Result<PreparedData> {
    let mut data = PreparedData::new(
        &corpus.train,
        &corpus.test,
        splits,
        corpus.vectors.clone(),
        &cfg.trainer,
    )?;
    match &cfg.embedding.path {
        Some(path) => {
            let (vectors, skipped) = read_vectors(path, &data.vocab, cfg.embedding.dim)?;
            data.vectors = vectors;
            log::info!(
                "{}: vectors for {:.1}% of the vocabulary, {skipped} lines skipped",
                path.display(),
                100.0 * data.coverage()
            );
        }
        None if cfg.dataset.synthetic.is_none() => {
            log::warn!("no embedding file configured; all word vectors start random");
        }
        None => {}
    }
    Ok(data)
}
