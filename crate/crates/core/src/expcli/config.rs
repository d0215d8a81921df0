use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{DatasetDescriptor, SplitSpec, SyntheticSpec, PROTOCOL_MULTIPLIERS};
use crate::encoders::{EncoderSpec, ModelSpec};
use crate::error::{Error, Result};
use crate::smoothing::{Regime, RegimeConfig};
use crate::trainer::Hyper;

/// Root for relative dataset and embedding paths.
pub const DATA_DIR_ENV: &str = "REGTEXT_DATA_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    /// Defaults to `{name}/train.csv` under the data directory.
    pub train_csv: Option<PathBuf>,
    /// Defaults to `{name}/test.csv` under the data directory.
    pub test_csv: Option<PathBuf>,
    /// Required to agree with the known class count for the named corpora.
    pub expected_classes: Option<usize>,
    /// Generate the corpus instead of reading CSV files.
    pub synthetic: Option<SyntheticSpec>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            name: "ag_news".into(),
            train_csv: None,
            test_csv: None,
            expected_classes: None,
            synthetic: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    /// Pretrained vectors in text format. Without one every row is
    /// initialized randomly, except for synthetic corpora, which ship
    /// their own vectors.
    pub path: Option<PathBuf>,
    pub dim: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self { path: None, dim: 300 }
    }
}

/// Axes of `grid`. Each cell is one encoder with one regime column; the
/// dropout and learning-rate candidates are searched inside the cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub regimes: Vec<Regime>,
    /// Unlabeled multipliers for the regimes that use unlabeled data.
    pub multipliers: Vec<usize>,
    pub encoders: Vec<EncoderSpec>,
    pub dropout: Vec<f64>,
    pub learning_rate: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            regimes: Regime::ALL.to_vec(),
            multipliers: PROTOCOL_MULTIPLIERS.to_vec(),
            encoders: vec![
                EncoderSpec::SwemConcat,
                EncoderSpec::cnn(),
                EncoderSpec::bilstm(),
                EncoderSpec::bilstm_max(),
            ],
            dropout: vec![0.2, 0.3, 0.5],
            learning_rate: vec![3e-4, 5e-4, 1e-3, 3e-3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramConfig {
    /// Defaults to `model.ckpt` in the output directory.
    pub checkpoint: Option<PathBuf>,
    pub batch_size: usize,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            checkpoint: None,
            batch_size: 128,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub embedding: EmbeddingConfig,
    pub split: SplitSpec,
    pub model: ModelSpec,
    pub regime: RegimeConfig,
    pub trainer: Hyper,
    pub output_dir: PathBuf,
    /// 1 for a single run; more aggregates over seeds `seed..seed + repeats`.
    pub repeats: usize,
    pub seed: u64,
    /// Worker threads for repeated runs and grids.
    pub jobs: usize,
    pub grid: GridConfig,
    pub histogram: HistogramConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            embedding: EmbeddingConfig::default(),
            split: SplitSpec::default(),
            model: ModelSpec::default(),
            regime: RegimeConfig::default(),
            trainer: Hyper::default(),
            output_dir: "results".into(),
            repeats: 1,
            seed: 0,
            jobs: 1,
            grid: GridConfig::default(),
            histogram: HistogramConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses JSON; errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = match e.path().to_string() {
                p if p == "." => "(root)".to_string(),
                p => p,
            };
            Error::config(field, e.into_inner().to_string())
        })
    }

    /// Reads, parses, resolves paths against `REGTEXT_DATA_DIR` and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let root = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from);
        cfg.resolve_paths(root.as_deref());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// Fills default CSV locations and joins relative data paths onto `root`.
    pub fn resolve_paths(&mut self, root: Option<&Path>) {
        let join = |p: &Path| match root {
            Some(r) if p.is_relative() => r.join(p),
            _ => p.to_path_buf(),
        };
        if self.dataset.synthetic.is_none() {
            let name = self.dataset.name.clone();
            let train = self
                .dataset
                .train_csv
                .get_or_insert_with(|| Path::new(&name).join("train.csv"));
            *train = join(train);
            let test = self
                .dataset
                .test_csv
                .get_or_insert_with(|| Path::new(&name).join("test.csv"));
            *test = join(test);
        }
        if let Some(p) = &mut self.embedding.path {
            *p = join(p);
        }
    }

    /// Class count implied by the dataset section.
    pub fn num_classes(&self) -> Result<usize> {
        let known = DatasetDescriptor::lookup(&self.dataset.name).map(|d| d.classes);
        let synthetic = self.dataset.synthetic.as_ref().map(|s| s.num_classes);
        let mut classes = self.dataset.expected_classes;
        for (source, k) in [
            ("dataset.synthetic.num_classes", synthetic),
            ("dataset.expected_classes", known),
        ] {
            match (classes, k) {
                (Some(a), Some(b)) if a != b => {
                    return Err(Error::config(
                        source,
                        format!("`{}` has {b} classes, configured {a}", self.dataset.name),
                    ))
                }
                (None, Some(b)) => classes = Some(b),
                _ => {}
            }
        }
        classes.ok_or_else(|| {
            Error::config(
                "dataset.expected_classes",
                format!("unknown dataset `{}` needs an explicit class count", self.dataset.name),
            )
        })
    }

    pub fn validate(&self) -> Result<()> {
        let classes = self.num_classes()?;
        if self.model.num_classes != classes {
            return Err(Error::config(
                "model.num_classes",
                format!(
                    "{} does not match the dataset's {classes} classes",
                    self.model.num_classes
                ),
            ));
        }
        if let Some(syn) = &self.dataset.synthetic {
            syn.validate()?;
            if self.embedding.path.is_none() && self.embedding.dim != syn.embedding_dim {
                return Err(Error::config(
                    "embedding.dim",
                    format!("synthetic vectors have dimension {}", syn.embedding_dim),
                ));
            }
        }
        if self.model.embedding_dim != self.embedding.dim {
            return Err(Error::config(
                "model.embedding_dim",
                format!(
                    "{} differs from embedding.dim {}",
                    self.model.embedding_dim, self.embedding.dim
                ),
            ));
        }
        self.model.validate()?;
        self.regime.validate()?;
        self.trainer.validate()?;
        self.split.validate()?;
        if self.repeats == 0 {
            return Err(Error::config("repeats", "must be at least 1"));
        }
        if self.jobs == 0 {
            return Err(Error::config("jobs", "must be at least 1"));
        }
        if self.histogram.batch_size == 0 {
            return Err(Error::config("histogram.batch_size", "must be at least 1"));
        }
        self.validate_grid()
    }

    fn validate_grid(&self) -> Result<()> {
        let g = &self.grid;
        let non_empty = [
            ("grid.regimes", g.regimes.is_empty()),
            ("grid.encoders", g.encoders.is_empty()),
            ("grid.dropout", g.dropout.is_empty()),
            ("grid.learning_rate", g.learning_rate.is_empty()),
            (
                "grid.multipliers",
                g.multipliers.is_empty() && g.regimes.iter().any(|r| r.uses_unlabeled()),
            ),
        ];
        if let Some((field, _)) = non_empty.iter().find(|(_, empty)| *empty) {
            return Err(Error::config(*field, "must not be empty"));
        }
        let mut seen = HashSet::new();
        if let Some(r) = g.regimes.iter().find(|r| !seen.insert(r.key())) {
            return Err(Error::config("grid.regimes", format!("{} listed twice", r.key())));
        }
        let mut seen = HashSet::new();
        if let Some(e) = g.encoders.iter().find(|e| !seen.insert(e.name())) {
            return Err(Error::config("grid.encoders", format!("{} listed twice", e.name())));
        }
        if let Some(m) = g.multipliers.iter().find(|&&m| m == 0) {
            return Err(Error::config(
                "grid.multipliers",
                format!("multiplier {m} is not positive"),
            ));
        }
        if let Some(p) = g.dropout.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(Error::config("grid.dropout", format!("{p} is outside [0, 1)")));
        }
        if let Some(lr) = g.learning_rate.iter().find(|lr| !(**lr > 0.0 && lr.is_finite())) {
            return Err(Error::config("grid.learning_rate", format!("{lr} is not positive")));
        }
        Ok(())
    }
}
