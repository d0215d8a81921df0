use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub text: String,
    /// 0-based class index.
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub docs: Vec<Document>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.docs.iter().map(|d| d.label).collect()
    }
}

/// Size and shape of one of the benchmark corpora.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DatasetDescriptor {
    pub name: &'static str,
    pub classes: usize,
    pub avg_length: usize,
    /// Labeled training documents used by the protocol.
    pub labeled: usize,
    pub test: usize,
    /// Size of the full original training set the labeled part is drawn from.
    pub full_train: usize,
}

pub const DESCRIPTORS: [DatasetDescriptor; 4] = [
    DatasetDescriptor {
        name: "ag_news",
        classes: 4,
        avg_length: 57,
        labeled: 600,
        test: 9600,
        full_train: 120_000,
    },
    DatasetDescriptor {
        name: "dbpedia",
        classes: 14,
        avg_length: 43,
        labeled: 1400,
        test: 70_000,
        full_train: 560_000,
    },
    DatasetDescriptor {
        name: "yahoo",
        classes: 10,
        avg_length: 104,
        labeled: 1400,
        test: 60_000,
        full_train: 1_400_000,
    },
    DatasetDescriptor {
        name: "yelp_polarity",
        classes: 2,
        avg_length: 139,
        labeled: 600,
        test: 38_000,
        full_train: 560_000,
    },
];

impl DatasetDescriptor {
    pub fn lookup(name: &str) -> Option<&'static DatasetDescriptor> {
        DESCRIPTORS.iter().find(|d| d.name == name)
    }

    /// Labeled fraction of the full training set.
    pub fn labeled_fraction(&self) -> f64 {
        self.labeled as f64 / self.full_train as f64
    }
}

/// Reads a CSV in the `"class","title","body",...` layout with 1-based classes.
///
/// Remaining columns are joined with a space; the two-character escape
/// `\n` used by these files becomes a space.
pub fn load_dataset(path: &Path, expected_classes: Option<usize>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, 0, e))?;
    let mut docs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(path, row, e))?;
        let malformed = |msg: String| Error::MalformedRow {
            path: path.to_path_buf(),
            row,
            msg,
        };
        if record.len() < 2 {
            return Err(malformed(format!(
                "expected a class and text, found {} fields",
                record.len()
            )));
        }
        let class: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| malformed(format!("class `{}` is not a positive integer", &record[0])))?;
        if class == 0 {
            return Err(malformed("class indices start at 1".into()));
        }
        if let Some(k) = expected_classes {
            if class > k {
                return Err(malformed(format!("class {class} exceeds the expected {k} classes")));
            }
        }
        let text = record
            .iter()
            .skip(1)
            .map(|f| f.replace("\\n", " "))
            .collect::<Vec<_>>()
            .join(" ");
        docs.push(Document { text, label: class - 1 });
    }
    let found = docs.iter().map(|d| d.label + 1).max().unwrap_or(0);
    let num_classes = match expected_classes {
        Some(k) if k != found => return Err(Error::ClassCount { expected: k, found }),
        Some(k) => k,
        None => found,
    };
    Ok(Dataset { docs, num_classes })
}

fn csv_error(path: &Path, row: usize, e: csv::Error) -> Error {
    let row = e.position().map(|p| p.record() as usize + 1).unwrap_or(row);
    let msg = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        _ => Error::MalformedRow {
            path: path.to_path_buf(),
            row,
            msg,
        },
    }
}

/// Writes documents in the same layout `load_dataset` reads.
pub fn write_dataset(path: &Path, docs: &[Document]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .quote_style(csv::QuoteStyle::Always)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    for d in docs {
        w.write_record([(d.label + 1).to_string(), d.text.clone()])
            .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
