use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unlabeled pool sizes, as multiples of the labeled count, used by the protocol grid.
pub const PROTOCOL_MULTIPLIERS: [usize; 4] = [20, 10, 5, 2];

/// How a corpus is cut into labeled, unlabeled, validation and test parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    /// Fraction of the training set that keeps its labels.
    pub labeled_fraction: f64,
    /// Unlabeled documents per labeled document.
    pub unlabeled_multiplier: usize,
    /// Share of the test set held out, class-balanced, for validation.
    pub validation_fraction_of_test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            labeled_fraction: 0.005,
            unlabeled_multiplier: 20,
            validation_fraction_of_test: 0.5,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.labeled_fraction > 0.0 && self.labeled_fraction <= 1.0) {
            return Err(Error::config("split.labeled_fraction", "must be in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction_of_test) {
            return Err(Error::config("split.validation_fraction_of_test", "must be in [0, 1)"));
        }
        Ok(())
    }

    /// True when these settings sit inside the low-resource protocol: 0.1-0.5%
    /// labeled and one of the standard unlabeled multipliers.
    pub fn is_protocol(&self) -> bool {
        (0.001 - 1e-12..=0.005 + 1e-12).contains(&self.labeled_fraction)
            && PROTOCOL_MULTIPLIERS.contains(&self.unlabeled_multiplier)
    }
}

/// Indices of each part. `labeled` and `unlabeled` index the training set;
/// `validation` and `test` index the original test set. All lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    /// Checks that the training parts are disjoint and the test parts are disjoint.
    pub fn is_disjoint(&self) -> bool {
        let l: BTreeSet<_> = self.labeled.iter().collect();
        let v: BTreeSet<_> = self.validation.iter().collect();
        self.unlabeled.iter().all(|i| !l.contains(i)) && self.test.iter().all(|i| !v.contains(i))
    }
}

fn by_class(labels: &[usize], num_classes: usize) -> Result<Vec<Vec<usize>>> {
    let mut groups = vec![Vec::new(); num_classes];
    for (i, &y) in labels.iter().enumerate() {
        if y >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: y,
                classes: num_classes,
            });
        }
        groups[y].push(i);
    }
    Ok(groups)
}

/// Draws the splits. Same inputs and seed give the same splits.
///
/// - labeled: `floor(N * fraction)` split into equal per-class counts;
/// - unlabeled: `multiplier * |labeled|` drawn uniformly from the rest of the
///   training set, labels discarded downstream;
/// - validation: `floor(|test| * validation_fraction)` with per-class quotas
///   differing by at most one;
/// - test: the remaining test documents.
pub fn make_splits(
    train_labels: &[usize],
    test_labels: &[usize],
    num_classes: usize,
    spec: &SplitSpec,
) -> Result<Splits> {
    spec.validate()?;
    if num_classes == 0 {
        return Err(Error::InsufficientData("no classes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let labeled_total = (train_labels.len() as f64 * spec.labeled_fraction + 1e-9).floor() as usize;
    let per_class = labeled_total / num_classes;
    if per_class == 0 {
        return Err(Error::InsufficientData(format!(
            "{} training documents at fraction {} leave no labeled example per class",
            train_labels.len(),
            spec.labeled_fraction
        )));
    }
    let mut labeled = Vec::with_capacity(per_class * num_classes);
    for (class, mut members) in by_class(train_labels, num_classes)?.into_iter().enumerate() {
        if members.len() < per_class {
            return Err(Error::InsufficientClass {
                class,
                split: "labeled",
                needed: per_class,
                available: members.len(),
            });
        }
        members.shuffle(&mut rng);
        labeled.extend_from_slice(&members[..per_class]);
    }
    labeled.sort_unstable();

    let wanted = spec.unlabeled_multiplier * labeled.len();
    let mut pool: Vec<usize> = {
        let taken: BTreeSet<usize> = labeled.iter().copied().collect();
        (0..train_labels.len()).filter(|i| !taken.contains(i)).collect()
    };
    if pool.len() < wanted {
        return Err(Error::InsufficientData(format!(
            "{wanted} unlabeled documents requested, {} remain",
            pool.len()
        )));
    }
    pool.shuffle(&mut rng);
    let mut unlabeled = pool[..wanted].to_vec();
    unlabeled.sort_unstable();

    let target = (test_labels.len() as f64 * spec.validation_fraction_of_test + 1e-9).floor() as usize;
    let (base, extra) = (target / num_classes, target % num_classes);
    let mut validation = Vec::with_capacity(target);
    for (class, mut members) in by_class(test_labels, num_classes)?.into_iter().enumerate() {
        let quota = base + usize::from(class < extra);
        if members.len() < quota {
            return Err(Error::InsufficientClass {
                class,
                split: "validation",
                needed: quota,
                available: members.len(),
            });
        }
        members.shuffle(&mut rng);
        validation.extend_from_slice(&members[..quota]);
    }
    validation.sort_unstable();
    let test = {
        let held: BTreeSet<usize> = validation.iter().copied().collect();
        (0..test_labels.len()).filter(|i| !held.contains(i)).collect()
    };

    Ok(Splits {
        labeled,
        unlabeled,
        validation,
        test,
    })
}

/// Replayable record of a split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub dataset: String,
    pub spec: SplitSpec,
    pub num_classes: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub disjoint: bool,
    pub labeled_per_class: Vec<usize>,
    pub validation_per_class: Vec<usize>,
    pub splits: Splits,
}

impl SplitManifest {
    pub fn new(
        dataset: impl Into<String>,
        spec: &SplitSpec,
        train_labels: &[usize],
        test_labels: &[usize],
        num_classes: usize,
        splits: Splits,
    ) -> Self {
        let histogram = |idx: &[usize], labels: &[usize]| {
            let mut h = vec![0; num_classes];
            for &i in idx {
                h[labels[i]] += 1;
            }
            h
        };
        Self {
            dataset: dataset.into(),
            spec: spec.clone(),
            num_classes,
            train_size: train_labels.len(),
            test_size: test_labels.len(),
            disjoint: splits.is_disjoint(),
            labeled_per_class: histogram(&splits.labeled, train_labels),
            validation_per_class: histogram(&splits.validation, test_labels),
            splits,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(n: usize, k: usize) -> Vec<usize> {
        (0..n).map(|i| i % k).collect()
    }

    #[test]
    fn counts_and_disjointness() {
        let train = balanced(2000, 2);
        let test = balanced(400, 2);
        let spec = SplitSpec {
            labeled_fraction: 0.005,
            unlabeled_multiplier: 50,
            ..Default::default()
        };
        let s = make_splits(&train, &test, 2, &spec).unwrap();
        assert_eq!(s.labeled.len(), 10);
        assert_eq!(s.unlabeled.len(), 500);
        assert_eq!(s.validation.len(), 200);
        assert_eq!(s.test.len(), 200);
        assert!(s.is_disjoint());
    }

    #[test]
    fn deterministic_in_seed() {
        let train = balanced(1000, 4);
        let test = balanced(100, 4);
        let spec = SplitSpec {
            labeled_fraction: 0.04,
            unlabeled_multiplier: 2,
            ..Default::default()
        };
        let a = make_splits(&train, &test, 4, &spec).unwrap();
        let b = make_splits(&train, &test, 4, &spec).unwrap();
        assert_eq!(a, b);
        let c = make_splits(&train, &test, 4, &SplitSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a.labeled, c.labeled);
    }

    #[test]
    fn missing_class_is_named() {
        let train = vec![0; 1000];
        let test = balanced(10, 2);
        let spec = SplitSpec {
            labeled_fraction: 0.01,
            unlabeled_multiplier: 2,
            ..Default::default()
        };
        match make_splits(&train, &test, 2, &spec).unwrap_err() {
            Error::InsufficientClass { class, split, .. } => {
                assert_eq!((class, split), (1, "labeled"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn protocol_membership() {
        assert!(SplitSpec::default().is_protocol());
        let s = SplitSpec {
            unlabeled_multiplier: 50,
            ..Default::default()
        };
        assert!(!s.is_protocol());
    }
}
