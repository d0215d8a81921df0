//! The labeled/unlabeled/validation protocol on an AG-news-sized label
//! vector: 600 labeled, 20x unlabeled, half the test set for validation.
//!
//! ```text
//! cargo run --example splits_protocol
//! ```

use regtext::corpus::{make_splits, DatasetDescriptor, SplitManifest, SplitSpec, PROTOCOL_MULTIPLIERS};

fn main() -> regtext::Result<()> {
    let ag = DatasetDescriptor::lookup("ag_news").expect("bundled descriptor");
    let train: Vec<usize> = (0..ag.full_train).map(|i| i % ag.classes).collect();
    let test: Vec<usize> = (0..ag.test).map(|i| i % ag.classes).collect();

    for mult in PROTOCOL_MULTIPLIERS {
        let spec = SplitSpec {
            labeled_fraction: ag.labeled_fraction(),
            unlabeled_multiplier: mult,
            ..SplitSpec::default()
        };
        let splits = make_splits(&train, &test, ag.classes, &spec)?;
        let m = SplitManifest::new(ag.name, &spec, &train, &test, ag.classes, splits);
        println!(
            "{mult:>2}x: labeled {} {:?}, unlabeled {}, validation {} {:?}, test {}, disjoint {}",
            m.splits.labeled.len(),
            m.labeled_per_class,
            m.splits.unlabeled.len(),
            m.splits.validation.len(),
            m.validation_per_class,
            m.splits.test.len(),
            m.disjoint
        );
    }

    // Seeds make the draw reproducible.
    let spec = SplitSpec {
        labeled_fraction: ag.labeled_fraction(),
        seed: 7,
        ..SplitSpec::default()
    };
    let a = make_splits(&train, &test, ag.classes, &spec)?;
    let b = make_splits(&train, &test, ag.classes, &spec)?;
    println!("same seed, same splits: {}", a == b);
    Ok(())
}
