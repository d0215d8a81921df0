//! One supervised and one VAT run on the synthetic benchmark (10 labeled,
//! 500 unlabeled documents), printing the validation curve of each.
//!
//! ```text
//! cargo run --release --example train_synthetic [swem|bilstm_max]
//! ```

use regtext::encoders::EncoderSpec;
use regtext::smoothing::Regime;
use regtext::trainer::{train, Benchmark};

fn main() -> regtext::Result<()> {
    let encoder = match std::env::args().nth(1).as_deref() {
        Some("bilstm_max") => EncoderSpec::bilstm_max(),
        _ => EncoderSpec::SwemConcat,
    };
    let bench = Benchmark::default();
    let data = bench.prepare()?;
    println!(
        "{} labeled, {} unlabeled, {} validation, {} test, vocabulary {}",
        data.labeled.len(),
        data.unlabeled.len(),
        data.validation.len(),
        data.test.len(),
        data.vocab.len()
    );
    let model = bench.model(encoder);

    let runs = [Regime::Sup, Regime::Vat].map(|r| train(&model, &bench.regime(r), &data, &bench.hyper, 0));
    let [sup, vat] = runs;
    let (sup, vat) = (sup?, vat?);
    println!("\n{:>5} {:>9} {:>9}", "epoch", "SUP val", "VAT val");
    for (s, v) in sup.epochs.iter().zip(&vat.epochs) {
        println!("{:>5} {:>9.4} {:>9.4}", s.epoch, s.val_accuracy, v.val_accuracy);
    }
    for r in [&sup, &vat] {
        println!(
            "{} {}: test {:.2}% at epoch {}, final-10 val std {:.4}",
            r.encoder,
            r.regime,
            100.0 * r.test_accuracy_at_best,
            r.best_epoch,
            r.tail_val_std(10).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
