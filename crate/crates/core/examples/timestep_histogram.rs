//! Which timesteps win the max pooling of a BiLSTM(MAX) encoder, before
//! and after a short training run.
//!
//! ```text
//! cargo run --release --example timestep_histogram
//! ```

use regtext::corpus::DocumentBatch;
use regtext::encoders::{EncoderSpec, TextClassifier};
use regtext::smoothing::Regime;
use regtext::trainer::{train_model, Benchmark};

fn show(title: &str, model: &TextClassifier<f32>, batch: &DocumentBatch) -> regtext::Result<()> {
    let rows = model.timestep_histogram(batch)?;
    println!("{title}");
    for (row, len) in rows.iter().zip(batch.lengths()).take(4) {
        let bars: Vec<String> = row[..*len].iter().map(|c| format!("{c:>2}")).collect();
        println!("  len {len:>2} | {}", bars.join(" "));
    }
    // Share of features won by the first and last quarter of each document.
    let (mut head, mut tail, mut total) = (0, 0, 0);
    for (row, &len) in rows.iter().zip(batch.lengths()) {
        let q = len.div_ceil(4);
        head += row[..q].iter().sum::<usize>();
        tail += row[len - q..len].iter().sum::<usize>();
        total += row.iter().sum::<usize>();
    }
    println!(
        "  first quarter {:.1}%, last quarter {:.1}% of {total} pooled maxima\n",
        100.0 * head as f64 / total as f64,
        100.0 * tail as f64 / total as f64
    );
    Ok(())
}

fn main() -> regtext::Result<()> {
    let mut bench = Benchmark::default();
    bench.hyper.max_epochs = 10;
    let data = bench.prepare()?;
    let spec = bench.model(EncoderSpec::bilstm_max());
    let docs: Vec<&[usize]> = data.test.docs.iter().take(128).map(Vec::as_slice).collect();
    let batch = DocumentBatch::new(&docs, None)?;

    let untrained = TextClassifier::<f32>::new(spec.clone(), data.embedding(spec.embedding_dim, 0)?, 0)?;
    show("untrained", &untrained, &batch)?;
    let run = train_model::<f32>(&spec, &bench.regime(Regime::Vat), &data, &bench.hyper, 0)?;
    show(
        &format!(
            "after VAT training (test {:.1}%)",
            100.0 * run.result.test_accuracy_at_best
        ),
        &run.model,
        &batch,
    )
}
