//! A small encoder-by-regime grid with per-cell hyperparameter search,
//! written as CSV and an aligned text table.
//!
//! ```text
//! cargo run --release --example grid_table [output_dir]
//! ```

use regtext::corpus::SyntheticSpec;
use regtext::encoders::EncoderSpec;
use regtext::expcli::{cmd_grid, ExperimentConfig};
use regtext::smoothing::Regime;
use regtext::trainer::Benchmark;

fn main() -> regtext::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "grid_example".into());
    let mut cfg = ExperimentConfig::default();
    cfg.dataset.name = "synthetic".into();
    cfg.dataset.synthetic = Some(SyntheticSpec {
        train_size: 600,
        test_size: 300,
        ..Benchmark::default().corpus
    });
    cfg.embedding.dim = 16;
    cfg.model.embedding_dim = 16;
    cfg.model.classifier_dim = 32;
    cfg.model.num_classes = 2;
    cfg.regime.epsilon = 0.3;
    cfg.split.labeled_fraction = 0.02;
    cfg.trainer.labeled_batch = 6;
    cfg.trainer.unlabeled_batch = 24;
    cfg.trainer.max_epochs = 15;
    cfg.trainer.patience = 5;
    cfg.grid.regimes = vec![Regime::Sup, Regime::Pi, Regime::Vat];
    cfg.grid.multipliers = vec![10, 2];
    cfg.grid.encoders = vec![
        EncoderSpec::SwemConcat,
        EncoderSpec::Cnn {
            num_kernel: 16,
            context_size: 3,
            stride: 1,
        },
    ];
    cfg.grid.dropout = vec![0.2, 0.5];
    cfg.grid.learning_rate = vec![1e-3, 3e-3];
    cfg.jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    cfg.output_dir = out.into();
    cfg.validate()?;

    let report = cmd_grid(&cfg)?;
    for cell in &report.cells {
        if let Some(i) = cell.selected {
            let c = &cell.candidates[i];
            println!(
                "{} {}: dropout {} lr {} (val {:.2}%)",
                cell.encoder,
                cell.column,
                c.dropout,
                c.learning_rate,
                100.0 * c.val_accuracy.unwrap_or(0.0)
            );
        }
    }
    println!("\nwritten to {}", cfg.output_dir.display());
    Ok(())
}
