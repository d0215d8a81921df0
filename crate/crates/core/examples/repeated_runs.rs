//! Mean, standard deviation and spread of test accuracy over seeds for
//! each regime on the synthetic benchmark.
//!
//! ```text
//! cargo run --release --example repeated_runs [seeds]
//! ```

use regtext::encoders::EncoderSpec;
use regtext::smoothing::Regime;
use regtext::trainer::{repeat_runs, Benchmark};

fn main() -> regtext::Result<()> {
    let seeds = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let bench = Benchmark::default();
    let data = bench.prepare()?;
    let model = bench.model(EncoderSpec::SwemConcat);
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());

    println!("{:<7} {:>7} {:>6} {:>8}  per seed", "regime", "mean", "std", "max-min");
    for regime in Regime::ALL {
        let agg = repeat_runs(&model, &bench.regime(regime), &data, &bench.hyper, seeds, 0, jobs)?;
        let per_seed: Vec<String> = agg
            .runs
            .iter()
            .map(|r| match &r.failure {
                Some(_) => "failed".to_string(),
                None => format!("{:.1}", 100.0 * r.test_accuracy_at_best),
            })
            .collect();
        match agg.test_accuracy {
            Some(s) => println!(
                "{:<7} {:>7.2} {:>6.2} {:>8.2}  {}",
                regime.to_string(),
                100.0 * s.mean,
                100.0 * s.std,
                100.0 * s.max_minus_min,
                per_seed.join(" ")
            ),
            None => println!("{regime:<7} too few successful runs: {}", per_seed.join(" ")),
        }
    }
    Ok(())
}
