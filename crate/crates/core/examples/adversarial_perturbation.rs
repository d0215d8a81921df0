//! The adversarial direction on the word embeddings: per-document norm
//! epsilon, zero on padding, and a loss that goes up along it.
//!
//! ```text
//! cargo run --release --example adversarial_perturbation
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regtext::corpus::{DocumentBatch, EmbeddingTable, Vocabulary};
use regtext::encoders::{Classifier, EncoderSpec, ModelSpec, TextClassifier};
use regtext::gradcore::{Dropout, Graph, Tensor};
use regtext::smoothing::{adversarial_loss, adversarial_perturbation, supervised_loss, Regime, RegimeConfig};

/// Cross-entropy with `delta` added to the embedded input.
fn loss_at(model: &TextClassifier<f64>, batch: &DocumentBatch, delta: &Tensor<f64>) -> regtext::Result<f64> {
    let mut g = Graph::new();
    let x = g.constant(model.lookup(batch)?);
    let d = g.constant(delta.clone());
    let x = g.add(x, d)?;
    let logits = model.logits(&mut g, x, batch.lengths(), &mut Dropout::eval())?;
    let ce = g.cross_entropy(logits, batch.labels().unwrap_or_default())?;
    Ok(g.scalar(ce))
}

fn main() -> regtext::Result<()> {
    let vocab = Vocabulary::from_tokens((0..20).map(|i| format!("w{i}")));
    let spec = ModelSpec {
        encoder: EncoderSpec::BilstmMax { hidden_state: 8 },
        embedding_dim: 6,
        classifier_dim: 8,
        dropout_rate: 0.0,
        num_classes: 3,
        train_embeddings: true,
    };
    let model = TextClassifier::<f64>::new(spec, EmbeddingTable::random(&vocab, 6, 3), 4)?;
    let docs: [&[usize]; 3] = [&[2, 3, 4, 5, 6], &[7, 8], &[9, 10, 11]];
    let batch = DocumentBatch::new(&docs, Some(vec![0, 1, 2]))?;

    let eps = 0.5;
    let eta = adversarial_perturbation(&model, &batch, eps, &mut Dropout::eval())?;
    println!("per-document ||eta||: {:.6?} (epsilon {eps})", eta.per_example_norms());
    let (t, d) = (batch.max_len(), 6);
    let pad_norm: f64 = (0..batch.size())
        .flat_map(|r| (batch.lengths()[r]..t).flat_map(move |s| (0..d).map(move |k| (r * t + s) * d + k)))
        .map(|i| eta.data()[i].powi(2))
        .sum::<f64>()
        .sqrt();
    println!("norm on padded positions: {pad_norm}");

    let clean = loss_at(&model, &batch, &eta.zeros_like())?;
    println!("\n{:>6} {:>10} {:>10}", "scale", "along eta", "random");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let noise = {
        use rand::Rng;
        let data = (0..eta.numel()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Tensor::new(eta.shape().to_vec(), data)?
            .l2_normalize_per_example()
            .scale(eps)
    };
    for s in [0.0, 0.25, 0.5, 1.0] {
        println!(
            "{s:>6} {:>10.5} {:>10.5}",
            loss_at(&model, &batch, &eta.scale(s))? - clean,
            loss_at(&model, &batch, &noise.scale(s))? - clean
        );
    }

    // The combined objective: alpha * clean + (1 - alpha) * adversarial.
    let cfg = RegimeConfig {
        epsilon: eps,
        ..RegimeConfig::new(Regime::At)
    };
    let mut g = Graph::new();
    let at = adversarial_loss(&mut g, &model, &batch, &cfg, &mut rng)?;
    let sup = supervised_loss(&mut g, &model, &batch, &mut Dropout::eval())?;
    println!(
        "\nsupervised {:.5}, adversarial objective {:.5}",
        g.scalar(sup),
        g.scalar(at)
    );
    Ok(())
}
