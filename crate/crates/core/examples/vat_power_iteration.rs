//! Virtual adversarial directions from power iteration on an unlabeled
//! batch: how the KL divergence at radius epsilon grows with iterations.
//!
//! ```text
//! cargo run --release --example vat_power_iteration
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regtext::corpus::{DocumentBatch, EmbeddingTable, Vocabulary};
use regtext::encoders::{Classifier, EncoderSpec, ModelSpec, TextClassifier};
use regtext::gradcore::{Dropout, Graph, Tensor};
use regtext::smoothing::{gen_vadv, Regime, RegimeConfig};

fn kl_at(model: &TextClassifier<f64>, batch: &DocumentBatch, p: &Tensor<f64>, r: &Tensor<f64>) -> regtext::Result<f64> {
    let mut g = Graph::new();
    let x = g.constant(model.lookup(batch)?);
    let r = g.constant(r.clone());
    let x = g.add(x, r)?;
    let logits = model.logits(&mut g, x, batch.lengths(), &mut Dropout::eval())?;
    let q = g.softmax(logits)?;
    let p = g.constant(p.clone());
    let kl = g.kl_divergence(p, q)?;
    Ok(g.scalar(kl))
}

fn main() -> regtext::Result<()> {
    let vocab = Vocabulary::from_tokens((0..30).map(|i| format!("w{i}")));
    let spec = ModelSpec {
        encoder: EncoderSpec::SwemConcat,
        embedding_dim: 8,
        classifier_dim: 16,
        dropout_rate: 0.0,
        num_classes: 4,
        train_embeddings: true,
    };
    let model = TextClassifier::<f64>::new(spec, EmbeddingTable::random(&vocab, 8, 5), 6)?;
    let docs: [&[usize]; 4] = [&[2, 9, 14, 20], &[3, 3, 7], &[25, 11, 4, 8, 16], &[29]];
    let batch = DocumentBatch::new(&docs, None)?;
    let p = model.predict(&batch)?;

    println!("{:>10} {:>14} {:>14}", "iterations", "KL along r", "KL random");
    for iterations in [1, 2, 5, 10] {
        let cfg = RegimeConfig {
            epsilon: 1.0,
            power_iterations: iterations,
            ..RegimeConfig::new(Regime::Vat)
        };
        // Same starting direction for every row of the table.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let r = gen_vadv(&model, &batch, &p, &cfg, &mut Dropout::eval(), &mut rng)?;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let random = {
            use rand::Rng;
            let data = (0..r.numel()).map(|_| rng.random_range(-1.0..1.0)).collect();
            Tensor::new(r.shape().to_vec(), data)?.l2_normalize_per_example()
        };
        println!(
            "{iterations:>10} {:>14.6e} {:>14.6e}",
            kl_at(&model, &batch, &p, &r)?,
            kl_at(&model, &batch, &p, &random)?
        );
    }
    Ok(())
}
