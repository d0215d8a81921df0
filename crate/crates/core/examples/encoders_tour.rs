//! Every encoder on the same padded batch: feature widths, parameter
//! counts, and predictions that ignore padding.
//!
//! ```text
//! cargo run --release --example encoders_tour
//! ```

use regtext::corpus::{tokenize, DocumentBatch, EmbeddingTable, Vocabulary};
use regtext::encoders::{Classifier, EncoderSpec, ModelSpec, TextClassifier};
use regtext::gradcore::Graph;

fn main() -> regtext::Result<()> {
    let texts = [
        "oil prices climb on supply fears",
        "striker scores twice",
        "chip maker beats forecasts again today",
    ];
    let tokens: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
    let vocab = Vocabulary::build(&tokens, 1);
    let ids: Vec<Vec<usize>> = tokens.iter().map(|t| vocab.encode(t)).collect();
    let refs: Vec<&[usize]> = ids.iter().map(Vec::as_slice).collect();
    let batch = DocumentBatch::new(&refs, None)?;
    let alone = DocumentBatch::new(&refs[1..2], None)?;
    println!(
        "batch {} x {} (lengths {:?})\n",
        batch.size(),
        batch.max_len(),
        batch.lengths()
    );

    let encoders = [
        EncoderSpec::SwemConcat,
        EncoderSpec::Cnn {
            num_kernel: 64,
            context_size: 3,
            stride: 1,
        },
        EncoderSpec::Bilstm { hidden_state: 32 },
        EncoderSpec::BilstmMax { hidden_state: 32 },
    ];
    for encoder in encoders {
        let spec = ModelSpec {
            encoder,
            embedding_dim: 24,
            classifier_dim: 32,
            dropout_rate: 0.3,
            num_classes: 4,
            train_embeddings: true,
        };
        let model = TextClassifier::<f64>::new(spec, EmbeddingTable::random(&vocab, 24, 1), 2)?;
        let mut g = Graph::new();
        let x = model.embed(&mut g, &batch)?;
        let z = model.encode(&mut g, x, batch.lengths())?.features;

        // Row 1 is padded inside the batch; alone it is not.
        let p = model.predict(&batch)?;
        let q = model.predict(&alone)?;
        let gap = p.data()[4..8]
            .iter()
            .zip(q.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "{:<11} features {:>3}, encoder params {:>6}, p(row 1) {:.3?}, padding gap {gap:.1e}",
            model.spec().encoder.name(),
            g.shape(z)[1],
            model.encoder_param_count(),
            &p.data()[4..8],
        );
    }
    Ok(())
}
