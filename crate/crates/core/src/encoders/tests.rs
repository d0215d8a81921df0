use super::*;

fn table(rows: &[&[f64]]) -> EmbeddingTable<f64> {
    let d = rows[0].len();
    let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
    EmbeddingTable {
        weights: Tensor::new([rows.len(), d], data).unwrap(),
    }
}

fn random_table(rows: usize, d: usize) -> EmbeddingTable<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    EmbeddingTable {
        weights: glorot(rows, d, &mut rng),
    }
}

fn spec(encoder: EncoderSpec, d: usize, k: usize) -> ModelSpec {
    ModelSpec {
        encoder,
        embedding_dim: d,
        classifier_dim: 4,
        dropout_rate: 0.0,
        num_classes: k,
        train_embeddings: true,
    }
}

fn features(model: &TextClassifier<f64>, x: Tensor<f64>, lengths: &[usize]) -> Tensor<f64> {
    let mut g = Graph::new();
    let x = g.constant(x);
    let z = model.encode(&mut g, x, lengths).unwrap().features;
    g.tensor(z)
}

fn batch(docs: &[&[usize]], max_len: usize) -> DocumentBatch {
    DocumentBatch::padded(docs, None, max_len).unwrap()
}

fn zero_params(model: &mut TextClassifier<f64>, prefix: &str) {
    for p in model.params_mut().iter_mut().filter(|p| p.name.starts_with(prefix)) {
        p.tensor.data_mut().iter_mut().for_each(|v| *v = 0.0);
    }
}

#[test]
fn swem_concatenates_average_and_max() {
    let model = TextClassifier::new(spec(EncoderSpec::SwemConcat, 2, 2), random_table(3, 2), 0).unwrap();
    let x = Tensor::from_f64([1, 2, 2], &[1.0, 3.0, 3.0, 1.0]).unwrap();
    assert_eq!(features(&model, x, &[2]).data(), &[2.0, 2.0, 3.0, 3.0]);
    let one = Tensor::from_f64([1, 1, 2], &[-1.0, 4.0]).unwrap();
    assert_eq!(features(&model, one, &[1]).data(), &[-1.0, 4.0, -1.0, 4.0]);
}

#[test]
fn padding_never_changes_predictions() {
    let encoders = [
        EncoderSpec::SwemConcat,
        EncoderSpec::Cnn {
            num_kernel: 3,
            context_size: 3,
            stride: 2,
        },
        EncoderSpec::Bilstm { hidden_state: 3 },
        EncoderSpec::BilstmMax { hidden_state: 3 },
    ];
    for enc in encoders {
        let model = TextClassifier::new(spec(enc.clone(), 3, 3), random_table(6, 3), 1).unwrap();
        let docs: [&[usize]; 2] = [&[2, 3, 4], &[5]];
        let tight = model.predict(&batch(&docs, 3)).unwrap();
        let loose = model.predict(&batch(&docs, 7)).unwrap();
        for (a, b) in tight.data().iter().zip(loose.data()) {
            assert!((a - b).abs() < 1e-12, "{}: {a} vs {b}", enc.name());
        }
    }
}

#[test]
fn cnn_on_zero_input_is_relu_of_bias() {
    let enc = EncoderSpec::Cnn {
        num_kernel: 4,
        context_size: 3,
        stride: 2,
    };
    let mut model = TextClassifier::new(spec(enc, 2, 2), random_table(3, 2), 0).unwrap();
    let bias = model.params_mut().find_mut("cnn.bias").unwrap();
    bias.tensor.data_mut().copy_from_slice(&[-1.0, 0.5, 0.0, 2.0]);
    let z = features(&model, Tensor::zeros([2, 5, 2]), &[5, 2]);
    assert_eq!(z.data(), &[0.0, 0.5, 0.0, 2.0, 0.0, 0.5, 0.0, 2.0]);
}

#[test]
fn cnn_default_shape_and_row_independence() {
    let model = TextClassifier::new(spec(EncoderSpec::cnn(), 2, 2), random_table(4, 2), 0).unwrap();
    for t in [1, 9] {
        let x = Tensor::full([1, t, 2], 0.3);
        assert_eq!(features(&model, x, &[t]).shape(), &[1, 300]);
    }
    let row = [0.1, -0.4, 0.7, 0.2, -0.3, 0.5];
    let single = features(&model, Tensor::from_f64([1, 3, 2], &row).unwrap(), &[3]);
    let doubled: Vec<f64> = row.iter().chain(&row).copied().collect();
    let pair = features(&model, Tensor::from_f64([2, 3, 2], &doubled).unwrap(), &[3, 3]);
    assert_eq!(&pair.data()[..300], single.data());
    assert_eq!(&pair.data()[300..], single.data());
}

#[test]
fn lstm_with_zero_weights_outputs_zero() {
    for enc in [
        EncoderSpec::Bilstm { hidden_state: 3 },
        EncoderSpec::BilstmMax { hidden_state: 3 },
    ] {
        let mut model = TextClassifier::new(spec(enc, 2, 2), random_table(3, 2), 0).unwrap();
        zero_params(&mut model, "lstm.");
        let x = Tensor::from_f64([1, 3, 2], &[1.0, -2.0, 0.5, 3.0, -1.0, 0.0]).unwrap();
        assert!(features(&model, x, &[3]).data().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn default_lstm_width_is_512() {
    let model = TextClassifier::new(spec(EncoderSpec::bilstm(), 2, 2), random_table(3, 2), 0).unwrap();
    assert_eq!(
        features(&model, Tensor::full([2, 2, 2], 0.1), &[2, 1]).shape(),
        &[2, 512]
    );
}

/// Forward LSTM over `xs` with fused weights in input, forget, cell, output order.
fn lstm_oracle(xs: &[[f64; 2]], w_ih: &[f64], w_hh: &[f64], bias: &[f64], h_dim: usize) -> Vec<f64> {
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let (mut h, mut c) = (vec![0.0; h_dim], vec![0.0; h_dim]);
    for x in xs {
        let gate = |j: usize, h: &[f64]| {
            bias[j]
                + (0..2).map(|i| x[i] * w_ih[i * 4 * h_dim + j]).sum::<f64>()
                + (0..h_dim).map(|i| h[i] * w_hh[i * 4 * h_dim + j]).sum::<f64>()
        };
        let pre: Vec<f64> = (0..4 * h_dim).map(|j| gate(j, &h)).collect();
        for u in 0..h_dim {
            let (i, f) = (sig(pre[u]), sig(pre[h_dim + u]));
            let (cand, o) = (pre[2 * h_dim + u].tanh(), sig(pre[3 * h_dim + u]));
            c[u] = f * c[u] + i * cand;
            h[u] = o * c[u].tanh();
        }
    }
    h
}

#[test]
fn bilstm_matches_recurrence_and_reversal_swaps_halves() {
    let h_dim = 2;
    let mut model = TextClassifier::new(
        spec(EncoderSpec::Bilstm { hidden_state: h_dim }, 2, 2),
        random_table(3, 2),
        3,
    )
    .unwrap();
    // Share one direction's weights so that reversing the text swaps the halves.
    for part in ["w_ih", "w_hh", "bias"] {
        let fwd = model
            .params()
            .find(&format!("lstm.fwd.{part}"))
            .unwrap()
            .tensor
            .data()
            .to_vec();
        let bwd = model.params_mut().find_mut(&format!("lstm.bwd.{part}")).unwrap();
        bwd.tensor.data_mut().copy_from_slice(&fwd);
    }
    let get = |n: &str| model.params().find(n).unwrap().tensor.data().to_vec();
    let (w_ih, w_hh, bias) = (get("lstm.fwd.w_ih"), get("lstm.fwd.w_hh"), get("lstm.fwd.bias"));
    let (a, b) = ([0.3, -0.8], [1.1, 0.4]);

    let ab = features(
        &model,
        Tensor::from_f64([1, 2, 2], &[a[0], a[1], b[0], b[1]]).unwrap(),
        &[2],
    );
    let ba = features(
        &model,
        Tensor::from_f64([1, 2, 2], &[b[0], b[1], a[0], a[1]]).unwrap(),
        &[2],
    );
    let fwd_ab = lstm_oracle(&[a, b], &w_ih, &w_hh, &bias, h_dim);
    let fwd_ba = lstm_oracle(&[b, a], &w_ih, &w_hh, &bias, h_dim);
    for u in 0..h_dim {
        assert!((ab.data()[u] - fwd_ab[u]).abs() < 1e-12);
        assert!((ab.data()[h_dim + u] - fwd_ba[u]).abs() < 1e-12);
        assert!((ba.data()[u] - ab.data()[h_dim + u]).abs() < 1e-12);
        assert!((ba.data()[h_dim + u] - ab.data()[u]).abs() < 1e-12);
    }
}

#[test]
fn bilstm_max_on_one_token_equals_bilstm() {
    let plain = TextClassifier::new(
        spec(EncoderSpec::Bilstm { hidden_state: 3 }, 2, 2),
        random_table(3, 2),
        9,
    )
    .unwrap();
    let pooled = TextClassifier::new(
        spec(EncoderSpec::BilstmMax { hidden_state: 3 }, 2, 2),
        random_table(3, 2),
        9,
    )
    .unwrap();
    let x = Tensor::from_f64([2, 1, 2], &[0.5, -0.2, 1.0, 2.0]).unwrap();
    assert_eq!(
        features(&plain, x.clone(), &[1, 1]).data(),
        features(&pooled, x, &[1, 1]).data()
    );
}

#[test]
fn histogram_counts_respect_lengths() {
    let model = TextClassifier::new(
        spec(EncoderSpec::BilstmMax { hidden_state: 4 }, 3, 2),
        random_table(6, 3),
        2,
    )
    .unwrap();
    let docs: [&[usize]; 3] = [&[2, 3, 4, 5], &[3, 2], &[4]];
    let counts = model.timestep_histogram(&batch(&docs, 4)).unwrap();
    for (row, doc) in counts.iter().zip(docs) {
        assert_eq!(row.iter().sum::<usize>(), 8);
        assert!(row[doc.len()..].iter().all(|&c| c == 0));
    }
    assert_eq!(counts[2][0], 8);
}

#[test]
fn constant_states_tie_to_the_first_timestep() {
    let mut model = TextClassifier::new(
        spec(EncoderSpec::BilstmMax { hidden_state: 3 }, 2, 2),
        random_table(4, 2),
        0,
    )
    .unwrap();
    zero_params(&mut model, "lstm.");
    let counts = model.timestep_histogram(&batch(&[&[2, 3, 2]], 3)).unwrap();
    assert_eq!(counts, vec![vec![6, 0, 0]]);
}

#[test]
fn histogram_needs_max_pooling() {
    let model = TextClassifier::new(spec(EncoderSpec::SwemConcat, 2, 2), random_table(3, 2), 0).unwrap();
    assert!(matches!(
        model.timestep_histogram(&batch(&[&[2]], 1)),
        Err(Error::WrongEncoder { .. })
    ));
}

#[test]
fn classifier_distributions() {
    let mut model = TextClassifier::new(spec(EncoderSpec::SwemConcat, 2, 2), random_table(5, 2), 4).unwrap();
    let b = batch(&[&[2, 3], &[4]], 2);
    let p = model.predict(&b).unwrap();
    for row in p.data().chunks(2) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
    assert_eq!(p, model.predict(&b).unwrap());
    zero_params(&mut model, "classifier.out.");
    assert!(model.predict(&b).unwrap().data().iter().all(|&v| v == 0.5));
}

#[test]
fn embedding_dimension_must_match() {
    let err = TextClassifier::new(spec(EncoderSpec::SwemConcat, 3, 2), table(&[&[0.0, 0.0]]), 0).unwrap_err();
    assert!(matches!(err, Error::Config { .. }));
}
