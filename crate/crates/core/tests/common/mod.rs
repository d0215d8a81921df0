//! Oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regtext::corpus::DocumentBatch;
use regtext::encoders::{Classifier, TextClassifier};
use regtext::gradcore::{Dropout, Graph, Tensor, Var};
use regtext::smoothing::{adversarial_perturbation, gen_vadv, regime_loss, text_perturb, Regime, RegimeConfig};
use regtext::Result;

pub const FD_STEP: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, 1e-6)`. The floor keeps gradients that are
/// zero up to rounding from producing huge ratios.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

pub fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Reduces any output to a scalar with fixed random weights, so that no
/// gradient is trivially constant.
pub fn weighted_sum(g: &mut Graph<'_, f64>, out: Var, seed: u64) -> Result<Var> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_tensor(g.shape(out), &mut rng);
    let w = g.constant(w);
    let prod = g.mul(out, w)?;
    Ok(g.sum(prod))
}

/// Largest relative error between backward and central differences over
/// every element of every input.
pub fn check_inputs<F>(inputs: &[Tensor<f64>], f: F) -> f64
where
    F: Fn(&mut Graph<'_, f64>, &[Var]) -> Result<Var>,
{
    let value = |ts: &[Tensor<f64>]| -> f64 {
        let mut g = Graph::new();
        let vars: Vec<Var> = ts.iter().map(|t| g.constant(t.clone())).collect();
        let loss = f(&mut g, &vars).unwrap();
        g.scalar(loss)
    };
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.input(t.clone())).collect();
    let loss = f(&mut g, &vars).unwrap();
    g.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    for (i, v) in vars.iter().enumerate() {
        let analytic = g
            .grad(*v)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; inputs[i].numel()]);
        for (j, &a) in analytic.iter().enumerate() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] += FD_STEP;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] -= FD_STEP;
            let numeric = (value(&plus) - value(&minus)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(a, numeric));
        }
    }
    worst
}

fn model_loss(
    model: &TextClassifier<f64>,
    batch: &DocumentBatch,
    dropout: &mut Dropout<f64>,
    x: Option<&Tensor<f64>>,
) -> f64 {
    dropout.rewind();
    let mut g = Graph::new();
    let xv = match x {
        Some(t) => g.constant(t.clone()),
        None => model.embed(&mut g, batch).unwrap(),
    };
    let logits = model.logits(&mut g, xv, batch.lengths(), dropout).unwrap();
    let loss = g.cross_entropy(logits, batch.labels().unwrap()).unwrap();
    g.scalar(loss)
}

/// Checks cross entropy gradients of a whole model, with dropout active,
/// against central differences: once for every parameter and once for
/// the embedded input.
pub fn check_model(model: &TextClassifier<f64>, batch: &DocumentBatch, dropout_seed: u64) -> f64 {
    let mut dropout = Dropout::train(model.spec().dropout_rate, dropout_seed).unwrap();
    let mut worst: f64 = 0.0;

    let grads = {
        dropout.rewind();
        let mut g = Graph::new();
        let x = model.embed(&mut g, batch).unwrap();
        let logits = model.logits(&mut g, x, batch.lengths(), &mut dropout).unwrap();
        let loss = g.cross_entropy(logits, batch.labels().unwrap()).unwrap();
        g.backward(loss).unwrap();
        g.param_grads()
    };
    for (key, grad) in grads {
        for (j, &a) in grad.iter().enumerate() {
            let mut shifted = |delta: f64| {
                let mut m = model.clone();
                m.params_mut().get_mut(key).tensor.data_mut()[j] += delta;
                model_loss(&m, batch, &mut dropout, None)
            };
            let numeric = (shifted(FD_STEP) - shifted(-FD_STEP)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(a, numeric));
        }
    }

    let x = model.lookup(batch).unwrap();
    dropout.rewind();
    let mut g = Graph::new();
    let xv = g.input(x.clone());
    let logits = model.logits(&mut g, xv, batch.lengths(), &mut dropout).unwrap();
    let loss = g.cross_entropy(logits, batch.labels().unwrap()).unwrap();
    g.backward(loss).unwrap();
    let analytic = g.grad(xv).unwrap().to_vec();
    for (j, &a) in analytic.iter().enumerate() {
        let mut shifted = |delta: f64| {
            let mut xs = x.clone();
            xs.data_mut()[j] += delta;
            model_loss(model, batch, &mut dropout, Some(&xs))
        };
        let numeric = (shifted(FD_STEP) - shifted(-FD_STEP)) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(a, numeric));
    }
    worst
}

/// Mean-pooled embeddings followed by one linear layer. Around a point the
/// KL divergence of its output is a quadratic form whose matrix is
/// `W (diag(p) - p p^T) W^T`.
pub struct LinearSoftmax {
    /// `[V, d]`.
    pub table: Tensor<f64>,
    /// `[d, k]`.
    pub w: Tensor<f64>,
}

impl Classifier<f64> for LinearSoftmax {
    fn num_classes(&self) -> usize {
        self.w.shape()[1]
    }

    fn dropout_rate(&self) -> f64 {
        0.0
    }

    fn embed<'a>(&'a self, g: &mut Graph<'a, f64>, batch: &DocumentBatch) -> Result<Var> {
        let t = g.param(0, &self.table);
        g.gather(t, batch.token_ids(), &[batch.size(), batch.max_len()])
    }

    fn lookup(&self, batch: &DocumentBatch) -> Result<Tensor<f64>> {
        let d = self.table.shape()[1];
        let data = batch
            .token_ids()
            .iter()
            .flat_map(|&id| self.table.data()[id * d..(id + 1) * d].iter().copied())
            .collect();
        Tensor::new([batch.size(), batch.max_len(), d], data)
    }

    fn logits<'a>(
        &'a self,
        g: &mut Graph<'a, f64>,
        x: Var,
        lengths: &[usize],
        dropout: &mut Dropout<f64>,
    ) -> Result<Var> {
        let pooled = g.masked_mean_time(x, lengths)?;
        let pooled = dropout.apply(g, pooled)?;
        let w = g.param(1, &self.w);
        g.matmul(pooled, w)
    }
}

/// Random documents over ids `2..vocab` with lengths in `1..=max_len`.
pub fn random_docs(rng: &mut ChaCha8Rng, n: usize, vocab: usize, max_len: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (0..len).map(|_| rng.random_range(2..vocab)).collect()
        })
        .collect()
}

pub fn labeled_batch(docs: &[Vec<usize>], labels: Vec<usize>) -> DocumentBatch {
    let refs: Vec<&[usize]> = docs.iter().map(Vec::as_slice).collect();
    DocumentBatch::new(&refs, Some(labels)).unwrap()
}

pub fn unlabeled_batch(docs: &[Vec<usize>]) -> DocumentBatch {
    let refs: Vec<&[usize]> = docs.iter().map(Vec::as_slice).collect();
    DocumentBatch::new(&refs, None).unwrap()
}

type Build = Box<dyn Fn(&mut Graph<'_, f64>, &[Var]) -> Result<Var>>;

fn case(name: &str, shapes: &[&[usize]], build: Build) -> (String, Vec<Vec<usize>>, Build) {
    (name.to_string(), shapes.iter().map(|s| s.to_vec()).collect(), build)
}

/// Worst finite-difference error of every differentiable primitive, each on
/// small random inputs and reduced to a scalar by a random weighting.
pub fn primitive_fd_errors(seed: u64) -> Vec<(String, f64)> {
    let unary = |name: &str, op: fn(&mut Graph<'_, f64>, Var) -> Var| {
        case(
            name,
            &[&[2, 3]],
            Box::new(move |g: &mut Graph<'_, f64>, v: &[Var]| {
                let y = op(g, v[0]);
                weighted_sum(g, y, 1)
            }),
        )
    };
    let binary = |name: &str, op: fn(&mut Graph<'_, f64>, Var, Var) -> Result<Var>| {
        case(
            name,
            &[&[2, 3], &[2, 3]],
            Box::new(move |g: &mut Graph<'_, f64>, v: &[Var]| {
                let y = op(g, v[0], v[1])?;
                weighted_sum(g, y, 2)
            }),
        )
    };
    let probe = |seed: u64| random_tensor(&[2, 4], &mut ChaCha8Rng::seed_from_u64(seed));
    let cases = vec![
        binary("add", |g, a, b| g.add(a, b)),
        binary("sub", |g, a, b| g.sub(a, b)),
        binary("mul", |g, a, b| g.mul(a, b)),
        binary("maximum", |g, a, b| g.maximum(a, b)),
        unary("neg", |g, x| g.neg(x)),
        unary("scale", |g, x| g.scale(x, 1.7)),
        unary("exp", |g, x| g.exp(x)),
        unary("tanh", |g, x| g.tanh(x)),
        unary("sigmoid", |g, x| g.sigmoid(x)),
        unary("relu", |g, x| g.relu(x)),
        case(
            "log",
            &[&[2, 3]],
            Box::new(|g, v| {
                // Composed with exp so the argument stays positive under perturbation.
                let e = g.exp(v[0]);
                let y = g.log(e);
                weighted_sum(g, y, 3)
            }),
        ),
        case(
            "mul_const",
            &[&[2, 3]],
            Box::new(|g, v| {
                let y = g.mul_const(v[0], vec![0.5, -2.0, 0.0, 1.0, 3.0, -0.1])?;
                weighted_sum(g, y, 4)
            }),
        ),
        case(
            "dropout",
            &[&[3, 4]],
            Box::new(|g, v| {
                let y = g.dropout(v[0], 0.5, &mut ChaCha8Rng::seed_from_u64(3))?;
                weighted_sum(g, y, 5)
            }),
        ),
        case(
            "matmul",
            &[&[2, 3], &[3, 4]],
            Box::new(|g, v| {
                let y = g.matmul(v[0], v[1])?;
                weighted_sum(g, y, 6)
            }),
        ),
        case(
            "add_bias",
            &[&[2, 3], &[3]],
            Box::new(|g, v| {
                let y = g.add_bias(v[0], v[1])?;
                weighted_sum(g, y, 7)
            }),
        ),
        case(
            "sum",
            &[&[2, 3]],
            Box::new(|g, v| {
                let s = g.sum(v[0]);
                let s2 = g.mul(s, s)?;
                Ok(s2)
            }),
        ),
        case(
            "mean",
            &[&[2, 3]],
            Box::new(|g, v| {
                let s = g.mean(v[0]);
                g.mul(s, s)
            }),
        ),
        case(
            "sum_axis",
            &[&[2, 3, 4]],
            Box::new(|g, v| {
                let y = g.sum_axis(v[0], 1)?;
                weighted_sum(g, y, 8)
            }),
        ),
        case(
            "mean_axis",
            &[&[2, 3, 4]],
            Box::new(|g, v| {
                let y = g.mean_axis(v[0], 2)?;
                weighted_sum(g, y, 9)
            }),
        ),
        case(
            "max_axis",
            &[&[2, 3, 4]],
            Box::new(|g, v| {
                let (y, _) = g.max_axis(v[0], 1)?;
                weighted_sum(g, y, 10)
            }),
        ),
        case(
            "reshape",
            &[&[2, 3, 4]],
            Box::new(|g, v| {
                let y = g.reshape(v[0], [6, 4])?;
                weighted_sum(g, y, 11)
            }),
        ),
        case(
            "select_time",
            &[&[2, 3, 4]],
            Box::new(|g, v| {
                let y = g.select_time(v[0], 1)?;
                weighted_sum(g, y, 12)
            }),
        ),
        case(
            "stack_time",
            &[&[2, 4], &[2, 4]],
            Box::new(|g, v| {
                let y = g.stack_time(&[v[0], v[1], v[0]])?;
                weighted_sum(g, y, 13)
            }),
        ),
        case(
            "slice_cols",
            &[&[2, 5]],
            Box::new(|g, v| {
                let y = g.slice_cols(v[0], 1, 3)?;
                weighted_sum(g, y, 14)
            }),
        ),
        case(
            "concat_cols",
            &[&[2, 2], &[2, 3]],
            Box::new(|g, v| {
                let y = g.concat_cols(&[v[0], v[1]])?;
                weighted_sum(g, y, 15)
            }),
        ),
        case(
            "where_rows",
            &[&[2, 3], &[2, 3]],
            Box::new(|g, v| {
                let y = g.where_rows(&[true, false], v[0], v[1])?;
                weighted_sum(g, y, 16)
            }),
        ),
        case(
            "masked_mean_time",
            &[&[2, 4, 3]],
            Box::new(|g, v| {
                let y = g.masked_mean_time(v[0], &[4, 2])?;
                weighted_sum(g, y, 17)
            }),
        ),
        case(
            "masked_max_time",
            &[&[2, 4, 3]],
            Box::new(|g, v| {
                let (y, _) = g.masked_max_time(v[0], &[4, 2])?;
                weighted_sum(g, y, 18)
            }),
        ),
        case(
            "unfold_time",
            &[&[2, 5, 2]],
            Box::new(|g, v| {
                let (y, _) = g.unfold_time(v[0], &[5, 3], 3, 2, 1)?;
                weighted_sum(g, y, 19)
            }),
        ),
        case(
            "gather",
            &[&[5, 3]],
            Box::new(|g, v| {
                let y = g.gather(v[0], &[1, 4, 4, 0], &[2, 2])?;
                weighted_sum(g, y, 20)
            }),
        ),
        case(
            "softmax",
            &[&[2, 4]],
            Box::new(|g, v| {
                let y = g.softmax(v[0])?;
                weighted_sum(g, y, 21)
            }),
        ),
        case(
            "cross_entropy",
            &[&[3, 4]],
            Box::new(|g, v| g.cross_entropy(v[0], &[0, 3, 1])),
        ),
        case(
            "kl_divergence",
            &[&[2, 4]],
            Box::new(move |g, v| {
                // The first argument is a constant by contract.
                let a = g.constant(probe(30));
                let p = g.softmax(a)?;
                let q = g.softmax(v[0])?;
                g.kl_divergence(p, q)
            }),
        ),
        case(
            "mse",
            &[&[2, 4], &[2, 4]],
            Box::new(|g, v| {
                let p = g.softmax(v[0])?;
                let q = g.softmax(v[1])?;
                g.mse(p, q)
            }),
        ),
        case(
            "entropy",
            &[&[2, 4]],
            Box::new(|g, v| {
                let p = g.softmax(v[0])?;
                g.entropy(p)
            }),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cases
        .into_iter()
        .map(|(name, shapes, build)| {
            let inputs: Vec<Tensor<f64>> = shapes.iter().map(|s| random_tensor(s, &mut rng)).collect();
            (name, check_inputs(&inputs, |g, v| build(g, v)))
        })
        .collect()
}

/// Miniature versions of every encoder: d = 4, T <= 5, hidden width 4.
pub fn miniature_encoders() -> Vec<regtext::encoders::EncoderSpec> {
    use regtext::encoders::EncoderSpec;
    vec![
        EncoderSpec::SwemConcat,
        EncoderSpec::Cnn {
            num_kernel: 4,
            context_size: 3,
            stride: 2,
        },
        EncoderSpec::Bilstm { hidden_state: 4 },
        EncoderSpec::BilstmMax { hidden_state: 4 },
    ]
}

/// A random float64 model with `encoder` and a 3-document labeled batch.
pub fn miniature_model(encoder: regtext::encoders::EncoderSpec, seed: u64) -> (TextClassifier<f64>, DocumentBatch) {
    miniature_model_with(encoder, seed, 0.3)
}

pub fn miniature_model_with(
    encoder: regtext::encoders::EncoderSpec,
    seed: u64,
    dropout_rate: f64,
) -> (TextClassifier<f64>, DocumentBatch) {
    miniature_model_sized(encoder, seed, dropout_rate, 5)
}

pub fn miniature_model_sized(
    encoder: regtext::encoders::EncoderSpec,
    seed: u64,
    dropout_rate: f64,
    classifier_dim: usize,
) -> (TextClassifier<f64>, DocumentBatch) {
    use regtext::corpus::EmbeddingTable;
    use regtext::encoders::ModelSpec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = 8;
    let mut table = random_tensor(&[vocab, 4], &mut rng);
    table.data_mut()[..4].iter_mut().for_each(|v| *v = 0.0);
    let spec = ModelSpec {
        encoder,
        embedding_dim: 4,
        classifier_dim,
        dropout_rate,
        num_classes: 3,
        train_embeddings: true,
    };
    let mut model = TextClassifier::new(spec, EmbeddingTable { weights: table }, seed).unwrap();
    // Zero biases put ReLUs fed by all-zero features exactly on their kink.
    for p in model.params_mut().iter_mut().filter(|p| p.name.ends_with("bias")) {
        p.tensor
            .data_mut()
            .iter_mut()
            .for_each(|v| *v = rng.random_range(-0.2..0.2));
    }
    // No repeated token within a document: equal rows would put max pooling on a kink.
    let docs = vec![vec![2, 5, 3, 7, 4], vec![6, 2], vec![3, 6, 5]];
    (model, labeled_batch(&docs, vec![0, 2, 1]))
}

fn loss_value<'a>(
    g: &mut Graph<'a, f64>,
    model: &'a TextClassifier<f64>,
    lb: &DocumentBatch,
    ub: &DocumentBatch,
    cfg: &RegimeConfig,
    seed: u64,
) -> regtext::smoothing::LossTerms {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    regime_loss(g, model, lb, Some(ub), cfg, &mut rng).unwrap()
}

/// `|L_regime - L_sup|` for each degenerate configuration, maximized over
/// seeds and encoders; the last entry is the Pi consistency term itself
/// with dropout and text noise off.
pub fn degeneration_gaps(seeds: u64) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = Vec::new();
    let mut record = |name: &str, gap: f64| match out.iter_mut().find(|(n, _)| n == name) {
        Some((_, g)) => *g = g.max(gap),
        None => out.push((name.to_string(), gap)),
    };
    for enc in miniature_encoders() {
        let (model, lb) = miniature_model(enc.clone(), 21);
        let ub = unlabeled_batch(&[vec![4, 2, 6], vec![7], vec![5, 3, 2, 6]]);
        let cases = [
            (
                "AT(eps=0) vs SUP",
                RegimeConfig {
                    epsilon: 0.0,
                    ..RegimeConfig::new(Regime::At)
                },
            ),
            (
                "AT(alpha=1) vs SUP",
                RegimeConfig {
                    alpha: 1.0,
                    ..RegimeConfig::new(Regime::At)
                },
            ),
            (
                "VAT(lambda=0) vs SUP",
                RegimeConfig {
                    lambda_entropy: 0.0,
                    lambda_consistency: 0.0,
                    ..RegimeConfig::new(Regime::Vat)
                },
            ),
            (
                "PI(lambda=0) vs SUP",
                RegimeConfig {
                    lambda_entropy: 0.0,
                    lambda_consistency: 0.0,
                    ..RegimeConfig::new(Regime::Pi)
                },
            ),
            (
                "AT+VAT(alpha=1, lambda=0) vs SUP",
                RegimeConfig {
                    alpha: 1.0,
                    lambda_entropy: 0.0,
                    lambda_consistency: 0.0,
                    ..RegimeConfig::new(Regime::AtVat)
                },
            ),
        ];
        for seed in 0..seeds {
            let mut g = Graph::new();
            let sup = loss_value(&mut g, &model, &lb, &ub, &RegimeConfig::new(Regime::Sup), seed);
            let sup = g.scalar(sup.total);
            for (name, cfg) in &cases {
                let mut g = Graph::new();
                let terms = loss_value(&mut g, &model, &lb, &ub, cfg, seed);
                record(name, (g.scalar(terms.total) - sup).abs());
            }
        }
        let (quiet, lb) = miniature_model_with(enc, 21, 0.0);
        let cfg = RegimeConfig {
            unk_rate: 0.0,
            swap_rate: 0.0,
            ..RegimeConfig::new(Regime::Pi)
        };
        for seed in 0..seeds {
            let mut g = Graph::new();
            let terms = loss_value(&mut g, &quiet, &lb, &ub, &cfg, seed);
            record(
                "PI(dropout=0, rates=0) consistency",
                g.scalar(terms.consistency.unwrap()).abs(),
            );
        }
    }
    out
}

/// Per-example norm errors of eta and r_vadv over random batches.
#[derive(Debug, Default)]
pub struct NormReport {
    /// Largest `| ||eta_i|| - eps |` over examples with a nonzero gradient.
    pub eta_err: f64,
    pub r_err: f64,
    /// Examples whose loss gradient was exactly zero, so that eta is zero.
    pub eta_zero: usize,
    pub examples: usize,
}

/// Alternates SWEM and BiLSTM(MAX) models over `batches` random batches.
pub fn perturbation_norm_errors(batches: u64) -> NormReport {
    use regtext::encoders::EncoderSpec;
    let mut rep = NormReport::default();
    for i in 0..batches {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
        let enc = if i % 2 == 0 {
            EncoderSpec::SwemConcat
        } else {
            EncoderSpec::BilstmMax { hidden_state: 4 }
        };
        // Wide enough that no document loses every hidden unit to a dead ReLU or dropout.
        let (model, _) = miniature_model_sized(enc, i, 0.3, 16);
        let n = rng.random_range(1..6);
        let docs = random_docs(&mut rng, n, 8, 5);
        let labels = (0..n).map(|_| rng.random_range(0..3)).collect();
        let lb = labeled_batch(&docs, labels);
        let eps = rng.random_range(0.1..5.0);

        let mut dropout = Dropout::train(0.3, rng.random()).unwrap();
        let eta = adversarial_perturbation(&model, &lb, eps, &mut dropout).unwrap();
        for norm in eta.per_example_norms() {
            rep.examples += 1;
            if norm == 0.0 {
                rep.eta_zero += 1;
            } else {
                rep.eta_err = rep.eta_err.max((norm - eps).abs());
            }
        }

        let ub = unlabeled_batch(&docs);
        let cfg = RegimeConfig {
            epsilon: eps,
            ..RegimeConfig::new(Regime::Vat)
        };
        let mut dropout = Dropout::train(0.3, rng.random()).unwrap();
        let p = {
            let mut g = Graph::new();
            let x = model.embed(&mut g, &ub).unwrap();
            let logits = model.logits(&mut g, x, ub.lengths(), &mut dropout).unwrap();
            let p = g.softmax(logits).unwrap();
            g.tensor(p)
        };
        let r = gen_vadv(&model, &ub, &p, &cfg, &mut dropout, &mut rng).unwrap();
        for norm in r.per_example_norms() {
            rep.r_err = rep.r_err.max((norm - eps).abs());
        }
    }
    rep
}

/// Fixed 3-dimensional linear-softmax model at a fixed point, the matrix of
/// its local KL quadratic form, and the one-token batch at that point.
pub fn quadratic_kl_surface() -> (LinearSoftmax, DocumentBatch, nalgebra::Matrix3<f64>) {
    let point = [0.2, -0.1, 0.3];
    let mut table = vec![0.0; 3 * 3];
    table[6..9].copy_from_slice(&point);
    #[rustfmt::skip]
    let w = vec![
        3.0, 0.0, 0.0, -1.0,
        0.0, 1.0, 0.0, 0.5,
        0.0, 0.0, 0.3, 0.0,
    ];
    let model = LinearSoftmax {
        table: Tensor::new([3, 3], table).unwrap(),
        w: Tensor::new([3, 4], w.clone()).unwrap(),
    };
    let batch = unlabeled_batch(&[vec![2]]);
    let wm = nalgebra::DMatrix::from_row_slice(3, 4, &w);
    let logits = nalgebra::DVector::from_row_slice(&point).transpose() * &wm;
    let m = logits.max();
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let z: f64 = e.iter().sum();
    let p = nalgebra::DVector::from_iterator(4, e.iter().map(|v| v / z));
    let fisher = nalgebra::DMatrix::from_diagonal(&p) - &p * p.transpose();
    let h = &wm * fisher * wm.transpose();
    (model, batch, nalgebra::Matrix3::from_iterator(h.iter().copied()))
}

/// Smallest `|cos|` between the virtual adversarial direction found with
/// `iterations` power iterations and the dominant eigenvector, over
/// `starts` random starting directions.
pub fn power_method_cosine(iterations: usize, starts: u64) -> f64 {
    let (model, batch, h) = quadratic_kl_surface();
    let eig = nalgebra::SymmetricEigen::new(h);
    let top = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(top).into_owned();
    let p = {
        let mut g = Graph::new();
        let x = model.embed(&mut g, &batch).unwrap();
        let logits = model.logits(&mut g, x, batch.lengths(), &mut Dropout::eval()).unwrap();
        let p = g.softmax(logits).unwrap();
        g.tensor(p)
    };
    let cfg = RegimeConfig {
        power_iterations: iterations,
        epsilon: 1.0,
        ..RegimeConfig::new(Regime::Vat)
    };
    (0..starts)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let r = gen_vadv(&model, &batch, &p, &cfg, &mut Dropout::eval(), &mut rng).unwrap();
            let r = nalgebra::Vector3::from_row_slice(r.data());
            (r.dot(&v) / (r.norm() * v.norm())).abs()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues of the KL quadratic form, descending.
pub fn quadratic_kl_spectrum() -> Vec<f64> {
    let (_, _, h) = quadratic_kl_surface();
    let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Number of random batches, out of `batches`, whose SWEM logits change
/// bitwise after a swap-only perturbation. Checked in f32 and f64.
pub fn swem_swap_changes(batches: u64) -> usize {
    use regtext::corpus::EmbeddingTable;
    use regtext::encoders::{EncoderSpec, ModelSpec};
    let spec = ModelSpec {
        encoder: EncoderSpec::SwemConcat,
        embedding_dim: 16,
        classifier_dim: 8,
        dropout_rate: 0.0,
        num_classes: 4,
        train_embeddings: true,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let table = random_tensor(&[50, 16], &mut rng);
    let m64 = TextClassifier::<f64>::new(spec.clone(), EmbeddingTable { weights: table.clone() }, 1).unwrap();
    let m32 = TextClassifier::<f32>::new(spec, EmbeddingTable { weights: table.cast() }, 1).unwrap();
    let mut changed = 0;
    for _ in 0..batches {
        let n = rng.random_range(1..9);
        let docs = random_docs(&mut rng, n, 50, 30);
        let b = unlabeled_batch(&docs);
        let swapped = text_perturb(&b, 0.0, rng.random_range(0.2..=1.0), &mut rng).unwrap();
        let logits64 = |b: &DocumentBatch| {
            let mut g = Graph::new();
            let x = m64.embed(&mut g, b).unwrap();
            let l = m64.logits(&mut g, x, b.lengths(), &mut Dropout::eval()).unwrap();
            g.value(l).to_vec()
        };
        let logits32 = |b: &DocumentBatch| {
            let mut g = Graph::new();
            let x = m32.embed(&mut g, b).unwrap();
            let l = m32.logits(&mut g, x, b.lengths(), &mut Dropout::eval()).unwrap();
            g.value(l).to_vec()
        };
        let same64 = logits64(&b)
            .iter()
            .zip(logits64(&swapped))
            .all(|(a, c)| a.to_bits() == c.to_bits());
        let same32 = logits32(&b)
            .iter()
            .zip(logits32(&swapped))
            .all(|(a, c)| a.to_bits() == c.to_bits());
        if !(same64 && same32) {
            changed += 1;
        }
    }
    changed
}
