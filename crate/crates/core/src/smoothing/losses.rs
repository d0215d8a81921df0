use rand::Rng;
use rand_distr::StandardNormal;

use crate::corpus::DocumentBatch;
use crate::encoders::Classifier;
use crate::error::{Error, Result};
use crate::gradcore::{Dropout, Graph, Scalar, Tensor, Var};

use super::config::{Regime, RegimeConfig};
use super::text::text_perturb;

/// The loss of one training step and its components, all scalar nodes of
/// the same graph. `total` is what gets differentiated.
#[derive(Clone, Copy, Debug)]
pub struct LossTerms {
    pub total: Var,
    /// Cross entropy, or the adversarial mix for AT and AT+VAT.
    pub supervised: Var,
    pub entropy: Option<Var>,
    pub consistency: Option<Var>,
}

impl LossTerms {
    fn supervised_only(v: Var) -> Self {
        Self {
            total: v,
            supervised: v,
            entropy: None,
            consistency: None,
        }
    }
}

fn require(op: &'static str, cfg: &RegimeConfig, allowed: &[Regime]) -> Result<()> {
    if allowed.contains(&cfg.regime) {
        Ok(())
    } else {
        Err(Error::WrongRegime {
            op,
            found: cfg.regime.key().to_string(),
        })
    }
}

fn labels<'b>(batch: &'b DocumentBatch, op: &'static str) -> Result<&'b [usize]> {
    batch.labels().ok_or_else(|| Error::InvalidShape {
        op,
        shape: vec![batch.size()],
        reason: "labeled batch carries no labels".into(),
    })
}

fn unlabeled_or_warn<'b>(op: &str, batch: Option<&'b DocumentBatch>) -> Option<&'b DocumentBatch> {
    match batch {
        Some(b) if b.size() > 0 => Some(b),
        _ => {
            log::warn!("{op}: empty unlabeled batch, using the labeled term only");
            None
        }
    }
}

fn fresh_dropout<T: Scalar, R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<Dropout<T>> {
    Dropout::train(rate, rng.random())
}

fn add_scaled<T: Scalar>(g: &mut Graph<'_, T>, acc: Var, term: Var, weight: f64) -> Result<Var> {
    let w = g.scale(term, T::lit(weight));
    g.add(acc, w)
}

/// Cross entropy of the model on a labeled batch.
pub fn supervised_loss<'a, T: Scalar, C: Classifier<T>>(
    g: &mut Graph<'a, T>,
    model: &'a C,
    batch: &DocumentBatch,
    dropout: &mut Dropout<T>,
) -> Result<Var> {
    let y = labels(batch, "supervised_loss")?;
    let x = model.embed(g, batch)?;
    let logits = model.logits(g, x, batch.lengths(), dropout)?;
    g.cross_entropy(logits, y)
}

/// `epsilon * normalize(dJ/dX)` per example, from a separate graph so the
/// result is a constant. Draws the dropout masks that later passes replay.
pub fn adversarial_perturbation<T: Scalar, C: Classifier<T>>(
    model: &C,
    batch: &DocumentBatch,
    epsilon: f64,
    dropout: &mut Dropout<T>,
) -> Result<Tensor<T>> {
    let y = labels(batch, "adversarial_perturbation")?;
    let mut g = Graph::new();
    let x = g.input(model.lookup(batch)?);
    let logits = model.logits(&mut g, x, batch.lengths(), dropout)?;
    let j = g.cross_entropy(logits, y)?;
    g.backward(j)?;
    let grad = g
        .grad_tensor(x)
        .ok_or_else(|| Error::MissingGradient("embedded input".into()))?;
    Ok(grad.l2_normalize_per_example().scale(T::lit(epsilon)))
}

/// `alpha * J(X) + (1 - alpha) * J(X + eta)` with both passes sharing dropout masks.
pub fn adversarial_loss<'a, T: Scalar, C: Classifier<T>, R: Rng + ?Sized>(
    g: &mut Graph<'a, T>,
    model: &'a C,
    batch: &DocumentBatch,
    cfg: &RegimeConfig,
    rng: &mut R,
) -> Result<Var> {
    require("adversarial_loss", cfg, &[Regime::At, Regime::AtVat])?;
    cfg.check_ranges()?;
    let y = labels(batch, "adversarial_loss")?;
    let mut dropout = fresh_dropout(model.dropout_rate(), rng)?;
    let eta = adversarial_perturbation(model, batch, cfg.epsilon, &mut dropout)?;

    dropout.rewind();
    let x = model.embed(g, batch)?;
    let logits = model.logits(g, x, batch.lengths(), &mut dropout)?;
    let clean = g.cross_entropy(logits, y)?;

    dropout.rewind();
    let eta = g.constant(eta);
    let xp = g.add(x, eta)?;
    let logits = model.logits(g, xp, batch.lengths(), &mut dropout)?;
    let adv = g.cross_entropy(logits, y)?;

    let a = g.scale(clean, T::lit(cfg.alpha));
    let b = g.scale(adv, T::lit(1.0 - cfg.alpha));
    g.add(a, b)
}

/// Forward pass on unlabeled documents, returning the output distribution.
fn distribution<'a, T: Scalar, C: Classifier<T>>(
    g: &mut Graph<'a, T>,
    model: &'a C,
    batch: &DocumentBatch,
    dropout: &mut Dropout<T>,
) -> Result<Var> {
    let x = model.embed(g, batch)?;
    let logits = model.logits(g, x, batch.lengths(), dropout)?;
    g.softmax(logits)
}

/// `J + lambda_H * H(p(X_ul)) + lambda_c * MSE(p1, p2)` where `p1`, `p2`
/// come from two passes with independent dropout masks and text noise.
pub fn pi_loss<'a, T: Scalar, C: Classifier<T>, R: Rng + ?Sized>(
    g: &mut Graph<'a, T>,
    model: &'a C,
    labeled: &DocumentBatch,
    unlabeled: Option<&DocumentBatch>,
    cfg: &RegimeConfig,
    rng: &mut R,
) -> Result<LossTerms> {
    require("pi_loss", cfg, &[Regime::Pi])?;
    cfg.check_ranges()?;
    let mut dropout = fresh_dropout(model.dropout_rate(), rng)?;
    let sup = supervised_loss(g, model, labeled, &mut dropout)?;
    let Some(ul) = unlabeled_or_warn("pi_loss", unlabeled) else {
        return Ok(LossTerms::supervised_only(sup));
    };

    let mut clean_dropout = fresh_dropout(model.dropout_rate(), rng)?;
    let p = distribution(g, model, ul, &mut clean_dropout)?;
    let h = g.entropy(p)?;

    let mut branch = |g: &mut Graph<'a, T>| -> Result<Var> {
        let noisy = text_perturb(ul, cfg.unk_rate, cfg.swap_rate, rng)?;
        let mut d = fresh_dropout(model.dropout_rate(), rng)?;
        distribution(g, model, &noisy, &mut d)
    };
    let p1 = branch(g)?;
    let p2 = branch(g)?;
    let mse = g.mse(p1, p2)?;

    let total = add_scaled(g, sup, h, cfg.lambda_entropy)?;
    let total = add_scaled(g, total, mse, cfg.lambda_consistency)?;
    Ok(LossTerms {
        total,
        supervised: sup,
        entropy: Some(h),
        consistency: Some(mse),
    })
}

/// Virtual adversarial perturbation by power iteration.
///
/// `p_clean` is the model's distribution on the unperturbed batch, computed
/// with the masks recorded in `dropout`; every probe replays those masks.
/// Starting from Gaussian noise (zero at padding), each iteration replaces
/// `r` by the normalized gradient of `KL(p_clean || p(X + xi * r))` with
/// respect to `r`. An example whose gradient vanishes keeps its previous
/// direction. The result has per-example norm `epsilon`.
pub fn gen_vadv<T: Scalar, C: Classifier<T>, R: Rng + ?Sized>(
    model: &C,
    batch: &DocumentBatch,
    p_clean: &Tensor<T>,
    cfg: &RegimeConfig,
    dropout: &mut Dropout<T>,
    rng: &mut R,
) -> Result<Tensor<T>> {
    require("gen_vadv", cfg, &[Regime::Vat, Regime::AtVat])?;
    cfg.check_ranges()?;
    let x = model.lookup(batch)?;
    let (b, tt, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let mut noise = vec![T::zero(); x.numel()];
    for (r, &len) in batch.lengths().iter().enumerate() {
        for v in &mut noise[r * tt * d..(r * tt + len) * d] {
            *v = T::lit(rng.sample(StandardNormal));
        }
    }
    let mut r = Tensor::new([b, tt, d], noise)?.l2_normalize_per_example();
    let width = tt * d;

    for _ in 0..cfg.power_iterations {
        dropout.rewind();
        let mut g = Graph::new();
        let rv = g.input(r.clone());
        let probe = g.scale(rv, T::lit(cfg.xi));
        let xc = g.constant(x.clone());
        let xp = g.add(xc, probe)?;
        let logits = model.logits(&mut g, xp, batch.lengths(), dropout)?;
        let q = g.softmax(logits)?;
        let p = g.constant(p_clean.clone());
        let kl = g.kl_divergence(p, q)?;
        g.backward(kl)?;
        let grad = g
            .grad_tensor(rv)
            .ok_or_else(|| Error::MissingGradient("perturbation".into()))?;
        let next = grad.l2_normalize_per_example();
        let norms = grad.per_example_norms();
        let data = r.data_mut();
        for (row, n) in norms.iter().enumerate() {
            if *n > T::zero() {
                data[row * width..(row + 1) * width].copy_from_slice(&next.data()[row * width..(row + 1) * width]);
            }
        }
    }
    dropout.rewind();
    Ok(r.scale(T::lit(cfg.epsilon)))
}

/// `L_lab + lambda_H * H(p(X_ul)) + lambda_c * KL(p(X_ul) || p(X_ul + r_vadv))`.
///
/// `L_lab` is cross entropy for VAT and the adversarial loss for AT+VAT.
/// The clean distribution is a constant inside the KL term.
pub fn vat_loss<'a, T: Scalar, C: Classifier<T>, R: Rng + ?Sized>(
    g: &mut Graph<'a, T>,
    model: &'a C,
    labeled: &DocumentBatch,
    unlabeled: Option<&DocumentBatch>,
    cfg: &RegimeConfig,
    rng: &mut R,
) -> Result<LossTerms> {
    require("vat_loss", cfg, &[Regime::Vat, Regime::AtVat])?;
    cfg.check_ranges()?;
    let sup = if cfg.regime == Regime::AtVat {
        adversarial_loss(g, model, labeled, cfg, rng)?
    } else {
        let mut dropout = fresh_dropout(model.dropout_rate(), rng)?;
        supervised_loss(g, model, labeled, &mut dropout)?
    };
    let Some(ul) = unlabeled_or_warn("vat_loss", unlabeled) else {
        return Ok(LossTerms::supervised_only(sup));
    };

    let mut dropout = fresh_dropout(model.dropout_rate(), rng)?;
    let x = model.embed(g, ul)?;
    let logits = model.logits(g, x, ul.lengths(), &mut dropout)?;
    let p = g.softmax(logits)?;
    let h = g.entropy(p)?;

    let r = gen_vadv(model, ul, &g.tensor(p), cfg, &mut dropout, rng)?;
    let r = g.constant(r);
    let xp = g.add(x, r)?;
    let logits = model.logits(g, xp, ul.lengths(), &mut dropout)?;
    let q = g.softmax(logits)?;
    let kl = g.kl_divergence(p, q)?;

    let total = add_scaled(g, sup, h, cfg.lambda_entropy)?;
    let total = add_scaled(g, total, kl, cfg.lambda_consistency)?;
    Ok(LossTerms {
        total,
        supervised: sup,
        entropy: Some(h),
        consistency: Some(kl),
    })
}

/// Builds the configured regime's loss for one step. The first draw from
/// `rng` seeds the labeled pass in every regime, so regimes whose extra
/// terms vanish reproduce the supervised loss exactly.
pub fn regime_loss<'a, T: Scalar, C: Classifier<T>, R: Rng + ?Sized>(
    g: &mut Graph<'a, T>,
    model: &'a C,
    labeled: &DocumentBatch,
    unlabeled: Option<&DocumentBatch>,
    cfg: &RegimeConfig,
    rng: &mut R,
) -> Result<LossTerms> {
    match cfg.regime {
        Regime::Sup => {
            let mut dropout = fresh_dropout(model.dropout_rate(), rng)?;
            supervised_loss(g, model, labeled, &mut dropout).map(LossTerms::supervised_only)
        }
        Regime::At => adversarial_loss(g, model, labeled, cfg, rng).map(LossTerms::supervised_only),
        Regime::Pi => pi_loss(g, model, labeled, unlabeled, cfg, rng),
        Regime::Vat | Regime::AtVat => vat_loss(g, model, labeled, unlabeled, cfg, rng),
    }
}
