//! Distribution-smoothing regularizers.
//!
//! Supervised cross entropy plus, depending on the [`Regime`], one of:
//! adversarial training on labeled documents, the Pi model's consistency
//! between two noisy passes, or virtual adversarial training with a
//! power-iteration perturbation. AT+VAT uses the adversarial labeled term
//! together with the virtual adversarial unlabeled term. All continuous
//! perturbations act on the embedded input `X: [b, T, d]`.

mod config;
mod losses;
mod text;

pub use config::{Regime, RegimeConfig};
pub use losses::{
    adversarial_loss, adversarial_perturbation, gen_vadv, pi_loss, regime_loss, supervised_loss, vat_loss, LossTerms,
};
pub use text::{standardize_embeddings, text_perturb};
