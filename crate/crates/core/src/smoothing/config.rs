use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    Sup,
    At,
    Pi,
    Vat,
    AtVat,
}

impl Regime {
    pub const ALL: [Regime; 5] = [Regime::Sup, Regime::At, Regime::Pi, Regime::Vat, Regime::AtVat];

    /// Whether the regime reads unlabeled documents.
    pub fn uses_unlabeled(self) -> bool {
        matches!(self, Regime::Pi | Regime::Vat | Regime::AtVat)
    }

    /// Config spelling, e.g. `AT_VAT`.
    pub fn key(self) -> &'static str {
        match self {
            Regime::Sup => "SUP",
            Regime::At => "AT",
            Regime::Pi => "PI",
            Regime::Vat => "VAT",
            Regime::AtVat => "AT_VAT",
        }
    }

    pub fn parse(s: &str) -> Option<Regime> {
        let norm = s.trim().to_ascii_uppercase().replace(['+', '-'], "_");
        Regime::ALL.into_iter().find(|r| r.key() == norm)
    }
}

/// Table spelling: `Sup`, `AT`, `Pi`, `VAT`, `AT+VAT`.
impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Regime::Sup => "Sup",
            Regime::At => "AT",
            Regime::Pi => "Pi",
            Regime::Vat => "VAT",
            Regime::AtVat => "AT+VAT",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeConfig {
    pub regime: Regime,
    /// L2 radius of the perturbation per example.
    pub epsilon: f64,
    /// Weight of the clean term in the adversarial loss.
    pub alpha: f64,
    /// Finite-difference probe size of the power iteration.
    pub xi: f64,
    pub power_iterations: usize,
    /// Weight of the MSE (Pi) or KL (VAT) consistency term.
    pub lambda_consistency: f64,
    /// Weight of the entropy of unlabeled predictions.
    pub lambda_entropy: f64,
    pub unk_rate: f64,
    pub swap_rate: f64,
    /// Standardize the embedding table once before training.
    pub normalize_embeddings: bool,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        Self {
            regime: Regime::Sup,
            epsilon: 2.0,
            alpha: 0.5,
            xi: 0.1,
            power_iterations: 1,
            lambda_consistency: 1.0,
            lambda_entropy: 1.0,
            unk_rate: 0.1,
            swap_rate: 0.1,
            normalize_embeddings: false,
        }
    }
}

impl RegimeConfig {
    pub fn new(regime: Regime) -> Self {
        Self {
            regime,
            ..Default::default()
        }
    }

    /// Checks the ranges a config file may use. The loss functions
    /// themselves also accept `epsilon = 0`.
    pub fn validate(&self) -> Result<()> {
        let perturbs = matches!(self.regime, Regime::At | Regime::Vat | Regime::AtVat);
        if perturbs && !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("regime.epsilon", "must be positive for AT and VAT"));
        }
        self.check_ranges()
    }

    pub(crate) fn check_ranges(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("regime.epsilon", "must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("regime.alpha", "must be in [0, 1]"));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::config("regime.xi", "must be positive"));
        }
        if self.power_iterations == 0 {
            return Err(Error::config("regime.power_iterations", "must be at least 1"));
        }
        for (field, v) in [
            ("regime.lambda_consistency", self.lambda_consistency),
            ("regime.lambda_entropy", self.lambda_entropy),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be finite and non-negative"));
            }
        }
        for (field, v) in [("regime.unk_rate", self.unk_rate), ("regime.swap_rate", self.swap_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(field, "must be in [0, 1]"));
            }
        }
        Ok(())
    }
}
