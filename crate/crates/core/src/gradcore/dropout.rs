use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::ops::dropout_mask;
use super::{Graph, Scalar, Var};

/// Dropout masks for one or more forward passes.
///
/// Masks are drawn on first use and replayed after [`Dropout::rewind`], so
/// two forward passes through the same network see identical masks.
#[derive(Clone, Debug)]
pub struct Dropout<T> {
    rate: f64,
    training: bool,
    rng: ChaCha8Rng,
    masks: Vec<Option<Vec<T>>>,
    cursor: usize,
}

impl<T: Scalar> Dropout<T> {
    pub fn train(rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidRate(rate));
        }
        Ok(Self {
            rate,
            training: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
            masks: Vec::new(),
            cursor: 0,
        })
    }

    /// Identity at every site.
    pub fn eval() -> Self {
        Self {
            rate: 0.0,
            training: false,
            rng: ChaCha8Rng::seed_from_u64(0),
            masks: Vec::new(),
            cursor: 0,
        }
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Replays the recorded masks from the first site on the next pass.
    pub fn rewind(&mut self) {
        self.cursor = 0;
    }

    pub fn apply(&mut self, g: &mut Graph<'_, T>, x: Var) -> Result<Var> {
        if !self.training || self.rate == 0.0 {
            return Ok(x);
        }
        let n = g.value(x).len();
        let site = self.cursor;
        self.cursor += 1;
        let reuse = matches!(self.masks.get(site), Some(Some(m)) if m.len() == n);
        if !reuse {
            let mask = dropout_mask(n, self.rate, &mut self.rng)?;
            if site < self.masks.len() {
                self.masks[site] = mask;
            } else {
                self.masks.push(mask);
            }
        }
        match &self.masks[site] {
            Some(m) => g.mul_const(x, m.clone()),
            None => Ok(x),
        }
    }
}
