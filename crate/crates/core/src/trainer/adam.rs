use crate::encoders::ParamStore;
use crate::error::{Error, Result};
use crate::gradcore::Scalar;

/// Adam with bias correction and no learning-rate schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Updates every trainable tensor from its gradient, then zeroes the gradients.
    pub fn step(&mut self, params: &mut ParamStore<T>) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![T::zero(); p.tensor.numel()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(Error::InvalidShape {
                op: "adam_step",
                shape: vec![params.len()],
                reason: format!("optimizer was built for {} tensors", self.m.len()),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::lit(self.beta1), T::lit(self.beta2));
        let c1 = T::lit(1.0 - self.beta1.powi(t));
        let c2 = T::lit(1.0 - self.beta2.powi(t));
        let (lr, eps) = (T::lit(self.learning_rate), T::lit(self.eps));
        for (i, p) in params.iter_mut().enumerate() {
            if !p.tensor.requires_grad() {
                continue;
            }
            let g = p
                .tensor
                .grad()
                .ok_or_else(|| Error::MissingGradient(p.name.clone()))?
                .to_vec();
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (j, w) in p.tensor.data_mut().iter_mut().enumerate() {
                m[j] = b1 * m[j] + (T::one() - b1) * g[j];
                v[j] = b2 * v[j] + (T::one() - b2) * g[j] * g[j];
                let mhat = m[j] / c1;
                let vhat = v[j] / c2;
                *w -= lr * mhat / (vhat.sqrt() + eps);
            }
            p.tensor.zero_grad();
        }
        Ok(())
    }
}
