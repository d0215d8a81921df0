//! Softmax, cross entropy and the divergences between output distributions.

use crate::error::{Error, Result};

use super::graph::{Graph, Op, Var, PROB_FLOOR};
use super::Scalar;

impl<T: Scalar> Graph<'_, T> {
    fn rows_cols(&self, op: &'static str, x: Var) -> Result<(usize, usize)> {
        match self.shape(x) {
            &[b, k] if k > 0 => Ok((b, k)),
            s => Err(Error::InvalidShape {
                op,
                shape: s.to_vec(),
                reason: "expected [batch, classes]".into(),
            }),
        }
    }

    /// Row-wise softmax of `[b, k]` logits, stabilized by max subtraction.
    pub fn softmax(&mut self, logits: Var) -> Result<Var> {
        let (b, k) = self.rows_cols("softmax", logits)?;
        let out = softmax_rows(self.value(logits), k);
        Ok(self.push(vec![b, k], out, Op::Softmax(logits)))
    }

    /// Mean over the batch of `-log softmax(logits)[label]`.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let (b, k) = self.rows_cols("cross_entropy", logits)?;
        if labels.len() != b {
            return Err(Error::ShapeMismatch {
                op: "cross_entropy",
                left: vec![b, k],
                right: vec![labels.len()],
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::LabelOutOfRange { label: bad, classes: k });
        }
        let lv = self.value(logits);
        let mut total = T::zero();
        for (row, &y) in lv.chunks(k).zip(labels) {
            let m = row.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = row.iter().map(|&v| (v - m).exp()).sum::<T>().ln() + m;
            total += lse - row[y];
        }
        let probs = softmax_rows(lv, k);
        let loss = total / T::lit(b.max(1) as f64);
        Ok(self.push(
            Vec::new(),
            vec![loss],
            Op::CrossEntropy {
                logits,
                probs,
                labels: labels.to_vec(),
            },
        ))
    }

    fn check_distribution(&self, op: &'static str, x: Var) -> Result<(usize, usize)> {
        let (b, k) = self.rows_cols(op, x)?;
        let tol = 1e-6 + k as f64 * T::epsilon().as_f64();
        for (row, vals) in self.value(x).chunks(k).enumerate() {
            let sum = vals.iter().copied().sum::<T>().as_f64();
            if (sum - 1.0).abs() > tol || vals.iter().any(|v| v.is_nan()) {
                return Err(Error::NotNormalized { op, row, sum });
            }
        }
        Ok((b, k))
    }

    /// `mean_b sum_i p_i log(p_i / q_i)` with both arguments floored at 1e-8.
    /// `p` is treated as a constant; the gradient flows into `q` only.
    pub fn kl_divergence(&mut self, p: Var, q: Var) -> Result<Var> {
        let (b, _) = self.check_distribution("kl_divergence", p)?;
        self.check_distribution("kl_divergence", q)?;
        if self.shape(p) != self.shape(q) {
            return Err(Error::ShapeMismatch {
                op: "kl_divergence",
                left: self.shape(p).to_vec(),
                right: self.shape(q).to_vec(),
            });
        }
        let floor = T::lit(PROB_FLOOR);
        let total: T = self
            .value(p)
            .iter()
            .zip(self.value(q))
            .map(|(&pi, &qi)| pi * (pi.max(floor).ln() - qi.max(floor).ln()))
            .sum();
        let v = total / T::lit(b.max(1) as f64);
        Ok(self.push(Vec::new(), vec![v], Op::Kld { p, q }))
    }

    /// Mean of squared elementwise differences; differentiable in both arguments.
    pub fn mse(&mut self, p: Var, q: Var) -> Result<Var> {
        self.check_distribution("mse", p)?;
        self.check_distribution("mse", q)?;
        if self.shape(p) != self.shape(q) {
            return Err(Error::ShapeMismatch {
                op: "mse",
                left: self.shape(p).to_vec(),
                right: self.shape(q).to_vec(),
            });
        }
        let (pv, qv) = (self.value(p), self.value(q));
        let total: T = pv.iter().zip(qv).map(|(&a, &b)| (a - b) * (a - b)).sum();
        let v = total / T::lit(pv.len().max(1) as f64);
        Ok(self.push(Vec::new(), vec![v], Op::Mse(p, q)))
    }

    /// Mean over the batch of `-sum_i p_i log p_i`.
    pub fn entropy(&mut self, p: Var) -> Result<Var> {
        let (b, _) = self.check_distribution("entropy", p)?;
        let floor = T::lit(PROB_FLOOR);
        let total: T = self.value(p).iter().map(|&pi| -pi * pi.max(floor).ln()).sum();
        let v = total / T::lit(b.max(1) as f64);
        Ok(self.push(Vec::new(), vec![v], Op::Entropy(p)))
    }
}

pub(crate) fn softmax_rows<T: Scalar>(logits: &[T], k: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks(k) {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let start = out.len();
        let mut z = T::zero();
        for &v in row {
            let e = (v - m).exp();
            z += e;
            out.push(e);
        }
        out[start..].iter_mut().for_each(|e| *e /= z);
    }
    out
}
