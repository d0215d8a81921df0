use crate::error::{Error, Result};

use super::Scalar;

/// Floor on the L2 norm used by [`Tensor::l2_normalize`].
pub const NORM_FLOOR: f64 = 1e-12;

/// Dense row-major tensor with an optional gradient slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
    requires_grad: bool,
    grad: Option<Vec<T>>,
}

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<T>) -> Result<Self> {
        let shape = shape.into();
        if numel(&shape) != data.len() {
            return Err(Error::InvalidShape {
                op: "tensor",
                shape,
                reason: format!("buffer holds {} elements", data.len()),
            });
        }
        Ok(Self {
            shape,
            data,
            requires_grad: false,
            grad: None,
        })
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        Self::full(shape, T::zero())
    }

    pub fn full(shape: impl Into<Vec<usize>>, value: T) -> Self {
        let shape = shape.into();
        let data = vec![value; numel(&shape)];
        Self {
            shape,
            data,
            requires_grad: false,
            grad: None,
        }
    }

    pub fn scalar(value: T) -> Self {
        Self::full(Vec::new(), value)
    }

    /// Builds a tensor from `f64` values, converting to `T`.
    pub fn from_f64(shape: impl Into<Vec<usize>>, values: &[f64]) -> Result<Self> {
        Self::new(shape, values.iter().map(|&v| T::lit(v)).collect())
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.shape.clone())
    }

    /// Marks the tensor as trainable and allocates a zeroed gradient slot.
    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self.grad = Some(vec![T::zero(); self.data.len()]);
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn grad(&self) -> Option<&[T]> {
        self.grad.as_deref()
    }

    pub fn grad_mut(&mut self) -> Option<&mut [T]> {
        self.grad.as_deref_mut()
    }

    /// Resets the gradient to zero, allocating it if this tensor requires one.
    pub fn zero_grad(&mut self) {
        match &mut self.grad {
            Some(g) => g.iter_mut().for_each(|v| *v = T::zero()),
            None if self.requires_grad => self.grad = Some(vec![T::zero(); self.data.len()]),
            None => {}
        }
    }

    /// Adds `delta` into the gradient slot.
    pub fn accumulate_grad(&mut self, delta: &[T]) -> Result<()> {
        if delta.len() != self.data.len() {
            return Err(Error::ShapeMismatch {
                op: "accumulate_grad",
                left: self.shape.clone(),
                right: vec![delta.len()],
            });
        }
        let grad = self.grad.get_or_insert_with(|| vec![T::zero(); delta.len()]);
        for (g, &d) in grad.iter_mut().zip(delta) {
            *g += d;
        }
        Ok(())
    }

    pub fn reshape(mut self, shape: impl Into<Vec<usize>>) -> Result<Self> {
        let shape = shape.into();
        if numel(&shape) != self.data.len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                left: self.shape,
                right: shape,
            });
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn l2_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// `v / max(|v|, 1e-12)`; the zero vector maps to itself.
    pub fn l2_normalize(&self) -> Self {
        let mut out = self.detached();
        normalize_in_place(&mut out.data);
        out
    }

    /// Normalizes each slice along the leading axis independently.
    pub fn l2_normalize_per_example(&self) -> Self {
        let mut out = self.detached();
        let width = self.shape.first().and_then(|&rows| self.data.len().checked_div(rows));
        if let Some(width) = width.filter(|&w| w > 0) {
            out.data.chunks_mut(width).for_each(normalize_in_place);
        }
        out
    }

    /// L2 norm of each slice along the leading axis.
    pub fn per_example_norms(&self) -> Vec<T> {
        let rows = self.shape.first().copied().unwrap_or(1).max(1);
        let width = self.data.len() / rows;
        if width == 0 {
            return vec![T::zero(); rows];
        }
        self.data
            .chunks(width)
            .map(|c| c.iter().map(|&v| v * v).sum::<T>().sqrt())
            .collect()
    }

    pub fn scale(&self, factor: T) -> Self {
        let mut out = self.detached();
        out.data.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Copy of the values without the gradient slot.
    pub fn detached(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.clone(),
            requires_grad: false,
            grad: None,
        }
    }

    /// Converts element type, e.g. to run an `f32` model's inputs through an `f64` check.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::lit(v.as_f64())).collect(),
            requires_grad: self.requires_grad,
            grad: self
                .grad
                .as_ref()
                .map(|g| g.iter().map(|&v| U::lit(v.as_f64())).collect()),
        }
    }

    /// Row-wise argmax of a 2-D tensor; ties resolve to the lowest index.
    pub fn argmax_rows(&self) -> Vec<usize> {
        let cols = self.shape.last().copied().unwrap_or(1).max(1);
        self.data
            .chunks(cols)
            .map(|row| {
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

fn normalize_in_place<T: Scalar>(v: &mut [T]) {
    let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    let denom = norm.max(T::lit(NORM_FLOOR));
    v.iter_mut().for_each(|x| *x /= denom);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_three_four_five() {
        let v = Tensor::<f64>::from_f64([2], &[3.0, 4.0]).unwrap();
        let n = v.l2_normalize();
        assert!((n.data()[0] - 0.6).abs() < 1e-15);
        assert!((n.data()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_stays_zero() {
        let v = Tensor::<f64>::zeros([2]);
        assert_eq!(v.l2_normalize().data(), &[0.0, 0.0]);
    }

    #[test]
    fn per_example_normalization() {
        let v = Tensor::<f64>::from_f64([2, 2], &[3.0, 4.0, 0.0, 0.0]).unwrap();
        let n = v.l2_normalize_per_example();
        assert_eq!(n.per_example_norms(), vec![1.0, 0.0]);
    }

    #[test]
    fn rejects_bad_buffer() {
        assert!(Tensor::<f32>::new([2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        let t = Tensor::<f32>::from_f64([2, 3], &[1.0, 1.0, 0.0, 0.0, 2.0, 2.0]).unwrap();
        assert_eq!(t.argmax_rows(), vec![0, 1]);
    }
}
