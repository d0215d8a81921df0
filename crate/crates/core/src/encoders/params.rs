use rand::Rng;

use crate::error::{Error, Result};
use crate::gradcore::{Graph, Scalar, Tensor, Var};

/// Named trainable tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub tensor: Tensor<T>,
}

/// Ordered collection of a model's tensors. A parameter's position is its
/// key when registered on a [`Graph`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self { params: Vec::new() }
    }

    /// Adds a tensor; `trainable` allocates its gradient slot.
    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor<T>, trainable: bool) -> usize {
        let tensor = if trainable { tensor.with_grad() } else { tensor };
        self.params.push(Param {
            name: name.into(),
            tensor,
        });
        self.params.len() - 1
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param<T>> {
        self.params.iter_mut()
    }

    pub fn get(&self, key: usize) -> &Param<T> {
        &self.params[key]
    }

    pub fn get_mut(&mut self, key: usize) -> &mut Param<T> {
        &mut self.params[key]
    }

    pub fn find(&self, name: &str) -> Option<&Param<T>> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn find_mut(&mut self, name: &str) -> Option<&mut Param<T>> {
        self.params.iter_mut().find(|p| p.name == name)
    }

    /// Registers parameter `key` on the graph.
    pub fn leaf<'a>(&'a self, g: &mut Graph<'a, T>, key: usize) -> Var {
        g.param(key, &self.params[key].tensor)
    }

    /// Number of scalar values across trainable tensors whose name does not start with `exclude_prefix`.
    pub fn trainable_count(&self, exclude_prefix: &str) -> usize {
        self.params
            .iter()
            .filter(|p| p.tensor.requires_grad() && !p.name.starts_with(exclude_prefix))
            .map(|p| p.tensor.numel())
            .sum()
    }

    pub fn zero_grad(&mut self) {
        self.params.iter_mut().for_each(|p| p.tensor.zero_grad());
    }

    /// Adds gradients collected from a graph.
    pub fn accumulate(&mut self, grads: &[(usize, Vec<T>)]) -> Result<()> {
        for (key, g) in grads {
            let p = self
                .params
                .get_mut(*key)
                .ok_or_else(|| Error::MissingGradient(format!("#{key}")))?;
            if p.tensor.requires_grad() {
                p.tensor.accumulate_grad(g)?;
            }
        }
        Ok(())
    }

    /// Copies values (not gradients) from another store with the same layout.
    pub fn load_values(&mut self, other: &ParamStore<T>) -> Result<()> {
        if other.params.len() != self.params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                self.params.len(),
                other.params.len()
            )));
        }
        for (dst, src) in self.params.iter_mut().zip(&other.params) {
            if dst.name != src.name || dst.tensor.shape() != src.tensor.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor `{}` {:?} does not match `{}` {:?}",
                    src.name,
                    src.tensor.shape(),
                    dst.name,
                    dst.tensor.shape()
                )));
            }
            dst.tensor.data_mut().copy_from_slice(src.tensor.data());
        }
        Ok(())
    }

    /// Values only, for keeping the best checkpoint during training.
    pub fn snapshot(&self) -> ParamStore<T> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    tensor: p.tensor.detached(),
                })
                .collect(),
        }
    }
}

/// Glorot-uniform `[fan_in, fan_out]` matrix.
pub fn glorot<T: Scalar, R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| T::lit(rng.random_range(-limit..=limit)))
        .collect();
    Tensor::new([fan_in, fan_out], data).expect("sized buffer")
}
