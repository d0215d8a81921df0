use std::collections::HashMap;

use crate::error::{Error, Result};

use super::tensor::numel;
use super::{Scalar, Tensor};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

pub(crate) enum Value<'a, T> {
    Owned(Vec<T>),
    Borrowed(&'a [T]),
}

impl<T> Value<'_, T> {
    fn as_slice(&self) -> &[T] {
        match self {
            Value::Owned(v) => v,
            Value::Borrowed(s) => s,
        }
    }
}

/// Recorded operation; the operands of every node precede it.
pub(crate) enum Op<T> {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Maximum(Var, Var),
    Neg(Var),
    Scale(Var, T),
    Exp(Var),
    Log(Var),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    MulConst(Var, Vec<T>),
    MatMul(Var, Var),
    AddBias(Var, Var),
    Sum(Var),
    Mean(Var),
    SumAxis {
        x: Var,
        outer: usize,
        len: usize,
        inner: usize,
        mean: bool,
    },
    MaxAxis {
        x: Var,
        len: usize,
        inner: usize,
        argmax: Vec<usize>,
    },
    Reshape(Var),
    SelectTime {
        x: Var,
        t: usize,
    },
    StackTime(Vec<Var>),
    SliceCols {
        x: Var,
        start: usize,
    },
    ConcatCols(Vec<Var>),
    WhereRows {
        a: Var,
        b: Var,
        mask: Vec<bool>,
    },
    MaskedMeanTime {
        x: Var,
        lengths: Vec<usize>,
    },
    MaskedMaxTime {
        x: Var,
        argmax: Vec<usize>,
    },
    Unfold {
        x: Var,
        width: usize,
        stride: usize,
        pad: usize,
        windows: usize,
        lengths: Vec<usize>,
    },
    Gather {
        table: Var,
        ids: Vec<usize>,
    },
    Softmax(Var),
    CrossEntropy {
        logits: Var,
        probs: Vec<T>,
        labels: Vec<usize>,
    },
    Kld {
        p: Var,
        q: Var,
    },
    Mse(Var, Var),
    Entropy(Var),
}

pub(crate) struct Node<'a, T> {
    pub(crate) shape: Vec<usize>,
    pub(crate) value: Value<'a, T>,
    pub(crate) op: Op<T>,
    pub(crate) requires_grad: bool,
    grad: Option<Vec<T>>,
}

/// Tape of tensor operations supporting reverse-mode differentiation.
///
/// Parameters are borrowed for the lifetime `'a` instead of copied; their
/// gradients are collected with [`Graph::param_grads`] after a backward pass.
pub struct Graph<'a, T> {
    pub(crate) nodes: Vec<Node<'a, T>>,
    params: Vec<(usize, Var)>,
    param_lookup: HashMap<usize, Var>,
}

impl<T: Scalar> Default for Graph<'_, T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Probability floor used by the divergence losses.
pub const PROB_FLOOR: f64 = 1e-8;

impl<'a, T: Scalar> Graph<'a, T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            params: Vec::new(),
            param_lookup: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn push(&mut self, shape: Vec<usize>, data: Vec<T>, op: Op<T>) -> Var {
        debug_assert_eq!(numel(&shape), data.len());
        let requires_grad = self.op_requires_grad(&op);
        self.nodes.push(Node {
            shape,
            value: Value::Owned(data),
            op,
            requires_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn op_requires_grad(&self, op: &Op<T>) -> bool {
        let rg = |v: &Var| self.nodes[v.0].requires_grad;
        match op {
            Op::Leaf => false,
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Maximum(a, b) => rg(a) || rg(b),
            Op::MatMul(a, b) | Op::AddBias(a, b) | Op::Mse(a, b) => rg(a) || rg(b),
            Op::WhereRows { a, b, .. } => rg(a) || rg(b),
            Op::StackTime(vs) | Op::ConcatCols(vs) => vs.iter().any(rg),
            Op::Kld { q, .. } => rg(q),
            Op::Gather { table, .. } => rg(table),
            Op::CrossEntropy { logits, .. } => rg(logits),
            Op::Neg(x)
            | Op::Scale(x, _)
            | Op::Exp(x)
            | Op::Log(x)
            | Op::Tanh(x)
            | Op::Sigmoid(x)
            | Op::Relu(x)
            | Op::MulConst(x, _)
            | Op::Sum(x)
            | Op::Mean(x)
            | Op::Reshape(x)
            | Op::Softmax(x)
            | Op::Entropy(x) => rg(x),
            Op::SumAxis { x, .. }
            | Op::MaxAxis { x, .. }
            | Op::SelectTime { x, .. }
            | Op::SliceCols { x, .. }
            | Op::MaskedMeanTime { x, .. }
            | Op::MaskedMaxTime { x, .. }
            | Op::Unfold { x, .. } => rg(x),
        }
    }

    /// Non-differentiable leaf.
    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        let shape = t.shape().to_vec();
        self.push(shape, t.into_data(), Op::Leaf)
    }

    /// Differentiable leaf whose gradient is kept after [`Graph::backward`].
    pub fn input(&mut self, t: Tensor<T>) -> Var {
        let v = self.constant(t);
        self.nodes[v.0].requires_grad = true;
        v
    }

    /// Registers a parameter by key; repeated calls with the same key return the same node.
    /// The leaf is differentiable iff the tensor requires a gradient.
    pub fn param(&mut self, key: usize, t: &'a Tensor<T>) -> Var {
        if let Some(&v) = self.param_lookup.get(&key) {
            return v;
        }
        self.nodes.push(Node {
            shape: t.shape().to_vec(),
            value: Value::Borrowed(t.data()),
            op: Op::Leaf,
            requires_grad: t.requires_grad(),
            grad: None,
        });
        let v = Var(self.nodes.len() - 1);
        self.params.push((key, v));
        self.param_lookup.insert(key, v);
        v
    }

    pub fn value(&self, v: Var) -> &[T] {
        self.nodes[v.0].value.as_slice()
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Owned copy of a node's value.
    pub fn tensor(&self, v: Var) -> Tensor<T> {
        Tensor::new(self.shape(v).to_vec(), self.value(v).to_vec()).expect("node shape matches its buffer")
    }

    /// Scalar value of a one-element node.
    pub fn scalar(&self, v: Var) -> T {
        self.value(v)[0]
    }

    /// Accumulated gradient of a differentiable leaf.
    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn grad_tensor(&self, v: Var) -> Option<Tensor<T>> {
        self.grad(v)
            .map(|g| Tensor::new(self.shape(v).to_vec(), g.to_vec()).expect("grad shape"))
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    /// Gradients of every registered parameter that received one, keyed as in [`Graph::param`].
    pub fn param_grads(&self) -> Vec<(usize, Vec<T>)> {
        self.params
            .iter()
            .filter_map(|&(key, v)| self.nodes[v.0].grad.clone().map(|g| (key, g)))
            .collect()
    }

    /// Reverse sweep from a scalar loss. Gradients are added to the leaves'
    /// existing gradients; call [`Graph::zero_grad`] to reset.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let shape = self.shape(loss).to_vec();
        if numel(&shape) != 1 {
            return Err(Error::NonScalarLoss { shape });
        }
        let mut adj: Vec<Option<Vec<T>>> = (0..=loss.0).map(|_| None).collect();
        adj[loss.0] = Some(vec![T::one()]);
        let mut leaf_grads = Vec::new();
        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            if let Op::Leaf = self.nodes[i].op {
                leaf_grads.push((i, g));
            } else {
                self.propagate(i, &g, &mut adj);
            }
        }
        for (i, g) in leaf_grads {
            match &mut self.nodes[i].grad {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, &d)| *a += d),
                slot @ None => *slot = Some(g),
            }
        }
        Ok(())
    }

    fn slot<'s>(&self, adj: &'s mut [Option<Vec<T>>], v: Var) -> Option<&'s mut Vec<T>> {
        if !self.nodes[v.0].requires_grad {
            return None;
        }
        let n = self.value(v).len();
        Some(adj[v.0].get_or_insert_with(|| vec![T::zero(); n]))
    }

    /// Adds `g` (shaped like node `out`) into the adjoint of `v`, summing when `v` is a broadcast scalar.
    fn add_broadcast(&self, adj: &mut [Option<Vec<T>>], v: Var, g: &[T], scale: impl Fn(usize) -> T) {
        let n = self.value(v).len();
        if let Some(s) = self.slot(adj, v) {
            if n == g.len() {
                for (i, a) in s.iter_mut().enumerate() {
                    *a += g[i] * scale(i);
                }
            } else {
                s[0] += g.iter().enumerate().map(|(i, &gi)| gi * scale(i)).sum::<T>();
            }
        }
    }

    fn propagate(&self, i: usize, g: &[T], adj: &mut [Option<Vec<T>>]) {
        let out = self.nodes[i].value.as_slice();
        let at = |v: Var, k: usize| {
            let s = self.value(v);
            if s.len() == 1 {
                s[0]
            } else {
                s[k]
            }
        };
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.add_broadcast(adj, *a, g, |_| T::one());
                self.add_broadcast(adj, *b, g, |_| T::one());
            }
            Op::Sub(a, b) => {
                self.add_broadcast(adj, *a, g, |_| T::one());
                self.add_broadcast(adj, *b, g, |_| -T::one());
            }
            Op::Mul(a, b) => {
                self.add_broadcast(adj, *a, g, |k| at(*b, k));
                self.add_broadcast(adj, *b, g, |k| at(*a, k));
            }
            Op::Maximum(a, b) => {
                let pick_a = |k: usize| at(*a, k) >= at(*b, k);
                self.add_broadcast(adj, *a, g, |k| if pick_a(k) { T::one() } else { T::zero() });
                self.add_broadcast(adj, *b, g, |k| if pick_a(k) { T::zero() } else { T::one() });
            }
            Op::Neg(x) => self.add_broadcast(adj, *x, g, |_| -T::one()),
            Op::Scale(x, c) => self.add_broadcast(adj, *x, g, |_| *c),
            Op::Exp(x) => self.add_broadcast(adj, *x, g, |k| out[k]),
            Op::Log(x) => {
                let xv = self.value(*x);
                self.add_broadcast(adj, *x, g, |k| T::one() / xv[k]);
            }
            Op::Tanh(x) => self.add_broadcast(adj, *x, g, |k| T::one() - out[k] * out[k]),
            Op::Sigmoid(x) => self.add_broadcast(adj, *x, g, |k| out[k] * (T::one() - out[k])),
            Op::Relu(x) => {
                let xv = self.value(*x);
                self.add_broadcast(adj, *x, g, |k| if xv[k] > T::zero() { T::one() } else { T::zero() });
            }
            Op::MulConst(x, m) => self.add_broadcast(adj, *x, g, |k| m[k]),
            Op::MatMul(a, b) => {
                let (m, kdim) = (self.shape(*a)[0], self.shape(*a)[1]);
                let n = self.shape(*b)[1];
                let av = self.value(*a);
                let bv = self.value(*b);
                if let Some(da) = self.slot(adj, *a) {
                    for r in 0..m {
                        let grow = &g[r * n..(r + 1) * n];
                        for p in 0..kdim {
                            let brow = &bv[p * n..(p + 1) * n];
                            let mut acc = T::zero();
                            for j in 0..n {
                                acc += grow[j] * brow[j];
                            }
                            da[r * kdim + p] += acc;
                        }
                    }
                }
                if let Some(db) = self.slot(adj, *b) {
                    for r in 0..m {
                        let grow = &g[r * n..(r + 1) * n];
                        for p in 0..kdim {
                            let a_rp = av[r * kdim + p];
                            if a_rp == T::zero() {
                                continue;
                            }
                            let drow = &mut db[p * n..(p + 1) * n];
                            for j in 0..n {
                                drow[j] += a_rp * grow[j];
                            }
                        }
                    }
                }
            }
            Op::AddBias(x, bias) => {
                self.add_broadcast(adj, *x, g, |_| T::one());
                let n = self.value(*bias).len();
                if let Some(db) = self.slot(adj, *bias) {
                    for row in g.chunks(n) {
                        for (d, &v) in db.iter_mut().zip(row) {
                            *d += v;
                        }
                    }
                }
            }
            Op::Sum(x) => {
                if let Some(dx) = self.slot(adj, *x) {
                    dx.iter_mut().for_each(|d| *d += g[0]);
                }
            }
            Op::Mean(x) => {
                if let Some(dx) = self.slot(adj, *x) {
                    let c = g[0] / T::lit(dx.len() as f64);
                    dx.iter_mut().for_each(|d| *d += c);
                }
            }
            Op::SumAxis {
                x,
                outer,
                len,
                inner,
                mean,
            } => {
                let c = if *mean {
                    T::one() / T::lit(*len as f64)
                } else {
                    T::one()
                };
                if let Some(dx) = self.slot(adj, *x) {
                    for o in 0..*outer {
                        for l in 0..*len {
                            for j in 0..*inner {
                                dx[(o * len + l) * inner + j] += g[o * inner + j] * c;
                            }
                        }
                    }
                }
            }
            Op::MaxAxis { x, len, inner, argmax } => {
                if let Some(dx) = self.slot(adj, *x) {
                    for (k, &am) in argmax.iter().enumerate() {
                        let (o, j) = (k / inner, k % inner);
                        dx[(o * len + am) * inner + j] += g[k];
                    }
                }
            }
            Op::Reshape(x) => self.add_broadcast(adj, *x, g, |_| T::one()),
            Op::SelectTime { x, t } => {
                let s = self.shape(*x);
                let (b, tt, f) = (s[0], s[1], s[2]);
                if let Some(dx) = self.slot(adj, *x) {
                    for r in 0..b {
                        let base = (r * tt + t) * f;
                        for j in 0..f {
                            dx[base + j] += g[r * f + j];
                        }
                    }
                }
            }
            Op::StackTime(vs) => {
                let tt = vs.len();
                let s = self.shape(vs[0]);
                let (b, f) = (s[0], s[1]);
                for (t, v) in vs.iter().enumerate() {
                    if let Some(dv) = self.slot(adj, *v) {
                        for r in 0..b {
                            let base = (r * tt + t) * f;
                            for j in 0..f {
                                dv[r * f + j] += g[base + j];
                            }
                        }
                    }
                }
            }
            Op::SliceCols { x, start } => {
                let cols = self.shape(*x)[1];
                let width = self.nodes[i].shape[1];
                if let Some(dx) = self.slot(adj, *x) {
                    for (r, grow) in g.chunks(width).enumerate() {
                        for (j, &v) in grow.iter().enumerate() {
                            dx[r * cols + start + j] += v;
                        }
                    }
                }
            }
            Op::ConcatCols(vs) => {
                let total = self.nodes[i].shape[1];
                let mut offset = 0;
                for v in vs {
                    let w = self.shape(*v)[1];
                    if let Some(dv) = self.slot(adj, *v) {
                        for (r, grow) in g.chunks(total).enumerate() {
                            for j in 0..w {
                                dv[r * w + j] += grow[offset + j];
                            }
                        }
                    }
                    offset += w;
                }
            }
            Op::WhereRows { a, b, mask } => {
                let f = self.nodes[i].shape[1];
                if let Some(da) = self.slot(adj, *a) {
                    for (r, &m) in mask.iter().enumerate() {
                        if m {
                            for j in 0..f {
                                da[r * f + j] += g[r * f + j];
                            }
                        }
                    }
                }
                if let Some(db) = self.slot(adj, *b) {
                    for (r, &m) in mask.iter().enumerate() {
                        if !m {
                            for j in 0..f {
                                db[r * f + j] += g[r * f + j];
                            }
                        }
                    }
                }
            }
            Op::MaskedMeanTime { x, lengths } => {
                let s = self.shape(*x);
                let (tt, f) = (s[1], s[2]);
                if let Some(dx) = self.slot(adj, *x) {
                    for (r, &len) in lengths.iter().enumerate() {
                        let c = T::one() / T::lit(len as f64);
                        for t in 0..len {
                            let base = (r * tt + t) * f;
                            for j in 0..f {
                                dx[base + j] += g[r * f + j] * c;
                            }
                        }
                    }
                }
            }
            Op::MaskedMaxTime { x, argmax } => {
                let s = self.shape(*x);
                let (tt, f) = (s[1], s[2]);
                if let Some(dx) = self.slot(adj, *x) {
                    for (k, &t) in argmax.iter().enumerate() {
                        let (r, j) = (k / f, k % f);
                        dx[(r * tt + t) * f + j] += g[k];
                    }
                }
            }
            Op::Unfold {
                x,
                width,
                stride,
                pad,
                windows,
                lengths,
            } => {
                let s = self.shape(*x);
                let (tt, d) = (s[1], s[2]);
                let cols = width * d;
                if let Some(dx) = self.slot(adj, *x) {
                    for (r, &len) in lengths.iter().enumerate() {
                        for w in 0..*windows {
                            let row = (r * windows + w) * cols;
                            for k in 0..*width {
                                let pos = (w * stride + k) as isize - *pad as isize;
                                if pos < 0 || pos as usize >= len {
                                    continue;
                                }
                                let src = (r * tt + pos as usize) * d;
                                for j in 0..d {
                                    dx[src + j] += g[row + k * d + j];
                                }
                            }
                        }
                    }
                }
            }
            Op::Gather { table, ids } => {
                let d = self.shape(*table)[1];
                if let Some(dt) = self.slot(adj, *table) {
                    for (r, &id) in ids.iter().enumerate() {
                        for j in 0..d {
                            dt[id * d + j] += g[r * d + j];
                        }
                    }
                }
            }
            Op::Softmax(x) => {
                let k = *self.nodes[i].shape.last().unwrap();
                if let Some(dx) = self.slot(adj, *x) {
                    for (r, (yrow, grow)) in out.chunks(k).zip(g.chunks(k)).enumerate() {
                        let dot: T = yrow.iter().zip(grow).map(|(&y, &gg)| y * gg).sum();
                        for j in 0..k {
                            dx[r * k + j] += yrow[j] * (grow[j] - dot);
                        }
                    }
                }
            }
            Op::CrossEntropy { logits, probs, labels } => {
                let k = self.shape(*logits)[1];
                let c = g[0] / T::lit(labels.len() as f64);
                if let Some(dx) = self.slot(adj, *logits) {
                    for (r, &y) in labels.iter().enumerate() {
                        for j in 0..k {
                            let onehot = if j == y { T::one() } else { T::zero() };
                            dx[r * k + j] += (probs[r * k + j] - onehot) * c;
                        }
                    }
                }
            }
            Op::Kld { p, q } => {
                let b = self.shape(*q)[0];
                let floor = T::lit(PROB_FLOOR);
                let pv = self.value(*p);
                let qv = self.value(*q);
                let c = g[0] / T::lit(b as f64);
                if let Some(dq) = self.slot(adj, *q) {
                    for k in 0..qv.len() {
                        if qv[k] > floor {
                            dq[k] -= c * pv[k] / qv[k];
                        }
                    }
                }
            }
            Op::Mse(a, b) => {
                let av = self.value(*a);
                let bv = self.value(*b);
                let c = T::lit(2.0) * g[0] / T::lit(av.len() as f64);
                if let Some(da) = self.slot(adj, *a) {
                    for k in 0..av.len() {
                        da[k] += c * (av[k] - bv[k]);
                    }
                }
                if let Some(db) = self.slot(adj, *b) {
                    for k in 0..av.len() {
                        db[k] -= c * (av[k] - bv[k]);
                    }
                }
            }
            Op::Entropy(x) => {
                let b = self.shape(*x)[0];
                let floor = T::lit(PROB_FLOOR);
                let xv = self.value(*x);
                let c = g[0] / T::lit(b as f64);
                if let Some(dx) = self.slot(adj, *x) {
                    for k in 0..xv.len() {
                        let d = if xv[k] > floor {
                            xv[k].ln() + T::one()
                        } else {
                            floor.ln()
                        };
                        dx[k] -= c * d;
                    }
                }
            }
        }
    }
}
