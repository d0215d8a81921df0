//! Forward builders for the tensor primitives.

use rand::Rng;

use crate::error::{Error, Result};

use super::graph::{Graph, Op, Var};
use super::tensor::numel;
use super::Scalar;

impl<T: Scalar> Graph<'_, T> {
    fn binary(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(T, T) -> T) -> Result<(Vec<usize>, Vec<T>)> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        let (va, vb) = (self.value(a), self.value(b));
        let (shape, data) = if sa == sb {
            (sa.to_vec(), va.iter().zip(vb).map(|(&x, &y)| f(x, y)).collect())
        } else if vb.len() == 1 {
            (sa.to_vec(), va.iter().map(|&x| f(x, vb[0])).collect())
        } else if va.len() == 1 {
            (sb.to_vec(), vb.iter().map(|&y| f(va[0], y)).collect())
        } else {
            return Err(Error::ShapeMismatch {
                op,
                left: sa.to_vec(),
                right: sb.to_vec(),
            });
        };
        Ok((shape, data))
    }

    fn unary(&mut self, x: Var, f: impl Fn(T) -> T, op: Op<T>) -> Var {
        let shape = self.shape(x).to_vec();
        let data = self.value(x).iter().map(|&v| f(v)).collect();
        self.push(shape, data, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (s, d) = self.binary("add", a, b, |x, y| x + y)?;
        Ok(self.push(s, d, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (s, d) = self.binary("sub", a, b, |x, y| x - y)?;
        Ok(self.push(s, d, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (s, d) = self.binary("mul", a, b, |x, y| x * y)?;
        Ok(self.push(s, d, Op::Mul(a, b)))
    }

    /// Elementwise maximum; on ties the gradient goes to `a`.
    pub fn maximum(&mut self, a: Var, b: Var) -> Result<Var> {
        let (s, d) = self.binary("maximum", a, b, |x, y| if x >= y || x.is_nan() { x } else { y })?;
        Ok(self.push(s, d, Op::Maximum(a, b)))
    }

    pub fn neg(&mut self, x: Var) -> Var {
        self.unary(x, |v| -v, Op::Neg(x))
    }

    pub fn scale(&mut self, x: Var, c: T) -> Var {
        self.unary(x, |v| v * c, Op::Scale(x, c))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.exp(), Op::Exp(x))
    }

    pub fn log(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.ln(), Op::Log(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.tanh(), Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, |v| if v < T::zero() { T::zero() } else { v }, Op::Relu(x))
    }

    /// Multiplies by a fixed same-shape buffer (dropout masks, frozen weights).
    pub fn mul_const(&mut self, x: Var, factors: Vec<T>) -> Result<Var> {
        if factors.len() != self.value(x).len() {
            return Err(Error::ShapeMismatch {
                op: "mul_const",
                left: self.shape(x).to_vec(),
                right: vec![factors.len()],
            });
        }
        let shape = self.shape(x).to_vec();
        let data = self.value(x).iter().zip(&factors).map(|(&v, &m)| v * m).collect();
        Ok(self.push(shape, data, Op::MulConst(x, factors)))
    }

    /// Inverted dropout with a freshly drawn mask.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, rate: f64, rng: &mut R) -> Result<Var> {
        let mask = dropout_mask(self.value(x).len(), rate, rng)?;
        match mask {
            Some(m) => self.mul_const(x, m),
            None => Ok(x),
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: sa,
                right: sb,
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let (av, bv) = (self.value(a), self.value(b));
        let mut out = vec![T::zero(); m * n];
        for i in 0..m {
            let orow = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let aip = av[i * k + p];
                if aip == T::zero() {
                    continue;
                }
                let brow = &bv[p * n..(p + 1) * n];
                for j in 0..n {
                    orow[j] += aip * brow[j];
                }
            }
        }
        Ok(self.push(vec![m, n], out, Op::MatMul(a, b)))
    }

    /// Adds a `[n]` bias to every row of an `[m, n]` matrix.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (sx, sb) = (self.shape(x).to_vec(), self.shape(bias).to_vec());
        let n = numel(&sb);
        if sx.len() != 2 || sx[1] != n {
            return Err(Error::ShapeMismatch {
                op: "add_bias",
                left: sx,
                right: sb,
            });
        }
        let bv = self.value(bias);
        let data = self
            .value(x)
            .chunks(n)
            .flat_map(|row| row.iter().zip(bv).map(|(&v, &b)| v + b))
            .collect();
        Ok(self.push(sx, data, Op::AddBias(x, bias)))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).iter().copied().sum();
        self.push(Vec::new(), vec![s], Op::Sum(x))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let s = v.iter().copied().sum::<T>() / T::lit(v.len().max(1) as f64);
        self.push(Vec::new(), vec![s], Op::Mean(x))
    }

    fn axis_split(&self, op: &'static str, x: Var, axis: usize) -> Result<(Vec<usize>, usize, usize, usize)> {
        let shape = self.shape(x).to_vec();
        if axis >= shape.len() {
            return Err(Error::InvalidShape {
                op,
                shape,
                reason: format!("axis {axis} out of range"),
            });
        }
        if shape[axis] == 0 {
            return Err(Error::EmptyAxis { op, axis, shape });
        }
        let outer = numel(&shape[..axis]);
        let inner = numel(&shape[axis + 1..]);
        let len = shape[axis];
        let mut out_shape = shape;
        out_shape.remove(axis);
        Ok((out_shape, outer, len, inner))
    }

    fn sum_axis_impl(&mut self, x: Var, axis: usize, mean: bool) -> Result<Var> {
        let (shape, outer, len, inner) = self.axis_split(if mean { "mean" } else { "sum" }, x, axis)?;
        let v = self.value(x);
        let c = if mean { T::one() / T::lit(len as f64) } else { T::one() };
        let mut out = vec![T::zero(); outer * inner];
        for o in 0..outer {
            for l in 0..len {
                for j in 0..inner {
                    out[o * inner + j] += v[(o * len + l) * inner + j];
                }
            }
        }
        out.iter_mut().for_each(|s| *s *= c);
        Ok(self.push(
            shape,
            out,
            Op::SumAxis {
                x,
                outer,
                len,
                inner,
                mean,
            },
        ))
    }

    pub fn sum_axis(&mut self, x: Var, axis: usize) -> Result<Var> {
        self.sum_axis_impl(x, axis, false)
    }

    pub fn mean_axis(&mut self, x: Var, axis: usize) -> Result<Var> {
        self.sum_axis_impl(x, axis, true)
    }

    /// Max along `axis` and the winning index for every output element (ties: lowest index).
    pub fn max_axis(&mut self, x: Var, axis: usize) -> Result<(Var, Vec<usize>)> {
        let (shape, outer, len, inner) = self.axis_split("max", x, axis)?;
        let v = self.value(x);
        let mut out = vec![T::zero(); outer * inner];
        let mut argmax = vec![0usize; outer * inner];
        for o in 0..outer {
            for j in 0..inner {
                let mut best = 0;
                for l in 1..len {
                    if beats(v[(o * len + l) * inner + j], v[(o * len + best) * inner + j]) {
                        best = l;
                    }
                }
                out[o * inner + j] = v[(o * len + best) * inner + j];
                argmax[o * inner + j] = best;
            }
        }
        let var = self.push(
            shape,
            out,
            Op::MaxAxis {
                x,
                len,
                inner,
                argmax: argmax.clone(),
            },
        );
        Ok((var, argmax))
    }

    pub fn reshape(&mut self, x: Var, shape: impl Into<Vec<usize>>) -> Result<Var> {
        let shape = shape.into();
        if numel(&shape) != self.value(x).len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                left: self.shape(x).to_vec(),
                right: shape,
            });
        }
        let data = self.value(x).to_vec();
        Ok(self.push(shape, data, Op::Reshape(x)))
    }

    fn dims3(&self, op: &'static str, x: Var) -> Result<(usize, usize, usize)> {
        match self.shape(x) {
            &[b, t, f] => Ok((b, t, f)),
            s => Err(Error::InvalidShape {
                op,
                shape: s.to_vec(),
                reason: "expected [batch, time, features]".into(),
            }),
        }
    }

    /// `x[:, t, :]` of a `[b, T, f]` tensor.
    pub fn select_time(&mut self, x: Var, t: usize) -> Result<Var> {
        let (b, tt, f) = self.dims3("select_time", x)?;
        if t >= tt {
            return Err(Error::InvalidShape {
                op: "select_time",
                shape: self.shape(x).to_vec(),
                reason: format!("timestep {t} out of range"),
            });
        }
        let v = self.value(x);
        let mut out = Vec::with_capacity(b * f);
        for r in 0..b {
            let base = (r * tt + t) * f;
            out.extend_from_slice(&v[base..base + f]);
        }
        Ok(self.push(vec![b, f], out, Op::SelectTime { x, t }))
    }

    /// Stacks `T` tensors of shape `[b, f]` into `[b, T, f]`.
    pub fn stack_time(&mut self, xs: &[Var]) -> Result<Var> {
        let first = xs.first().ok_or_else(|| Error::InvalidShape {
            op: "stack_time",
            shape: vec![],
            reason: "nothing to stack".into(),
        })?;
        let s0 = self.shape(*first).to_vec();
        if s0.len() != 2 {
            return Err(Error::InvalidShape {
                op: "stack_time",
                shape: s0,
                reason: "expected [batch, features]".into(),
            });
        }
        for v in xs {
            if self.shape(*v) != s0.as_slice() {
                return Err(Error::ShapeMismatch {
                    op: "stack_time",
                    left: s0,
                    right: self.shape(*v).to_vec(),
                });
            }
        }
        let (b, f, tt) = (s0[0], s0[1], xs.len());
        let mut out = vec![T::zero(); b * tt * f];
        for (t, v) in xs.iter().enumerate() {
            let vals = self.value(*v);
            for r in 0..b {
                out[(r * tt + t) * f..(r * tt + t + 1) * f].copy_from_slice(&vals[r * f..(r + 1) * f]);
            }
        }
        Ok(self.push(vec![b, tt, f], out, Op::StackTime(xs.to_vec())))
    }

    /// Columns `start..start + width` of a 2-D tensor.
    pub fn slice_cols(&mut self, x: Var, start: usize, width: usize) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if s.len() != 2 || start + width > s[1] {
            return Err(Error::InvalidShape {
                op: "slice_cols",
                shape: s,
                reason: format!("columns {start}..{} out of range", start + width),
            });
        }
        let cols = s[1];
        let data = self
            .value(x)
            .chunks(cols)
            .flat_map(|row| row[start..start + width].iter().copied())
            .collect();
        Ok(self.push(vec![s[0], width], data, Op::SliceCols { x, start }))
    }

    /// Concatenates 2-D tensors with equal row counts along columns.
    pub fn concat_cols(&mut self, xs: &[Var]) -> Result<Var> {
        let rows = match xs.first() {
            Some(v) if self.shape(*v).len() == 2 => self.shape(*v)[0],
            _ => {
                return Err(Error::InvalidShape {
                    op: "concat_cols",
                    shape: xs.first().map(|v| self.shape(*v).to_vec()).unwrap_or_default(),
                    reason: "expected 2-D operands".into(),
                })
            }
        };
        for v in xs {
            let s = self.shape(*v);
            if s.len() != 2 || s[0] != rows {
                return Err(Error::ShapeMismatch {
                    op: "concat_cols",
                    left: self.shape(xs[0]).to_vec(),
                    right: s.to_vec(),
                });
            }
        }
        let total: usize = xs.iter().map(|v| self.shape(*v)[1]).sum();
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for v in xs {
                let w = self.shape(*v)[1];
                out.extend_from_slice(&self.value(*v)[r * w..(r + 1) * w]);
            }
        }
        Ok(self.push(vec![rows, total], out, Op::ConcatCols(xs.to_vec())))
    }

    /// Row `r` of the result comes from `a` when `mask[r]`, else from `b`.
    pub fn where_rows(&mut self, mask: &[bool], a: Var, b: Var) -> Result<Var> {
        let s = self.shape(a).to_vec();
        if s.len() != 2 || self.shape(b) != s.as_slice() || mask.len() != s[0] {
            return Err(Error::ShapeMismatch {
                op: "where_rows",
                left: s,
                right: self.shape(b).to_vec(),
            });
        }
        let f = s[1];
        let (va, vb) = (self.value(a), self.value(b));
        let mut out = Vec::with_capacity(va.len());
        for (r, &m) in mask.iter().enumerate() {
            let src = if m { va } else { vb };
            out.extend_from_slice(&src[r * f..(r + 1) * f]);
        }
        Ok(self.push(
            s,
            out,
            Op::WhereRows {
                a,
                b,
                mask: mask.to_vec(),
            },
        ))
    }

    fn check_lengths(&self, op: &'static str, x: Var, lengths: &[usize]) -> Result<(usize, usize, usize)> {
        let (b, tt, f) = self.dims3(op, x)?;
        if lengths.len() != b {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape(x).to_vec(),
                right: vec![lengths.len()],
            });
        }
        for &len in lengths {
            if len == 0 {
                return Err(Error::EmptyAxis {
                    op,
                    axis: 1,
                    shape: self.shape(x).to_vec(),
                });
            }
            if len > tt {
                return Err(Error::InvalidShape {
                    op,
                    shape: self.shape(x).to_vec(),
                    reason: format!("length {len} exceeds time extent"),
                });
            }
        }
        Ok((b, tt, f))
    }

    /// Average over the first `lengths[r]` timesteps of each row of `[b, T, f]`.
    ///
    /// Each column is summed in ascending order of value, so the result is
    /// bit-for-bit independent of the order of the timesteps.
    pub fn masked_mean_time(&mut self, x: Var, lengths: &[usize]) -> Result<Var> {
        let (b, tt, f) = self.check_lengths("masked_mean_time", x, lengths)?;
        let v = self.value(x);
        let mut out = vec![T::zero(); b * f];
        let mut column = Vec::with_capacity(tt);
        for (r, &len) in lengths.iter().enumerate() {
            let c = T::one() / T::lit(len as f64);
            for j in 0..f {
                column.clear();
                column.extend((0..len).map(|t| v[(r * tt + t) * f + j]));
                column.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                out[r * f + j] = column.iter().copied().fold(T::zero(), |acc, e| acc + e) * c;
            }
        }
        Ok(self.push(
            vec![b, f],
            out,
            Op::MaskedMeanTime {
                x,
                lengths: lengths.to_vec(),
            },
        ))
    }

    /// Max over the first `lengths[r]` timesteps; also returns the winning
    /// timestep per `(row, feature)`, ties resolved to the earliest.
    pub fn masked_max_time(&mut self, x: Var, lengths: &[usize]) -> Result<(Var, Vec<usize>)> {
        let (b, tt, f) = self.check_lengths("masked_max_time", x, lengths)?;
        let v = self.value(x);
        let mut out = vec![T::zero(); b * f];
        let mut argmax = vec![0usize; b * f];
        for (r, &len) in lengths.iter().enumerate() {
            for j in 0..f {
                let mut best = 0;
                for t in 1..len {
                    if beats(v[(r * tt + t) * f + j], v[(r * tt + best) * f + j]) {
                        best = t;
                    }
                }
                out[r * f + j] = v[(r * tt + best) * f + j];
                argmax[r * f + j] = best;
            }
        }
        let var = self.push(
            vec![b, f],
            out,
            Op::MaskedMaxTime {
                x,
                argmax: argmax.clone(),
            },
        );
        Ok((var, argmax))
    }

    /// Sliding windows over time for a 1-D convolution.
    ///
    /// `[b, T, d]` becomes `[b * W, width * d]` with
    /// `W = (T + 2 * pad - width) / stride + 1`. Positions outside a row's
    /// length, including the zero padding, read as zero.
    pub fn unfold_time(
        &mut self,
        x: Var,
        lengths: &[usize],
        width: usize,
        stride: usize,
        pad: usize,
    ) -> Result<(Var, usize)> {
        let (b, tt, d) = self.check_lengths("unfold_time", x, lengths)?;
        if width == 0 || stride == 0 || tt + 2 * pad < width {
            return Err(Error::InvalidShape {
                op: "unfold_time",
                shape: self.shape(x).to_vec(),
                reason: format!("no window of width {width} fits with padding {pad}"),
            });
        }
        let windows = (tt + 2 * pad - width) / stride + 1;
        let cols = width * d;
        let v = self.value(x);
        let mut out = vec![T::zero(); b * windows * cols];
        for (r, &len) in lengths.iter().enumerate() {
            for w in 0..windows {
                let row = (r * windows + w) * cols;
                for k in 0..width {
                    let pos = (w * stride + k) as isize - pad as isize;
                    if pos < 0 || pos as usize >= len {
                        continue;
                    }
                    let src = (r * tt + pos as usize) * d;
                    out[row + k * d..row + (k + 1) * d].copy_from_slice(&v[src..src + d]);
                }
            }
        }
        let var = self.push(
            vec![b * windows, cols],
            out,
            Op::Unfold {
                x,
                width,
                stride,
                pad,
                windows,
                lengths: lengths.to_vec(),
            },
        );
        Ok((var, windows))
    }

    /// Row lookup into a `[V, d]` table; result has shape `out_shape + [d]`.
    pub fn gather(&mut self, table: Var, ids: &[usize], out_shape: &[usize]) -> Result<Var> {
        let s = self.shape(table).to_vec();
        if s.len() != 2 || numel(out_shape) != ids.len() {
            return Err(Error::InvalidShape {
                op: "gather",
                shape: s,
                reason: format!("{} ids for output {:?}", ids.len(), out_shape),
            });
        }
        let (rows, d) = (s[0], s[1]);
        if let Some(&bad) = ids.iter().find(|&&id| id >= rows) {
            return Err(Error::InvalidShape {
                op: "gather",
                shape: s,
                reason: format!("index {bad} out of range"),
            });
        }
        let tv = self.value(table);
        let mut out = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            out.extend_from_slice(&tv[id * d..(id + 1) * d]);
        }
        let mut shape = out_shape.to_vec();
        shape.push(d);
        Ok(self.push(
            shape,
            out,
            Op::Gather {
                table,
                ids: ids.to_vec(),
            },
        ))
    }
}

pub(crate) fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

/// Inverted-dropout mask, or `None` when `rate == 0`.
pub fn dropout_mask<T: Scalar, R: Rng + ?Sized>(n: usize, rate: f64, rng: &mut R) -> Result<Option<Vec<T>>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidRate(rate));
    }
    if rate == 0.0 {
        return Ok(None);
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    Ok(Some(
        (0..n)
            .map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep })
            .collect(),
    ))
}

/// Strictly greater, with NaN winning so that it propagates through max pooling.
fn beats<T: Scalar>(candidate: T, current: T) -> bool {
    candidate > current || (candidate.is_nan() && !current.is_nan())
}
