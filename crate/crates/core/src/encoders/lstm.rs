use rand::Rng;

use crate::error::Result;
use crate::gradcore::{Graph, Scalar, Tensor, Var};

use super::params::{glorot, ParamStore};

/// Parameter keys of one LSTM direction. Gate order in the fused
/// matrices is input, forget, cell, output.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmWeights {
    pub w_ih: usize,
    pub w_hh: usize,
    pub bias: usize,
}

pub(super) struct LstmLeaves {
    w_ih: Var,
    w_hh: Var,
    bias: Var,
}

impl LstmWeights {
    pub(super) fn init<T: Scalar, R: Rng + ?Sized>(
        params: &mut ParamStore<T>,
        prefix: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let mut bias = Tensor::zeros([4 * hidden]);
        bias.data_mut()[hidden..2 * hidden]
            .iter_mut()
            .for_each(|b| *b = T::one());
        Self {
            w_ih: params.add(format!("{prefix}.w_ih"), glorot(input, 4 * hidden, rng), true),
            w_hh: params.add(format!("{prefix}.w_hh"), glorot(hidden, 4 * hidden, rng), true),
            bias: params.add(format!("{prefix}.bias"), bias, true),
        }
    }

    pub(super) fn leaves<'a, T: Scalar>(&self, params: &'a ParamStore<T>, g: &mut Graph<'a, T>) -> LstmLeaves {
        LstmLeaves {
            w_ih: params.leaf(g, self.w_ih),
            w_hh: params.leaf(g, self.w_hh),
            bias: params.leaf(g, self.bias),
        }
    }
}

/// Runs one direction and returns the hidden state after every timestep
/// (indexed by position) plus the final state. Rows stop updating past
/// their length, so the final state of the forward pass is the state at
/// the last real token and that of the reverse pass is the state at token 0.
fn run_direction<T: Scalar>(
    g: &mut Graph<'_, T>,
    x: Var,
    lengths: &[usize],
    w: &LstmLeaves,
    reverse: bool,
) -> Result<(Vec<Var>, Var)> {
    let s = g.shape(x).to_vec();
    let (b, tt, d) = (s[0], s[1], s[2]);
    let hidden = g.shape(w.w_hh)[0];
    let flat = g.reshape(x, [b * tt, d])?;
    let proj = g.matmul(flat, w.w_ih)?;
    let proj = g.add_bias(proj, w.bias)?;
    let proj = g.reshape(proj, [b, tt, 4 * hidden])?;

    let mut h = g.constant(Tensor::zeros([b, hidden]));
    let mut c = g.constant(Tensor::zeros([b, hidden]));
    let mut states = vec![h; tt];
    let order: Vec<usize> = if reverse {
        (0..tt).rev().collect()
    } else {
        (0..tt).collect()
    };
    for t in order {
        let xt = g.select_time(proj, t)?;
        let rec = g.matmul(h, w.w_hh)?;
        let gates = g.add(xt, rec)?;
        let i = g.slice_cols(gates, 0, hidden)?;
        let i = g.sigmoid(i);
        let f = g.slice_cols(gates, hidden, hidden)?;
        let f = g.sigmoid(f);
        let cand = g.slice_cols(gates, 2 * hidden, hidden)?;
        let cand = g.tanh(cand);
        let o = g.slice_cols(gates, 3 * hidden, hidden)?;
        let o = g.sigmoid(o);
        let keep = g.mul(f, c)?;
        let write = g.mul(i, cand)?;
        let c_new = g.add(keep, write)?;
        let squashed = g.tanh(c_new);
        let h_new = g.mul(o, squashed)?;
        let active: Vec<bool> = lengths.iter().map(|&len| t < len).collect();
        c = g.where_rows(&active, c_new, c)?;
        h = g.where_rows(&active, h_new, h)?;
        states[t] = h;
    }
    Ok((states, h))
}

/// `[h_fwd(last token) ; h_bwd(first token)]`.
pub(super) fn bilstm_final<T: Scalar>(
    g: &mut Graph<'_, T>,
    x: Var,
    lengths: &[usize],
    fwd: &LstmLeaves,
    bwd: &LstmLeaves,
) -> Result<Var> {
    let (_, hf) = run_direction(g, x, lengths, fwd, false)?;
    let (_, hb) = run_direction(g, x, lengths, bwd, true)?;
    g.concat_cols(&[hf, hb])
}

/// Elementwise max over real timesteps of `[h_fwd(t) ; h_bwd(t)]`, with the winning timestep per feature.
pub(super) fn bilstm_max<T: Scalar>(
    g: &mut Graph<'_, T>,
    x: Var,
    lengths: &[usize],
    fwd: &LstmLeaves,
    bwd: &LstmLeaves,
) -> Result<(Var, Vec<usize>)> {
    let (hf, _) = run_direction(g, x, lengths, fwd, false)?;
    let (hb, _) = run_direction(g, x, lengths, bwd, true)?;
    let per_step = hf
        .iter()
        .zip(&hb)
        .map(|(&f, &b)| g.concat_cols(&[f, b]))
        .collect::<Result<Vec<_>>>()?;
    let stacked = g.stack_time(&per_step)?;
    g.masked_max_time(stacked, lengths)
}
