use crate::error::Result;
use crate::gradcore::{Graph, Scalar, Var};

/// Convolution over time with `kernel.shape = [context * d, K]`, zero
/// padding of `context / 2` on both sides, relu, then max over the windows
/// the document itself produces.
pub(super) fn encode<T: Scalar>(
    g: &mut Graph<'_, T>,
    x: Var,
    lengths: &[usize],
    kernel: Var,
    bias: Var,
    context: usize,
    stride: usize,
) -> Result<Var> {
    let b = lengths.len();
    let pad = context / 2;
    let (cols, windows) = g.unfold_time(x, lengths, context, stride, pad)?;
    let h = g.matmul(cols, kernel)?;
    let h = g.add_bias(h, bias)?;
    let h = g.relu(h);
    let k = g.shape(h)[1];
    let h = g.reshape(h, [b, windows, k])?;
    // A window past the document's own last window would only see padding
    // added for batching, so it is excluded.
    let valid: Vec<usize> = lengths
        .iter()
        .map(|&len| ((len + 2 * pad).saturating_sub(context) / stride + 1).min(windows))
        .collect();
    let (out, _) = g.masked_max_time(h, &valid)?;
    Ok(out)
}
