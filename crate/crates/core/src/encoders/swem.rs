use crate::error::Result;
use crate::gradcore::{Graph, Scalar, Var};

/// `[avg_t x_t ; max_t x_t]` over each document's real tokens.
pub(super) fn encode<T: Scalar>(g: &mut Graph<'_, T>, x: Var, lengths: &[usize]) -> Result<Var> {
    let avg = g.masked_mean_time(x, lengths)?;
    let (max, _) = g.masked_max_time(x, lengths)?;
    g.concat_cols(&[avg, max])
}
