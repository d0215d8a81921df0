use rand::Rng;

use crate::corpus::{DocumentBatch, PAD, UNK};
use crate::error::{Error, Result};
use crate::gradcore::{Scalar, Tensor};

/// Token-level noise for the Pi model.
///
/// Each real token becomes the unknown token with probability `unk_rate`;
/// then each adjacent pair, scanned left to right, is swapped with
/// probability `swap_rate`. Lengths and padding are unchanged.
pub fn text_perturb<R: Rng + ?Sized>(
    batch: &DocumentBatch,
    unk_rate: f64,
    swap_rate: f64,
    rng: &mut R,
) -> Result<DocumentBatch> {
    for rate in [unk_rate, swap_rate] {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::InvalidRate(rate));
        }
    }
    if unk_rate == 0.0 && swap_rate == 0.0 {
        return Ok(batch.clone());
    }
    Ok(batch.map_docs(|_, doc| {
        if unk_rate > 0.0 {
            for tok in doc.iter_mut() {
                if rng.random_bool(unk_rate) {
                    *tok = UNK;
                }
            }
        }
        if swap_rate > 0.0 {
            for t in 1..doc.len() {
                if rng.random_bool(swap_rate) {
                    doc.swap(t - 1, t);
                }
            }
        }
    }))
}

/// Shifts and scales every embedding dimension to zero mean and unit
/// variance over the non-padding rows; the padding row stays zero.
pub fn standardize_embeddings<T: Scalar>(table: &mut Tensor<T>) -> Result<()> {
    let (rows, d) = match table.shape() {
        &[r, d] if r > PAD + 1 => (r, d),
        s => {
            return Err(Error::InvalidShape {
                op: "standardize_embeddings",
                shape: s.to_vec(),
                reason: "need a [vocab, d] table with rows beyond padding".into(),
            })
        }
    };
    let data = table.data_mut();
    let n = (rows - 1) as f64;
    for j in 0..d {
        let col = || (0..rows).filter(|&r| r != PAD).map(|r| data[r * d + j].as_f64());
        let mean = col().sum::<f64>() / n;
        let var = col().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt().max(1e-12);
        for r in (0..rows).filter(|&r| r != PAD) {
            let v = data[r * d + j].as_f64();
            data[r * d + j] = T::lit((v - mean) / sd);
        }
    }
    Ok(())
}
