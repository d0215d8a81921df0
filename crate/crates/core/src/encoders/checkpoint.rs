//! Binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic  b"RGTXCKPT"
//! u32    format version (1)
//! u32    length of the JSON `ModelSpec`, then the JSON
//! u32    tensor count
//! per tensor:
//!   u32 name length, UTF-8 name
//!   u32 rank, u64 per extent
//!   u8  element width (4 or 8), then the row-major values
//! ```

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use crate::corpus::EmbeddingTable;
use crate::error::{Error, Result};
use crate::gradcore::{Scalar, Tensor};

use super::{ModelSpec, ParamStore, TextClassifier};

const MAGIC: &[u8; 8] = b"RGTXCKPT";
const VERSION: u32 = 1;

pub fn write_checkpoint<T: Scalar>(path: &Path, model: &TextClassifier<T>) -> Result<()> {
    fs::write(path, encode(model)?).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint<T: Scalar>(path: &Path) -> Result<TextClassifier<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

fn encode<T: Scalar>(model: &TextClassifier<T>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let spec = serde_json::to_vec(model.spec())?;
    out.extend_from_slice(&(spec.len() as u32).to_le_bytes());
    out.extend_from_slice(&spec);
    let params = model.params();
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    let width = std::mem::size_of::<T>() as u8;
    for p in params.iter() {
        out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.extend_from_slice(&(p.tensor.shape().len() as u32).to_le_bytes());
        for &e in p.tensor.shape() {
            out.extend_from_slice(&(e as u64).to_le_bytes());
        }
        out.push(width);
        for &v in p.tensor.data() {
            if width == 4 {
                out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
            } else {
                out.extend_from_slice(&v.as_f64().to_le_bytes());
            }
        }
    }
    Ok(out)
}

struct Reader<'b>(Cursor<&'b [u8]>);

impl Reader<'_> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0; n];
        self.0
            .read_exact(&mut buf)
            .map_err(|_| Error::Checkpoint("truncated file".into()))?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().expect("8 bytes")))
    }
}

fn decode<T: Scalar>(bytes: &[u8]) -> Result<TextClassifier<T>> {
    let mut r = Reader(Cursor::new(bytes));
    if r.bytes(8)? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let spec_len = r.u32()? as usize;
    let spec: ModelSpec = serde_json::from_slice(&r.bytes(spec_len)?)?;
    let count = r.u32()? as usize;
    let mut loaded = ParamStore::new();
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name =
            String::from_utf8(r.bytes(name_len)?).map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let rank = r.u32()? as usize;
        let shape = (0..rank)
            .map(|_| r.u64().map(|e| e as usize))
            .collect::<Result<Vec<_>>>()?;
        let width = r.bytes(1)?[0];
        let n: usize = shape.iter().product();
        let data = match width {
            4 => r
                .bytes(4 * n)?
                .chunks_exact(4)
                .map(|c| T::lit(f32::from_le_bytes(c.try_into().expect("4")) as f64))
                .collect(),
            8 => r
                .bytes(8 * n)?
                .chunks_exact(8)
                .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8"))))
                .collect(),
            w => return Err(Error::Checkpoint(format!("unsupported element width {w}"))),
        };
        loaded.add(name, Tensor::new(shape, data)?, false);
    }
    let emb = loaded
        .find(super::EMBEDDING)
        .ok_or_else(|| Error::Checkpoint("missing embedding table".into()))?
        .tensor
        .clone();
    let mut model = TextClassifier::new(spec, EmbeddingTable { weights: emb }, 0)?;
    model.params_mut().load_values(&loaded)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::encoders::EncoderSpec;

    #[test]
    fn round_trip_preserves_every_tensor() {
        let vocab = Vocabulary::from_tokens(["a".to_string(), "b".to_string()]);
        let spec = ModelSpec {
            encoder: EncoderSpec::BilstmMax { hidden_state: 3 },
            embedding_dim: 4,
            classifier_dim: 5,
            num_classes: 2,
            ..Default::default()
        };
        let model = TextClassifier::<f32>::new(spec, EmbeddingTable::random(&vocab, 4, 1), 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        write_checkpoint(&path, &model).unwrap();
        let back: TextClassifier<f32> = read_checkpoint(&path).unwrap();
        assert_eq!(back.spec(), model.spec());
        for (a, b) in back.params().iter().zip(model.params().iter()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.tensor.data(), b.tensor.data());
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode::<f32>(b"nonsense").is_err());
    }
}
