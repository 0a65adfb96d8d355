//! Binary tensor files: `"GQCO"`, `u32` version, `u64` JSON length, JSON header, then
//! little-endian `f64` data in manifest order.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ExpertInit, GqcoModel, ModelConfig};
use crate::circuit::VOCAB_ORDERING_VERSION;
use crate::error::{GqcoError, Result};
use crate::scalar::Real;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"GQCO";
pub const CHECKPOINT_VERSION: u32 = 1;

/// One manifest row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: [usize; 2],
    /// Byte offset from the start of the data section.
    pub offset: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    meta: Value,
    tensors: Vec<TensorEntry>,
}

pub fn write_tensor_file<T: Real>(path: &Path, meta: Value, tensors: &[(&str, &Array2<T>)]) -> Result<()> {
    let mut offset = 0u64;
    let manifest = tensors
        .iter()
        .map(|(name, a)| {
            let e = TensorEntry { name: name.to_string(), shape: [a.nrows(), a.ncols()], offset };
            offset += 8 * a.len() as u64;
            e
        })
        .collect();
    let json = serde_json::to_vec(&Header { meta, tensors: manifest })?;
    let mut buf = Vec::with_capacity(16 + json.len() + offset as usize);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for (_, a) in tensors {
        for v in a.iter() {
            buf.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp)?;
    f.write_all(&buf)?;
    f.sync_all()?;
    fs::rename(tmp, path)?;
    Ok(())
}

/// Reads a tensor file; returns the JSON metadata and named tensors.
pub fn read_tensor_file<T: Real>(path: &Path) -> Result<(Value, Vec<(String, Array2<T>)>)> {
    let bytes = fs::read(path)?;
    let bad = |m: &str| GqcoError::Format(format!("{}: {m}", path.display()));
    if bytes.len() < 16 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(bad("missing GQCO magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    let json_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let data_start = 16usize.checked_add(json_len).filter(|&e| e <= bytes.len()).ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(&bytes[16..data_start])?;
    let data = &bytes[data_start..];
    let mut out = Vec::with_capacity(header.tensors.len());
    for e in header.tensors {
        let count = e.shape[0] * e.shape[1];
        let start = e.offset as usize;
        let end = start + 8 * count;
        if end > data.len() {
            return Err(bad(&format!("tensor {} runs past end of file", e.name)));
        }
        let vals: Vec<T> = data[start..end]
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        let a = Array2::from_shape_vec((e.shape[0], e.shape[1]), vals).map_err(|err| bad(&err.to_string()))?;
        out.push((e.name, a));
    }
    Ok((header.meta, out))
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    kind: String,
    config: ModelConfig,
    experts: Vec<usize>,
    vocab_ordering_version: u32,
    scalar: String,
}

impl<T: Real> GqcoModel<T> {
    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = ModelMeta {
            kind: "model".into(),
            config: self.config.clone(),
            experts: self.expert_sizes(),
            vocab_ordering_version: VOCAB_ORDERING_VERSION,
            scalar: T::NAME.into(),
        };
        let tensors: Vec<(&str, &Array2<T>)> = self.params.ids().map(|id| (self.params.name(id), self.params.get(id))).collect();
        write_tensor_file(path, serde_json::to_value(meta)?, &tensors)
    }

    /// Loads a checkpoint, validating every tensor name and shape against the stored config.
    pub fn load(path: &Path) -> Result<Self> {
        let (meta, tensors) = read_tensor_file::<T>(path)?;
        let meta: ModelMeta = serde_json::from_value(meta)?;
        if meta.kind != "model" {
            return Err(GqcoError::Format(format!("{} is not a model checkpoint", path.display())));
        }
        if meta.vocab_ordering_version != VOCAB_ORDERING_VERSION {
            return Err(GqcoError::config(format!(
                "checkpoint vocabulary ordering v{} differs from v{VOCAB_ORDERING_VERSION}",
                meta.vocab_ordering_version
            )));
        }
        let (&first, rest) = meta.experts.split_first().ok_or_else(|| GqcoError::config("checkpoint lists no experts"))?;
        let mut model = Self::new(meta.config, first)?;
        for &n in rest {
            model.add_expert(n, ExpertInit::Random(0))?;
        }
        if tensors.len() != model.params.len() {
            return Err(GqcoError::config(format!(
                "checkpoint holds {} tensors, architecture expects {}",
                tensors.len(),
                model.params.len()
            )));
        }
        for (name, value) in tensors {
            let id = model.params.find(&name).ok_or_else(|| GqcoError::config(format!("unexpected tensor {name}")))?;
            if model.params.get(id).dim() != value.dim() {
                return Err(GqcoError::config(format!(
                    "tensor {name} has shape {:?}, expected {:?}",
                    value.dim(),
                    model.params.get(id).dim()
                )));
            }
            *model.params.get_mut(id) = value;
        }
        Ok(model)
    }
}
