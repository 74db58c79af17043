//! Parameter checkpoints: 8-byte magic, format version (u32 LE), manifest
//! length (u64 LE), JSON manifest, then every tensor as f64 LE in manifest
//! order.

use std::path::Path;

use cadrev_core::model::{Model, Variant};
use cadrev_core::nn::{ParamStore, Tensor};
use serde::{Deserialize, Serialize};

use crate::config::ModelConfigDoc;
use crate::error::{Error, IoContext, Result};

pub const MAGIC: &[u8; 8] = b"CADREVCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the blob, in scalars.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub model: ModelConfigDoc,
    pub variant: String,
    pub use_refiner: bool,
    pub tensors: Vec<TensorEntry>,
}

pub fn encode(model: &Model) -> Vec<u8> {
    let mut tensors = Vec::new();
    let mut offset = 0;
    for (name, t) in model.store.iter() {
        tensors.push(TensorEntry { name: name.to_string(), shape: t.shape.clone(), offset });
        offset += t.len();
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        model: ModelConfigDoc::from(&model.cfg),
        variant: model.variant.as_str().into(),
        use_refiner: model.use_refiner,
        tensors,
    };
    let json = serde_json::to_vec(&manifest).expect("manifest serializes");
    let mut out = Vec::with_capacity(20 + json.len() + offset * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, t) in model.store.iter() {
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn ck(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn decode(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(ck("not a checkpoint file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(ck(format!("format version {version}, expected {FORMAT_VERSION}")));
    }
    let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let body = bytes.get(20..20 + len).ok_or_else(|| ck("truncated manifest"))?;
    let manifest: Manifest = serde_json::from_slice(body).map_err(|e| ck(format!("manifest: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(ck("manifest version differs from header"));
    }
    let blob = &bytes[20 + len..];
    if blob.len() % 8 != 0 {
        return Err(ck("blob is not a whole number of f64 values"));
    }
    let values: Vec<f64> = blob.chunks(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let mut store = ParamStore::new();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    for t in &manifest.tensors {
        let n: usize = t.shape.iter().product();
        let data = values.get(t.offset..t.offset + n).ok_or_else(|| ck(format!("tensor `{}` out of range", t.name)))?;
        if t.shape.len() != 2 {
            return Err(ck(format!("tensor `{}` is not 2-D", t.name)));
        }
        store.add(&t.name, t.shape[0], t.shape[1], cadrev_core::nn::Init::Zeros, &mut rng);
        store.set(&t.name, Tensor { shape: t.shape.clone(), data: data.to_vec(), grad: None }).map_err(|e| ck(e.to_string()))?;
    }
    let variant = Variant::parse(&manifest.variant).ok_or_else(|| ck(format!("unknown variant `{}`", manifest.variant)))?;
    Ok(Model::from_store((&manifest.model).into(), variant, manifest.use_refiner, store)?)
}

pub fn save(path: &Path, model: &Model) -> Result<()> {
    std::fs::write(path, encode(model)).at(path)
}

pub fn load(path: &Path) -> Result<Model> {
    decode(&std::fs::read(path).at(path)?).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
}
