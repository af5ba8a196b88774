use std::path::Path;
use std::sync::Arc;

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::fsio;
use crate::reranker::model::{ModelConfig, RerankerModel};
use crate::wire::{Reader, Writer};

const MODEL_MAGIC: &[u8; 4] = b"QMRR";
const MODEL_VERSION: u32 = 1;

/// A decoded but not yet bound model checkpoint: shape, the fingerprint of
/// the embedding table it was trained with, and the raw parameters.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub embedding_fingerprint: [u8; 32],
    params: Vec<f64>,
}

impl Checkpoint {
    /// Parses and validates checkpoint bytes: magic, version, shape sanity,
    /// exact parameter count, finite values, no trailing bytes.
    pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
        let mut r = Reader::new(bytes);
        if r.bytes(4)? != MODEL_MAGIC {
            return Err(Error::Format("not a model checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {}",
                version
            )));
        }
        let embedding_fingerprint: [u8; 32] = r.bytes(32)?.try_into().unwrap();
        let config = ModelConfig {
            d_embed: r.u32()? as usize,
            d_hidden: r.u32()? as usize,
            dense_hidden: r.u32()? as usize,
            feat_dim: r.u32()? as usize,
            max_len: r.u32()? as usize,
            dropout: r.f64()?,
        };
        config.validate().map_err(|e| Error::Format(e.to_string()))?;
        let declared = r.count(8)?;
        if declared != config.param_count() {
            return Err(Error::Format(format!(
                "checkpoint declares {} parameters, the shape needs {}",
                declared,
                config.param_count()
            )));
        }
        let mut params = Vec::with_capacity(declared);
        for _ in 0..declared {
            let v = r.f64()?;
            if !v.is_finite() {
                return Err(Error::Format("non-finite model parameter".into()));
            }
            params.push(v);
        }
        r.finish()?;
        Ok(Checkpoint {
            config,
            embedding_fingerprint,
            params,
        })
    }

    /// Binds the checkpoint to its embedding table; the table's fingerprint
    /// must match the one recorded at save time.
    pub fn into_model(self, table: Arc<EmbeddingTable>) -> Result<RerankerModel> {
        if table.fingerprint() != self.embedding_fingerprint {
            return Err(Error::FingerprintMismatch(
                "checkpoint was trained with a different embedding table".into(),
            ));
        }
        RerankerModel::from_parts(self.config, self.params, table)
    }
}

/// Serializes a model: magic, version, embedding fingerprint, shape, then all
/// parameters as 64-bit little-endian floats in layout order.
pub fn encode_model(model: &RerankerModel) -> Vec<u8> {
    let mut w = Writer::new();
    w.raw(MODEL_MAGIC);
    w.u32(MODEL_VERSION);
    w.raw(&model.table().fingerprint());
    let c = model.config();
    w.u32(c.d_embed as u32);
    w.u32(c.d_hidden as u32);
    w.u32(c.dense_hidden as u32);
    w.u32(c.feat_dim as u32);
    w.u32(c.max_len as u32);
    w.f64(c.dropout);
    w.u64(model.param_count() as u64);
    for &p in model.params() {
        w.f64(p);
    }
    w.into_bytes()
}

pub fn save_model(model: &RerankerModel, path: impl AsRef<Path>) -> Result<()> {
    fsio::write_atomic(path.as_ref(), &encode_model(model))
}

pub fn load_model(path: impl AsRef<Path>, table: Arc<EmbeddingTable>) -> Result<RerankerModel> {
    let path = path.as_ref();
    Checkpoint::decode(&fsio::read_bytes(path)?)
        .map_err(|e| e.in_file(path))?
        .into_model(table)
}
