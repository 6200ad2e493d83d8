//! Versioned, hashed JSON containers for trained models.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{write_atomic, DataError, EncodingSpec};
use crate::gp::{DklConfig, TrainedDkl};
use crate::vae::{VaeConfig, VaeParams};

pub const CHECKPOINT_FORMAT: &str = "adkl-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    kind: String,
    sha256: String,
    body: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DklCheckpoint {
    pub model: TrainedDkl,
    pub config: DklConfig,
    pub encoding: EncodingSpec,
    pub target_name: String,
    pub dataset_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VaeCheckpoint {
    pub params: VaeParams,
    pub config: VaeConfig,
    pub encoding: EncodingSpec,
    pub dataset_hash: String,
}

pub trait CheckpointKind: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

impl CheckpointKind for DklCheckpoint {
    const KIND: &'static str = "dkl";
}

impl CheckpointKind for VaeCheckpoint {
    const KIND: &'static str = "vae";
}

fn body_hash(body: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(body.to_string().as_bytes()))
}

pub fn checkpoint_bytes<T: CheckpointKind>(body: &T) -> Result<Vec<u8>, DataError> {
    let body = serde_json::to_value(body).map_err(|e| DataError::Io(e.to_string()))?;
    let env = Envelope {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        kind: T::KIND.into(),
        sha256: body_hash(&body),
        body,
    };
    let mut out = serde_json::to_vec(&env).map_err(|e| DataError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn checkpoint_from_bytes<T: CheckpointKind>(bytes: &[u8]) -> Result<T, DataError> {
    let env: Envelope = serde_json::from_slice(bytes).map_err(|e| DataError::CorruptFile(e.to_string()))?;
    if env.format != CHECKPOINT_FORMAT {
        return Err(DataError::CorruptFile(format!("unknown format {:?}", env.format)));
    }
    if env.version != CHECKPOINT_VERSION {
        return Err(DataError::VersionMismatch {
            found: env.version,
            expected: CHECKPOINT_VERSION,
        });
    }
    if env.kind != T::KIND {
        return Err(DataError::CorruptFile(format!("expected a {} checkpoint, found {}", T::KIND, env.kind)));
    }
    if body_hash(&env.body) != env.sha256 {
        return Err(DataError::CorruptFile("body hash does not match".into()));
    }
    serde_json::from_value(env.body).map_err(|e| DataError::CorruptFile(e.to_string()))
}

pub fn write_checkpoint<T: CheckpointKind>(body: &T, path: &Path) -> Result<(), DataError> {
    write_atomic(path, &checkpoint_bytes(body)?)
}

pub fn read_checkpoint<T: CheckpointKind>(path: &Path) -> Result<T, DataError> {
    let bytes = std::fs::read(path).map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
    checkpoint_from_bytes(&bytes)
}
