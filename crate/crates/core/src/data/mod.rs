//! Dataset ingestion, subsetting, checkpoints and output files.

mod checkpoint;
mod dataset;
mod features;
mod output;
mod qm9;
mod synthetic;

use std::path::Path;

use sha2::{Digest, Sha256};

pub use checkpoint::{
    checkpoint_bytes, checkpoint_from_bytes, read_checkpoint, write_checkpoint, CheckpointKind, DklCheckpoint,
    VaeCheckpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use dataset::{load_csv, load_csv_from_reader, sample_subset, CsvSchema, Dataset, LoadReport, Record, RejectedRow};
pub use features::{descriptor_matrix, featurize, featurize_with, EncodingSpec, Featurized};
pub use output::{fmt_f64, similarity_rows, write_csv, write_json, OutputFile, RunManifest, Timings};
pub use qm9::{ingest_qm9_dir, normalize_exponent, parse_qm9_file, Qm9Record, RejectedFile, QM9_PROPERTIES};
pub use synthetic::{synthetic_dataset, synthetic_molecules};

use crate::selfies::SelfiesError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("line {line}: malformed header: {msg}")]
    MalformedHeader { line: usize, msg: String },
    #[error("property line has {0} tokens, expected 17")]
    PropertyCountMismatch(usize),
    #[error("header announces {expected} atoms, found {found} atom lines")]
    AtomCountMismatch { expected: usize, found: usize },
    #[error("line {line}, column {column}: cannot parse {token:?} as a number")]
    UnparseableNumber { line: usize, column: usize, token: String },
    #[error("invalid SMILES {0}")]
    InvalidSmiles(String),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("non-finite target for {0:?}")]
    NonFiniteTarget(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("cannot sample {n} records from {len}")]
    SubsetTooLarge { n: usize, len: usize },
    #[error("checkpoint version {found}, this build reads version {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt file: {0}")]
    CorruptFile(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Encoding(#[from] SelfiesError),
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    let io = |e: std::io::Error| DataError::Io(format!("{}: {e}", path.display()));
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, DataError> {
    let bytes = std::fs::read(path).map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

#[cfg(test)]
pub(crate) mod tests_support {
    pub const METHANE: &str = "5
gdb 1\t157.7118\t157.70997\t157.70699\t0.\t13.21\t-0.3877\t0.1171\t0.5048\t35.3641\t0.044749\t-40.47893\t-40.476062\t-40.475117\t-40.498597\t6.469\t
C\t-0.0126981359\t 1.0858041578\t 0.0080009958\t-0.535689
H\t 0.002150416\t-0.0060313176\t 0.0019761204\t 0.133921
H\t 1.0117308433\t 1.4637511618\t 0.0002765748\t 0.133922
H\t-0.540815069\t 1.4475266138\t-0.8766437152\t 0.133923
H\t-0.5238136345\t 1.4379326443\t 0.9063972942\t 0.133923
1341.307\t1341.3284\t1341.365\t1562.6731\t1562.7453\t3038.3205\t3151.6034\t3151.6788\t3151.7078
C\tC\t
InChI=1S/CH4/h1H4\tInChI=1S/CH4/h1H4
";
}
