//! Versioned contribution tables for TPSA and logP.
//!
//! File format (UTF-8 text):
//!
//! ```text
//! # adkl-contributions v1 <kind>
//! # free-form comment lines
//! <id>\t<value>[\t<description>]
//! ```
//!
//! The first line is mandatory and names the table kind (`tpsa` or `logp`).
//! Blank lines and further `#` lines are ignored. Ids are unique.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

pub const TABLE_VERSION: u32 = 1;

const TPSA_V1: &str = include_str!("../../data/tpsa_v1.tsv");
const LOGP_V1: &str = include_str!("../../data/crippen_v1.tsv");

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("missing or malformed header line")]
    MissingHeader,
    #[error("table version {found} is not supported (expected {TABLE_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("expected a {expected} table, found {found}")]
    WrongKind { expected: String, found: String },
    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error("required entry {0} is missing")]
    MissingEntry(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContributionTable {
    pub kind: String,
    pub version: u32,
    values: BTreeMap<String, f64>,
}

impl ContributionTable {
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(TableError::MissingHeader)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "#" || fields[1] != "adkl-contributions" {
            return Err(TableError::MissingHeader);
        }
        let version: u32 = fields[2]
            .strip_prefix('v')
            .and_then(|v| v.parse().ok())
            .ok_or(TableError::MissingHeader)?;
        if version != TABLE_VERSION {
            return Err(TableError::VersionMismatch { found: version });
        }
        let mut values = BTreeMap::new();
        for (i, line) in lines {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let id = cols.next().unwrap_or_default().trim();
            let value = cols.next().ok_or_else(|| TableError::BadLine {
                line: i + 1,
                reason: "missing value column".into(),
            })?;
            let value: f64 = value.trim().parse().map_err(|_| TableError::BadLine {
                line: i + 1,
                reason: format!("unparseable value {value:?}"),
            })?;
            if id.is_empty() || values.insert(id.to_string(), value).is_some() {
                return Err(TableError::BadLine {
                    line: i + 1,
                    reason: format!("empty or duplicate id {id:?}"),
                });
            }
        }
        Ok(ContributionTable {
            kind: fields[3].to_string(),
            version,
            values,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TableError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.values.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn require(self, kind: &str, ids: &[&str]) -> Result<Self, TableError> {
        if self.kind != kind {
            return Err(TableError::WrongKind {
                expected: kind.into(),
                found: self.kind,
            });
        }
        if let Some(missing) = ids.iter().find(|id| !self.values.contains_key(**id)) {
            return Err(TableError::MissingEntry(missing.to_string()));
        }
        Ok(self)
    }
}

/// The pair of tables the descriptor code reads.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorTables {
    pub tpsa: ContributionTable,
    pub logp: ContributionTable,
}

pub(crate) const TPSA_REQUIRED: &[&str] = &[
    "N_base", "N_per_neighbor", "N_per_h", "O_base", "O_per_neighbor", "O_per_h",
];
pub(crate) const LOGP_REQUIRED: &[&str] = &["CS", "HS", "NS", "OS", "F"];

impl DescriptorTables {
    pub fn from_texts(tpsa: &str, logp: &str) -> Result<Self, TableError> {
        Ok(DescriptorTables {
            tpsa: ContributionTable::parse(tpsa)?.require("tpsa", TPSA_REQUIRED)?,
            logp: ContributionTable::parse(logp)?.require("logp", LOGP_REQUIRED)?,
        })
    }

    pub fn load(tpsa: &Path, logp: &Path) -> Result<Self, TableError> {
        Self::from_texts(&std::fs::read_to_string(tpsa)?, &std::fs::read_to_string(logp)?)
    }

    /// Tables shipped with the crate.
    pub fn builtin() -> &'static DescriptorTables {
        static TABLES: OnceLock<DescriptorTables> = OnceLock::new();
        TABLES.get_or_init(|| DescriptorTables::from_texts(TPSA_V1, LOGP_V1).expect("bundled tables are valid"))
    }
}
