use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::DataError;
use crate::chem::{descriptors, parse_smiles, MolGraph, DESCRIPTOR_NAMES};
use crate::num::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub smiles: String,
    pub target: f64,
}

/// Labeled molecules with unique ids and finite targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<Record>,
    target_name: String,
    content_hash: String,
}

impl Dataset {
    pub fn new(records: Vec<Record>, target_name: impl Into<String>) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(DataError::DuplicateId(r.id.clone()));
            }
            if !r.target.is_finite() {
                return Err(DataError::NonFiniteTarget(r.id.clone()));
            }
        }
        let target_name = target_name.into();
        let content_hash = content_hash(&records, &target_name);
        Ok(Dataset {
            records,
            target_name,
            content_hash,
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.id.clone()).collect()
    }

    pub fn smiles(&self) -> Vec<String> {
        self.records.iter().map(|r| r.smiles.clone()).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.target).collect()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.records.iter().position(|r| r.id == id)
    }

    pub fn graphs(&self) -> Result<Vec<MolGraph>, DataError> {
        self.records
            .iter()
            .map(|r| parse_smiles(&r.smiles).map_err(|e| DataError::InvalidSmiles(format!("{}: {e}", r.id))))
            .collect()
    }
}

/// SHA-256 over the target name and the records in id order.
fn content_hash(records: &[Record], target_name: &str) -> String {
    let mut order: Vec<&Record> = records.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let mut h = Sha256::new();
    h.update(target_name.as_bytes());
    h.update(b"\n");
    for r in order {
        h.update(format!("{}\t{}\t{:e}\n", r.id, r.smiles, r.target).as_bytes());
    }
    hex::encode(h.finalize())
}

/// Column names for CSV input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub id: String,
    pub smiles: String,
    /// A column name, or a descriptor name computed from the structure when
    /// no such column exists.
    pub target: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            id: "id".into(),
            smiles: "smiles".into(),
            target: "target".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based data row (the header is row 0).
    pub row: usize,
    pub id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rejected: Vec<RejectedRow>,
}

impl LoadReport {
    pub fn is_clean(&self) -> bool {
        self.rejected.is_empty()
    }
}

impl std::fmt::Display for LoadReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} rows read, {} rejected", self.rows_read, self.rejected.len())?;
        for r in &self.rejected {
            writeln!(f, "  row {} ({}): {}", r.row, r.id, r.reason)?;
        }
        Ok(())
    }
}

pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<(Dataset, LoadReport), DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
    load_csv_from_reader(file, schema)
}

/// Reads a dataset, rejecting rows with unparseable SMILES or non-finite
/// targets into the report. Duplicate ids abort the load.
pub fn load_csv_from_reader<R: Read>(reader: R, schema: &CsvSchema) -> Result<(Dataset, LoadReport), DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| DataError::Csv(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col(&schema.id).ok_or_else(|| DataError::MissingColumn(schema.id.clone()))?;
    let smiles_col = col(&schema.smiles).ok_or_else(|| DataError::MissingColumn(schema.smiles.clone()))?;
    let target_col = col(&schema.target);
    if target_col.is_none() && !DESCRIPTOR_NAMES.contains(&schema.target.as_str()) {
        return Err(DataError::MissingColumn(schema.target.clone()));
    }
    let mut report = LoadReport::default();
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (k, row) in rdr.records().enumerate() {
        let row_no = k + 1;
        report.rows_read += 1;
        let row = row.map_err(|e| DataError::Csv(format!("row {row_no}: {e}")))?;
        let field = |c: usize| row.get(c).unwrap_or("").to_string();
        let id = field(id_col);
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicateId(id));
        }
        let smiles = field(smiles_col);
        let mut reject = |reason: String| {
            report.rejected.push(RejectedRow {
                row: row_no,
                id: id.clone(),
                reason,
            })
        };
        let graph = match parse_smiles(&smiles) {
            Ok(g) => g,
            Err(e) => {
                reject(format!("unparseable SMILES {smiles:?}: {e}"));
                continue;
            }
        };
        let target = match target_col {
            Some(c) => match field(c).parse::<f64>() {
                Ok(v) if v.is_finite() => v,
                _ => {
                    reject(format!("non-finite target {:?}", field(c)));
                    continue;
                }
            },
            None => descriptors(&graph).get(&schema.target).expect("descriptor name checked"),
        };
        records.push(Record { id, smiles, target });
    }
    Ok((Dataset::new(records, schema.target.clone())?, report))
}

/// Seeded draw of `n` records without replacement, in original order.
pub fn sample_subset(ds: &Dataset, n: usize, seed: u64) -> Result<Dataset, DataError> {
    if n > ds.len() {
        return Err(DataError::SubsetTooLarge { n, len: ds.len() });
    }
    let mut idx = Rng::new(seed).sample_indices(ds.len(), n);
    idx.sort_unstable();
    let records = idx.into_iter().map(|i| ds.records[i].clone()).collect();
    Dataset::new(records, ds.target_name.clone())
}
