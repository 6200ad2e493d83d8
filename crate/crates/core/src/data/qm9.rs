//! Extended-XYZ records from the QM9 distribution.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::chem::{parse_smiles, MolGraph};

/// Property columns of the header line, in file order.
pub const QM9_PROPERTIES: [&str; 15] = [
    "A", "B", "C", "mu", "alpha", "homo", "lumo", "gap", "r2", "zpve", "U0", "U", "H", "G", "Cv",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Qm9Record {
    pub id: u64,
    pub natoms: usize,
    pub properties: [f64; 15],
    pub smiles_gdb17: String,
    pub smiles_relaxed: String,
    pub inchi_gdb17: String,
    pub inchi_relaxed: String,
    /// Numeric tokens written with a `*^` exponent.
    pub fortran_tokens: usize,
}

impl Qm9Record {
    pub fn property(&self, name: &str) -> Option<f64> {
        QM9_PROPERTIES.iter().position(|p| *p == name).map(|i| self.properties[i])
    }

    pub fn graph(&self) -> Result<MolGraph, DataError> {
        parse_smiles(&self.smiles_relaxed).map_err(|e| DataError::InvalidSmiles(format!("{}: {e}", self.smiles_relaxed)))
    }
}

/// Rewrites a Mathematica-style exponent (`1.5*^-3`) to `1.5e-3`.
pub fn normalize_exponent(token: &str) -> std::borrow::Cow<'_, str> {
    if token.contains("*^") {
        token.replace("*^", "e").into()
    } else {
        token.into()
    }
}

fn number(token: &str, line: usize, column: usize, fortran: &mut usize) -> Result<f64, DataError> {
    if token.contains("*^") {
        *fortran += 1;
    }
    normalize_exponent(token)
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| DataError::UnparseableNumber {
            line,
            column,
            token: token.to_string(),
        })
}

pub fn parse_qm9_file(text: &str) -> Result<Qm9Record, DataError> {
    let lines: Vec<&str> = text.lines().collect();
    let header = |line: usize, msg: &str| DataError::MalformedHeader {
        line,
        msg: msg.to_string(),
    };
    let first = lines.first().ok_or_else(|| header(1, "empty file"))?.trim();
    let natoms: usize = first.parse().map_err(|_| header(1, "atom count is not an integer"))?;
    if natoms == 0 {
        return Err(header(1, "atom count is zero"));
    }
    let props_line = lines.get(1).ok_or_else(|| header(2, "missing property line"))?;
    let tokens: Vec<&str> = props_line.split_whitespace().collect();
    if tokens.len() != 17 {
        return Err(DataError::PropertyCountMismatch(tokens.len()));
    }
    let id: u64 = tokens[1].parse().map_err(|_| DataError::UnparseableNumber {
        line: 2,
        column: 2,
        token: tokens[1].to_string(),
    })?;
    let mut fortran = 0;
    let mut properties = [0.0; 15];
    for (k, tok) in tokens[2..].iter().enumerate() {
        properties[k] = number(tok, 2, k + 3, &mut fortran)?;
    }

    let atom_lines = lines
        .iter()
        .skip(2)
        .take_while(|l| l.split_whitespace().count() == 5 && l.split_whitespace().next().is_some_and(|t| t.chars().all(|c| c.is_ascii_alphabetic())))
        .count();
    if atom_lines != natoms {
        return Err(DataError::AtomCountMismatch {
            expected: natoms,
            found: atom_lines,
        });
    }
    for (k, line) in lines[2..2 + natoms].iter().enumerate() {
        for (c, tok) in line.split_whitespace().enumerate().skip(1) {
            number(tok, k + 3, c + 1, &mut fortran)?;
        }
    }
    let tail = 2 + natoms;
    let two_fields = |offset: usize, what: &str| -> Result<(String, String), DataError> {
        let line = tail + offset;
        let l = lines.get(line).ok_or_else(|| header(line + 1, &format!("missing {what} line")))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 2 {
            return Err(header(line + 1, &format!("{what} line needs two fields")));
        }
        Ok((f[0].to_string(), f[1].to_string()))
    };
    let (smiles_gdb17, smiles_relaxed) = two_fields(1, "SMILES")?;
    let (inchi_gdb17, inchi_relaxed) = two_fields(2, "InChI")?;
    let rec = Qm9Record {
        id,
        natoms,
        properties,
        smiles_gdb17,
        smiles_relaxed,
        inchi_gdb17,
        inchi_relaxed,
        fortran_tokens: fortran,
    };
    rec.graph()?;
    Ok(rec)
}

/// A file that could not be ingested.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectedFile {
    pub file: String,
    pub reason: String,
}

/// Parses every `*.xyz` file in `dir` in file-name order.
pub fn ingest_qm9_dir(dir: &Path) -> Result<(Vec<Qm9Record>, Vec<RejectedFile>), DataError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| DataError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "xyz"))
        .collect();
    paths.sort();
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for p in paths {
        let bytes = std::fs::read(&p).map_err(|e| DataError::Io(format!("{}: {e}", p.display())))?;
        let parsed = std::str::from_utf8(&bytes)
            .map_err(|_| DataError::CorruptFile("file is not UTF-8".into()))
            .and_then(parse_qm9_file);
        match parsed {
            Ok(r) => records.push(r),
            Err(e) => rejected.push(RejectedFile {
                file: p.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                reason: e.to_string(),
            }),
        }
    }
    Ok((records, rejected))
}
