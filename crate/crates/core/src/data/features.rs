use serde::{Deserialize, Serialize};

use super::DataError;
use crate::chem::{descriptors, MolGraph, DESCRIPTOR_NAMES};
use crate::num::Matrix;
use crate::selfies::{encode_selfies, one_hot_batch, Alphabet, TokenSequence};

/// SELFIES one-hot inputs for a set of molecules.
#[derive(Clone, Debug, PartialEq)]
pub struct Featurized {
    pub alphabet: Alphabet,
    pub max_len: usize,
    pub sequences: Vec<TokenSequence>,
    /// One row per molecule, `max_len · |alphabet|` columns.
    pub x: Matrix,
}

/// Alphabet and padded length that fix the input layout of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub alphabet: Alphabet,
    pub max_len: usize,
}

fn encode_all(graphs: &[MolGraph]) -> Result<Vec<TokenSequence>, DataError> {
    graphs.iter().map(|g| encode_selfies(g).map_err(DataError::from)).collect()
}

/// Builds the alphabet and max length from the molecules themselves.
pub fn featurize(graphs: &[MolGraph]) -> Result<Featurized, DataError> {
    let sequences = encode_all(graphs)?;
    let alphabet = Alphabet::build(&sequences)?;
    let max_len = sequences.iter().map(|s| s.len()).max().unwrap_or(0);
    let x = one_hot_batch(&sequences, &alphabet, max_len)?;
    Ok(Featurized {
        alphabet,
        max_len,
        sequences,
        x,
    })
}

/// Encodes with a fixed layout; tokens outside the alphabet or sequences
/// longer than `max_len` are an error.
pub fn featurize_with(graphs: &[MolGraph], spec: &EncodingSpec) -> Result<Featurized, DataError> {
    let sequences = encode_all(graphs)?;
    let x = one_hot_batch(&sequences, &spec.alphabet, spec.max_len)?;
    Ok(Featurized {
        alphabet: spec.alphabet.clone(),
        max_len: spec.max_len,
        sequences,
        x,
    })
}

impl Featurized {
    pub fn spec(&self) -> EncodingSpec {
        EncodingSpec {
            alphabet: self.alphabet.clone(),
            max_len: self.max_len,
        }
    }
}

/// Descriptor table, columns in `DESCRIPTOR_NAMES` order.
pub fn descriptor_matrix(graphs: &[MolGraph]) -> Matrix {
    let mut m = Matrix::zeros(graphs.len(), DESCRIPTOR_NAMES.len());
    for (i, g) in graphs.iter().enumerate() {
        m.row_mut(i).copy_from_slice(&descriptors(g).values());
    }
    m
}
