//! Deterministic stand-in corpus of small neutral molecules built from
//! random SELFIES strings.

use std::collections::HashMap;

use super::{DataError, Dataset, Record};
use crate::chem::{descriptors, is_isomorphic, write_smiles, Element, MolGraph, DESCRIPTOR_NAMES};
use crate::num::Rng;
use crate::selfies::{decode_selfies, Token, TokenSequence};

const HEAVY_MIN: usize = 4;
const HEAVY_MAX: usize = 9;

/// Weighted token pool: carbon dominates, as in QM9.
fn token_pool() -> Vec<(&'static str, u32)> {
    vec![
        ("[C]", 30),
        ("[=C]", 6),
        ("[#C]", 2),
        ("[N]", 8),
        ("[=N]", 3),
        ("[#N]", 1),
        ("[O]", 8),
        ("[=O]", 4),
        ("[F]", 1),
        ("[Ring1]", 5),
        ("[=Ring1]", 1),
        ("[Branch1]", 5),
        ("[=Branch1]", 1),
    ]
}

fn random_sequence(rng: &mut Rng, pool: &[(Token, u32)], len: usize) -> TokenSequence {
    let total: u32 = pool.iter().map(|p| p.1).sum();
    let tokens = (0..len)
        .map(|_| {
            let mut r = rng.below(total as usize) as u32;
            let mut k = 0;
            while r >= pool[k].1 {
                r -= pool[k].1;
                k += 1;
            }
            pool[k].0
        })
        .collect();
    TokenSequence::new(tokens)
}

fn heavy_atoms(g: &MolGraph) -> usize {
    g.atoms.iter().filter(|a| a.element != Element::H).count()
}

/// `n` distinct molecules with 4 to 9 heavy atoms.
pub fn synthetic_molecules(n: usize, seed: u64) -> Vec<MolGraph> {
    let pool: Vec<(Token, u32)> = token_pool()
        .into_iter()
        .map(|(s, w)| (s.parse().expect("valid token"), w))
        .collect();
    let mut rng = Rng::new(seed);
    let mut out: Vec<MolGraph> = Vec::with_capacity(n);
    let mut buckets: HashMap<(Vec<usize>, usize, u64), Vec<usize>> = HashMap::new();
    while out.len() < n {
        let len = 4 + rng.below(12);
        let g = decode_selfies(&random_sequence(&mut rng, &pool, len));
        if !(HEAVY_MIN..=HEAVY_MAX).contains(&heavy_atoms(&g)) {
            continue;
        }
        let key = (g.formula_counts().to_vec(), g.num_bonds(), descriptors(&g).mologp.to_bits());
        let bucket = buckets.entry(key).or_default();
        if bucket.iter().any(|&i| is_isomorphic(&out[i], &g)) {
            continue;
        }
        bucket.push(out.len());
        out.push(g);
    }
    out
}

/// Synthetic molecules labeled with one descriptor.
pub fn synthetic_dataset(n: usize, seed: u64, target: &str) -> Result<Dataset, DataError> {
    if !DESCRIPTOR_NAMES.contains(&target) {
        return Err(DataError::MissingColumn(target.into()));
    }
    let records = synthetic_molecules(n, seed)
        .iter()
        .enumerate()
        .map(|(i, g)| Record {
            id: format!("syn{i:05}"),
            smiles: write_smiles(g),
            target: descriptors(g).get(target).expect("checked name"),
        })
        .collect();
    Dataset::new(records, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn corpus_is_distinct_valid_and_seeded() {
        let a = synthetic_dataset(200, 1, "mologp").unwrap();
        assert_eq!(a, synthetic_dataset(200, 1, "mologp").unwrap());
        assert_ne!(a.content_hash(), synthetic_dataset(200, 2, "mologp").unwrap().content_hash());
        let gs = a.graphs().unwrap();
        for (i, g) in gs.iter().enumerate() {
            g.check_valence().unwrap();
            assert!(g.is_connected());
            assert!((HEAVY_MIN..=HEAVY_MAX).contains(&heavy_atoms(g)));
            assert!(g.atoms.iter().all(|a| a.formal_charge == 0));
            assert_eq!(descriptors(g).mologp, a.records()[i].target);
        }
        for i in 0..40 {
            for j in i + 1..40 {
                assert!(!is_isomorphic(&gs[i], &gs[j]));
            }
        }
        let t = a.targets();
        assert!(t.iter().any(|&v| v != t[0]));
        assert!(parse_smiles(&a.records()[0].smiles).is_ok());
        assert!(synthetic_dataset(5, 1, "dipole").is_err());
    }
}
