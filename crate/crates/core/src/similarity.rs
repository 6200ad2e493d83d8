//! Circular fingerprints, Tanimoto similarity, latent-space neighbors and
//! Pearson correlation.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::chem::MolGraph;
use crate::gp::{embed, GpError, TrainedDkl};
use crate::num::Matrix;

pub const DEFAULT_RADIUS: usize = 2;
pub const DEFAULT_NBITS: usize = 2048;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimilarityError {
    #[error("fingerprints have different widths ({0} vs {1})")]
    WidthMismatch(usize, usize),
    #[error("vectors have lengths {0} and {1}; need equal lengths of at least 2")]
    LengthMismatch(usize, usize),
    #[error("input is constant; correlation is undefined")]
    ConstantInput,
    #[error("anchor {0} is not in the corpus")]
    AnchorNotFound(String),
    #[error(transparent)]
    Model(#[from] GpError),
}

/// splitmix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Order-sensitive hash of a sequence of words.
pub fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(mix64(0x9e37_79b9_7f4a_7c15 ^ words.len() as u64), |h, &w| mix64(h ^ w))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    words: Vec<u64>,
    pub nbits: usize,
    pub radius: usize,
}

impl Fingerprint {
    pub fn empty(nbits: usize, radius: usize) -> Self {
        Fingerprint {
            words: vec![0; nbits.div_ceil(64)],
            nbits,
            radius,
        }
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn on_bits(&self) -> Vec<usize> {
        (0..self.nbits).filter(|&b| self.get(b)).collect()
    }
}

/// Atom invariant hashed at round 0.
fn atom_invariant(mol: &MolGraph, i: usize) -> u64 {
    let a = &mol.atoms[i];
    hash_words(&[
        a.element.atomic_number() as u64,
        (a.formal_charge as i64) as u64,
        mol.heavy_degree(i) as u64,
        a.total_h() as u64,
    ])
}

/// Environment identifiers for radius 0..=radius. An environment whose bond
/// set did not grow, or that duplicates an earlier environment's bond set,
/// is dropped.
pub fn environment_ids(mol: &MolGraph, radius: usize) -> Vec<u64> {
    let n = mol.num_atoms();
    let mut ids: Vec<u64> = (0..n).map(|i| atom_invariant(mol, i)).collect();
    let mut out = ids.clone();
    let mut envs: Vec<Vec<bool>> = vec![vec![false; mol.num_bonds()]; n];
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    for round in 1..=radius {
        let mut next_ids = Vec::with_capacity(n);
        let mut next_envs = Vec::with_capacity(n);
        for i in 0..n {
            let mut nbrs: Vec<(u64, u64)> = mol
                .neighbors(i)
                .iter()
                .map(|&(j, k)| (mol.bonds[k].order.value() as u64, ids[j]))
                .collect();
            nbrs.sort_unstable();
            let mut words = vec![round as u64, ids[i]];
            for (o, id) in nbrs {
                words.extend([o, id]);
            }
            next_ids.push(hash_words(&words));
            let mut env = envs[i].clone();
            for &(j, k) in mol.neighbors(i) {
                env[k] = true;
                for (e, &b) in env.iter_mut().zip(&envs[j]) {
                    *e |= b;
                }
            }
            next_envs.push(env);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (next_ids[i], i));
        for i in order {
            if next_envs[i] == envs[i] || !seen.insert(next_envs[i].clone()) {
                continue;
            }
            out.push(next_ids[i]);
        }
        ids = next_ids;
        envs = next_envs;
    }
    out
}

/// ECFP-style fingerprint; identifiers are folded by `id mod nbits`.
pub fn circular_fingerprint(mol: &MolGraph, radius: usize, nbits: usize) -> Fingerprint {
    let mut fp = Fingerprint::empty(nbits, radius);
    for id in environment_ids(mol, radius) {
        fp.set((id % nbits as u64) as usize);
    }
    fp
}

pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, SimilarityError> {
    if a.nbits != b.nbits {
        return Err(SimilarityError::WidthMismatch(a.nbits, b.nbits));
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub ids: Vec<String>,
    pub values: Matrix,
}

/// Pairwise Tanimoto over the upper triangle, mirrored.
pub fn similarity_matrix(ids: Vec<String>, fps: &[Fingerprint]) -> Result<SimilarityMatrix, SimilarityError> {
    let n = fps.len();
    if ids.len() != n {
        return Err(SimilarityError::LengthMismatch(ids.len(), n));
    }
    let mut values = Matrix::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            let t = tanimoto(&fps[i], &fps[j])?;
            values[(i, j)] = t;
            values[(j, i)] = t;
        }
    }
    Ok(SimilarityMatrix { ids, values })
}

/// The `k` rows of `z` nearest to row `anchor`, ascending by Euclidean
/// distance, ties broken by lower index. The anchor itself is excluded.
pub fn nearest_rows(z: &Matrix, anchor: usize, k: usize) -> Result<Vec<(usize, f64)>, SimilarityError> {
    if anchor >= z.rows() {
        return Err(SimilarityError::AnchorNotFound(anchor.to_string()));
    }
    let a = z.row(anchor);
    let mut d: Vec<(usize, f64)> = (0..z.rows())
        .filter(|&i| i != anchor)
        .map(|i| {
            let s: f64 = z.row(i).iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum();
            (i, s.sqrt())
        })
        .collect();
    d.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
    d.truncate(k);
    Ok(d)
}

/// Nearest neighbors of `anchor` in the model's latent space.
pub fn latent_neighbors(
    m: &TrainedDkl,
    x: &Matrix,
    anchor: usize,
    k: usize,
) -> Result<Vec<(usize, f64)>, SimilarityError> {
    nearest_rows(&embed(&m.params, x)?, anchor, k)
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, SimilarityError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(SimilarityError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(SimilarityError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
