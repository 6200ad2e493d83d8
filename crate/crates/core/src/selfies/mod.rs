//! SELFIES encoding restricted to the QM9 element set.
//!
//! Every token sequence over the alphabet decodes to a valence-consistent
//! molecule: bond demands are clamped to what the atoms can still accept,
//! and surplus branches, rings and atoms are dropped.

mod alphabet;
mod token;

pub use alphabet::{one_hot, one_hot_batch, Alphabet, OneHotMatrix};
pub use token::{Token, TokenSequence, INDEX_TOKENS};

use crate::chem::{allowed_valence, write_smiles, Atom, Bond, BondOrder, Element, MolGraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelfiesError {
    #[error("unknown token {0}")]
    UnknownToken(String),
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("cannot build an alphabet from an empty corpus")]
    EmptyCorpus,
    #[error("sequence of {len} tokens exceeds max_len {max_len}")]
    SequenceTooLong { len: usize, max_len: usize },
    #[error("malformed one-hot row {0}")]
    MalformedOneHot(usize),
    #[error("alphabet file: {0}")]
    AlphabetFile(String),
}

struct Builder {
    atoms: Vec<(Element, i8, u8)>,
    used: Vec<u8>,
    bonds: Vec<(usize, usize, u8)>,
}

impl Builder {
    fn free(&self, i: usize) -> u8 {
        self.atoms[i].2 - self.used[i]
    }

    fn add_atom(&mut self, element: Element, charge: i8) -> usize {
        let cap = allowed_valence(element, charge).expect("token table only holds supported atoms");
        self.atoms.push((element, charge, cap));
        self.used.push(0);
        self.atoms.len() - 1
    }

    fn bond(&mut self, a: usize, b: usize, order: u8) {
        self.used[a] += order;
        self.used[b] += order;
        match self.bonds.iter_mut().find(|(x, y, _)| (*x, *y) == (a, b) || (*x, *y) == (b, a)) {
            Some(existing) => existing.2 += order,
            None => self.bonds.push((a, b, order)),
        }
    }

    /// Reads a `size`-digit base-16 index from the front of `toks`.
    fn read_index(toks: &[Token], size: u8) -> (usize, usize) {
        let n = (size as usize).min(toks.len());
        let q = toks[..n].iter().fold(0, |acc, t| acc * 16 + t.index_value());
        (q, n)
    }

    /// Derives `toks` starting from `root` (if any) with `state` free valence.
    fn derive(&mut self, toks: &[Token], mut state: Option<u8>, root: Option<usize>) {
        let mut prev = root;
        let mut i = 0;
        while i < toks.len() {
            if state == Some(0) {
                break;
            }
            let tok = toks[i];
            i += 1;
            match tok {
                Token::Pad => {}
                Token::Atom { bond, element, charge } => {
                    let new = self.add_atom(element, charge);
                    let cap = self.atoms[new].2;
                    match (prev, state) {
                        (Some(p), Some(s)) => {
                            let order = bond.min(s).min(cap);
                            self.bond(p, new, order);
                            state = Some(cap - order);
                        }
                        _ => state = Some(cap),
                    }
                    prev = Some(new);
                }
                Token::Branch { bond, size } => {
                    let (Some(p), Some(s)) = (prev, state) else { continue };
                    if s <= 1 {
                        continue;
                    }
                    let (q, n) = Self::read_index(&toks[i..], size);
                    i += n;
                    let end = (i + q + 1).min(toks.len());
                    let before = self.used[p];
                    self.derive(&toks[i..end], Some((s - 1).min(bond)), Some(p));
                    let formed = self.used[p] - before;
                    state = Some(s.saturating_sub(formed).min(self.free(p)));
                    i = end;
                }
                Token::Ring { bond, size } => {
                    let (Some(p), Some(s)) = (prev, state) else { continue };
                    let (q, n) = Self::read_index(&toks[i..], size);
                    i += n;
                    let target = p.saturating_sub(q + 1);
                    if target == p {
                        continue;
                    }
                    let existing = self
                        .bonds
                        .iter()
                        .find(|(x, y, _)| (*x, *y) == (p, target) || (*x, *y) == (target, p))
                        .map_or(0, |b| b.2);
                    let order = bond.min(s).min(self.free(target)).min(3 - existing);
                    if order == 0 {
                        continue;
                    }
                    self.bond(p, target, order);
                    state = Some(s - order);
                }
            }
        }
    }
}

/// Decodes any token sequence into a valid molecule. An input without atom
/// tokens yields the empty graph.
pub fn decode_selfies(seq: &TokenSequence) -> MolGraph {
    let mut b = Builder {
        atoms: Vec::new(),
        used: Vec::new(),
        bonds: Vec::new(),
    };
    b.derive(&seq.tokens, None, None);
    let atoms = b
        .atoms
        .iter()
        .zip(&b.used)
        .map(|(&(element, charge, cap), &used)| Atom {
            formal_charge: charge,
            implicit_h: cap - used,
            ..Atom::new(element)
        })
        .collect();
    let bonds = b
        .bonds
        .iter()
        .map(|&(a, b, o)| Bond {
            a,
            b,
            order: BondOrder::from_value(o).expect("orders are clamped to 1..=3"),
            aromatic: false,
            in_ring: false,
        })
        .collect();
    if b.atoms.is_empty() {
        return MolGraph::empty();
    }
    let mut mol = MolGraph::new(atoms, bonds, "").expect("derivation builds a connected graph");
    mol.source_text = write_smiles(&mol);
    mol
}

/// Convenience wrapper: parses the bracket string, then decodes it.
pub fn decode_str(text: &str) -> Result<MolGraph, SelfiesError> {
    Ok(decode_selfies(&text.parse()?))
}

fn push_index(out: &mut Vec<Token>, q: usize, size: u8) {
    if size == 2 {
        out.push(Token::from_index_value(q / 16));
    }
    out.push(Token::from_index_value(q % 16));
}

fn index_size(q: usize) -> Result<u8, SelfiesError> {
    match q {
        0..=15 => Ok(1),
        16..=255 => Ok(2),
        _ => Err(SelfiesError::UnsupportedFeature(format!("index {q} needs more than two digits"))),
    }
}

/// Encodes a valence-valid molecule. Hydrogens are implicit in the tokens.
pub fn encode_selfies(mol: &MolGraph) -> Result<TokenSequence, SelfiesError> {
    if mol.num_atoms() == 0 {
        return Ok(TokenSequence::default());
    }
    for (i, a) in mol.atoms.iter().enumerate() {
        if !Token::is_supported_atom(a.element, a.formal_charge) {
            return Err(SelfiesError::UnsupportedFeature(format!(
                "atom {i}: {}{:+}",
                a.element, a.formal_charge
            )));
        }
    }
    mol.check_valence()
        .map_err(|e| SelfiesError::UnsupportedFeature(e.to_string()))?;

    // DFS spanning tree; neighbors in ascending index order.
    let n = mol.num_atoms();
    let mut rank = vec![usize::MAX; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut closures: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut stack = vec![(0usize, usize::MAX)];
    let mut next = 0;
    while let Some((v, parent)) = stack.pop() {
        if rank[v] != usize::MAX {
            continue;
        }
        rank[v] = next;
        next += 1;
        if parent != usize::MAX {
            children[parent].push(v);
        }
        let mut nbrs: Vec<usize> = mol.neighbors(v).iter().map(|&(w, _)| w).collect();
        nbrs.sort_unstable();
        for &w in nbrs.iter().rev() {
            if rank[w] == usize::MAX {
                stack.push((w, v));
            }
        }
    }
    // A non-tree bond closes at whichever end is visited later.
    for b in &mol.bonds {
        let (x, y) = (b.a, b.b);
        let tree = children[x].contains(&y) || children[y].contains(&x);
        if !tree {
            let (early, late) = if rank[x] < rank[y] { (x, y) } else { (y, x) };
            closures[late].push(early);
        }
    }
    let order = |a: usize, b: usize| mol.bond_between(a, b).map_or(1, |b| b.order.value());

    fn emit(
        v: usize,
        bond: u8,
        out: &mut Vec<Token>,
        ctx: &(&MolGraph, &[usize], &[Vec<usize>], &[Vec<usize>], &dyn Fn(usize, usize) -> u8),
    ) -> Result<(), SelfiesError> {
        let (mol, rank, children, closures, order) = *ctx;
        let a = &mol.atoms[v];
        out.push(Token::atom(a.element, a.formal_charge, bond));
        let mut cl = closures[v].clone();
        cl.sort_unstable_by_key(|&e| std::cmp::Reverse(rank[e]));
        for e in cl {
            let q = rank[v] - rank[e] - 1;
            let size = index_size(q)?;
            out.push(Token::Ring { bond: order(v, e), size });
            push_index(out, q, size);
        }
        let kids = &children[v];
        for (k, &c) in kids.iter().enumerate() {
            let o = order(v, c);
            if k + 1 == kids.len() {
                emit(c, o, out, ctx)?;
            } else {
                let mut sub = Vec::new();
                emit(c, o, &mut sub, ctx)?;
                let q = sub.len() - 1;
                let size = index_size(q)?;
                out.push(Token::Branch { bond: o, size });
                push_index(out, q, size);
                out.extend(sub);
            }
        }
        Ok(())
    }

    let mut out = Vec::new();
    emit(0, 1, &mut out, &(mol, &rank, &children, &closures, &order))?;
    Ok(TokenSequence::new(out))
}
