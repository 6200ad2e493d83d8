//! Molecular graphs for the QM9 organic subset: SMILES parsing and writing,
//! ring perception, descriptors and graph isomorphism.

mod descriptors;
mod isomorphism;
mod rings;
mod smiles;
pub mod tables;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use descriptors::{descriptors, mologp, tpsa, DescriptorVector, DESCRIPTOR_NAMES};
pub use isomorphism::is_isomorphic;
pub use rings::{perceive_rings, RingInfo};
pub use smiles::{parse_smiles, write_smiles};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    H,
    C,
    N,
    O,
    F,
}

impl Element {
    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Element> {
        Some(match s {
            "H" => Element::H,
            "C" => Element::C,
            "N" => Element::N,
            "O" => Element::O,
            "F" => Element::F,
            _ => return None,
        })
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::H => 1,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
        }
    }

    /// Standard atomic mass in g/mol.
    pub fn mass(self) -> f64 {
        match self {
            Element::H => 1.008,
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Bonding capacity (bond orders + hydrogens) for an element in a given
/// formal charge state, or `None` if the state is not supported.
pub fn allowed_valence(element: Element, charge: i8) -> Option<u8> {
    match (element, charge) {
        (Element::H, 0) => Some(1),
        (Element::C, 0) => Some(4),
        (Element::C, 1 | -1) => Some(3),
        (Element::N, 0) => Some(3),
        (Element::N, 1) => Some(4),
        (Element::N, -1) => Some(2),
        (Element::O, 0) => Some(2),
        (Element::O, 1) => Some(3),
        (Element::O, -1) => Some(1),
        (Element::F, 0) => Some(1),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
}

impl BondOrder {
    pub fn value(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn from_value(v: u8) -> Option<BondOrder> {
        match v {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    /// Hydrogens written inside a bracket atom.
    pub explicit_h: u8,
    /// Hydrogens added to satisfy the default valence.
    pub implicit_h: u8,
    /// Atom was written in lowercase (aromatic) form.
    pub aromatic: bool,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            formal_charge: 0,
            explicit_h: 0,
            implicit_h: 0,
            aromatic: false,
        }
    }

    pub fn total_h(&self) -> u8 {
        self.explicit_h + self.implicit_h
    }
}

/// A bond after Kekulé assignment. `aromatic` records that both ends were
/// written aromatic and the bond was part of the aromatic system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub aromatic: bool,
    pub in_ring: bool,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChemError {
    #[error("empty SMILES")]
    EmptyInput,
    #[error("non-ASCII input at byte {offset}")]
    NonAscii { offset: usize },
    #[error("unknown or unsupported element at byte {offset}: {symbol}")]
    UnknownElement { symbol: String, offset: usize },
    #[error("unexpected character {ch:?} at byte {offset}")]
    UnexpectedCharacter { ch: char, offset: usize },
    #[error("unbalanced parenthesis at byte {offset}")]
    UnbalancedParen { offset: usize },
    #[error("ring closure {label} opened at byte {offset} is never closed")]
    UnclosedRing { label: u32, offset: usize },
    #[error("bond would duplicate an existing bond or join an atom to itself at byte {offset}")]
    DuplicateBond { offset: usize },
    #[error("valence violation at byte {offset}: {reason}")]
    ValenceViolation { reason: String, offset: usize },
    #[error("molecule is not a single connected component (byte {offset})")]
    Disconnected { offset: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MolGraph {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    pub source_text: String,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl PartialEq for MolGraph {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms && self.bonds == other.bonds && self.source_text == other.source_text
    }
}

impl MolGraph {
    /// Builds a graph, checks that it is one connected component and sets
    /// the per-bond ring flags. Hydrogen counts are taken as given.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>, source_text: impl Into<String>) -> Result<Self, ChemError> {
        let mut mol = MolGraph {
            atoms,
            bonds,
            source_text: source_text.into(),
            adjacency: Vec::new(),
        };
        mol.rebuild_adjacency();
        if !mol.is_connected() {
            return Err(ChemError::Disconnected { offset: 0 });
        }
        let info = perceive_rings(&mol);
        for (bond, flag) in mol.bonds.iter_mut().zip(info.in_ring) {
            bond.in_ring = flag;
        }
        Ok(mol)
    }

    /// The graph with no atoms.
    pub fn empty() -> Self {
        MolGraph {
            atoms: Vec::new(),
            bonds: Vec::new(),
            source_text: String::new(),
            adjacency: Vec::new(),
        }
    }

    fn rebuild_adjacency(&mut self) {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for (k, b) in self.bonds.iter().enumerate() {
            adj[b.a].push((b.b, k));
            adj[b.b].push((b.a, k));
        }
        self.adjacency = adj;
    }

    /// Re-creates the derived adjacency after deserialization.
    pub fn reindex(mut self) -> Self {
        self.rebuild_adjacency();
        self
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// `(neighbor, bond index)` pairs, in bond insertion order.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    /// Neighbors that are not hydrogen atoms.
    pub fn heavy_degree(&self, atom: usize) -> usize {
        self.adjacency[atom]
            .iter()
            .filter(|(n, _)| self.atoms[*n].element != Element::H)
            .count()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|(n, _)| *n == b)
            .map(|(_, k)| &self.bonds[*k])
    }

    pub fn bond_order_sum(&self, atom: usize) -> u8 {
        self.adjacency[atom]
            .iter()
            .map(|(_, k)| self.bonds[*k].order.value())
            .sum()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.atoms.len();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(a) = stack.pop() {
            for &(nb, _) in &self.adjacency[a] {
                if !seen[nb] {
                    seen[nb] = true;
                    count += 1;
                    stack.push(nb);
                }
            }
        }
        count == n
    }

    /// Checks every atom's bond orders plus hydrogens against
    /// [`allowed_valence`].
    pub fn check_valence(&self) -> Result<(), ChemError> {
        for (i, atom) in self.atoms.iter().enumerate() {
            let cap = allowed_valence(atom.element, atom.formal_charge).ok_or_else(|| {
                ChemError::ValenceViolation {
                    reason: format!("atom {i}: unsupported state {}{:+}", atom.element, atom.formal_charge),
                    offset: 0,
                }
            })?;
            let used = self.bond_order_sum(i) + atom.total_h();
            if used != cap {
                return Err(ChemError::ValenceViolation {
                    reason: format!("atom {i} ({}) uses {used} of {cap}", atom.element),
                    offset: 0,
                });
            }
        }
        Ok(())
    }

    /// Heavy atoms plus hydrogens.
    pub fn formula_counts(&self) -> [usize; 5] {
        let mut c = [0usize; 5];
        for a in &self.atoms {
            c[a.element as usize] += 1;
            c[Element::H as usize] += a.total_h() as usize;
        }
        c
    }
}
