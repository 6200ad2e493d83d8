//! SMILES reader and writer for the QM9 organic subset.
//!
//! Supported: organic atoms `C N O F`, aromatic `c n o`, bracket atoms over
//! `H C N O F c n o` with hydrogen counts and charges, bonds `- = # :`,
//! branches, ring closures `0-9` and `%nn`. Stereo marks are accepted and
//! dropped. Aromatic input is kekulized before the graph is returned.

use std::collections::BTreeMap;

use super::{allowed_valence, Atom, Bond, BondOrder, ChemError, Element, MolGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
}

#[derive(Debug)]
struct RawAtom {
    element: Element,
    charge: i8,
    /// `Some` for bracket atoms.
    hcount: Option<u8>,
    aromatic: bool,
    offset: usize,
}

#[derive(Debug)]
struct RawBond {
    a: usize,
    b: usize,
    /// `None` is an implicit bond (single, or aromatic between aromatic atoms).
    sym: Option<BondSym>,
}

struct OpenRing {
    atom: usize,
    sym: Option<BondSym>,
    offset: usize,
}

pub fn parse_smiles(text: &str) -> Result<MolGraph, ChemError> {
    if text.is_empty() {
        return Err(ChemError::EmptyInput);
    }
    if let Some(offset) = text.bytes().position(|b| !b.is_ascii()) {
        return Err(ChemError::NonAscii { offset });
    }
    let bytes = text.as_bytes();
    let mut atoms: Vec<RawAtom> = Vec::new();
    let mut bonds: Vec<RawBond> = Vec::new();
    let mut prev: Option<usize> = None;
    let mut branches: Vec<(usize, usize)> = Vec::new();
    let mut pending: Option<(BondSym, usize)> = None;
    let mut rings: BTreeMap<u32, OpenRing> = BTreeMap::new();
    let mut warned_stereo = false;

    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            'C' | 'N' | 'O' | 'F' | 'c' | 'n' | 'o' => {
                if c == 'C' && bytes.get(i + 1) == Some(&b'l') {
                    return Err(ChemError::UnknownElement {
                        symbol: "Cl".into(),
                        offset: i,
                    });
                }
                let element = Element::from_symbol(&c.to_ascii_uppercase().to_string()).unwrap();
                let idx = atoms.len();
                atoms.push(RawAtom {
                    element,
                    charge: 0,
                    hcount: None,
                    aromatic: c.is_ascii_lowercase(),
                    offset: start,
                });
                attach(&mut bonds, &mut prev, &mut pending, idx, &atoms)?;
                i += 1;
            }
            '[' => {
                let (raw, next) = parse_bracket(bytes, i, &mut warned_stereo)?;
                let idx = atoms.len();
                atoms.push(raw);
                attach(&mut bonds, &mut prev, &mut pending, idx, &atoms)?;
                i = next;
            }
            '(' => {
                let p = prev.ok_or(ChemError::UnbalancedParen { offset: i })?;
                branches.push((p, i));
                i += 1;
            }
            ')' => {
                let (p, _) = branches.pop().ok_or(ChemError::UnbalancedParen { offset: i })?;
                if pending.is_some() {
                    return Err(ChemError::UnexpectedCharacter { ch: ')', offset: i });
                }
                prev = Some(p);
                i += 1;
            }
            '-' | '=' | '#' | ':' | '/' | '\\' => {
                if prev.is_none() || pending.is_some() {
                    return Err(ChemError::UnexpectedCharacter { ch: c, offset: i });
                }
                let sym = match c {
                    '=' => BondSym::Double,
                    '#' => BondSym::Triple,
                    ':' => BondSym::Aromatic,
                    '/' | '\\' => {
                        if !warned_stereo {
                            log::warn!("ignoring bond stereo marks in {text:?}");
                            warned_stereo = true;
                        }
                        BondSym::Single
                    }
                    _ => BondSym::Single,
                };
                pending = Some((sym, i));
                i += 1;
            }
            '0'..='9' | '%' => {
                let (label, next) = if c == '%' {
                    let digits = bytes.get(i + 1..i + 3).filter(|d| d.iter().all(u8::is_ascii_digit));
                    let d = digits.ok_or(ChemError::UnexpectedCharacter { ch: '%', offset: i })?;
                    (((d[0] - b'0') * 10 + (d[1] - b'0')) as u32, i + 3)
                } else {
                    ((bytes[i] - b'0') as u32, i + 1)
                };
                let atom = prev.ok_or(ChemError::UnexpectedCharacter { ch: c, offset: i })?;
                let sym = pending.take().map(|(s, _)| s);
                match rings.remove(&label) {
                    Some(open) => {
                        if open.atom == atom || bonds.iter().any(|b| same_pair(b, open.atom, atom)) {
                            return Err(ChemError::DuplicateBond { offset: i });
                        }
                        bonds.push(RawBond {
                            a: open.atom,
                            b: atom,
                            sym: sym.or(open.sym),
                        });
                    }
                    None => {
                        rings.insert(label, OpenRing { atom, sym, offset: i });
                    }
                }
                i = next;
            }
            '.' => return Err(ChemError::Disconnected { offset: i }),
            'H' | 'B' | 'S' | 'P' | 'I' | 'K' | 's' | 'p' | 'b' => {
                return Err(ChemError::UnknownElement {
                    symbol: c.to_string(),
                    offset: i,
                })
            }
            _ => return Err(ChemError::UnexpectedCharacter { ch: c, offset: i }),
        }
    }
    if let Some((_, offset)) = branches.last() {
        return Err(ChemError::UnbalancedParen { offset: *offset });
    }
    if let Some((label, open)) = rings.iter().min_by_key(|(_, r)| r.offset) {
        return Err(ChemError::UnclosedRing {
            label: *label,
            offset: open.offset,
        });
    }
    if let Some((_, offset)) = pending {
        return Err(ChemError::UnexpectedCharacter {
            ch: bytes[offset] as char,
            offset,
        });
    }
    if atoms.is_empty() {
        return Err(ChemError::EmptyInput);
    }
    build_graph(text, atoms, bonds)
}

fn same_pair(b: &RawBond, x: usize, y: usize) -> bool {
    (b.a == x && b.b == y) || (b.a == y && b.b == x)
}

fn attach(
    bonds: &mut Vec<RawBond>,
    prev: &mut Option<usize>,
    pending: &mut Option<(BondSym, usize)>,
    idx: usize,
    atoms: &[RawAtom],
) -> Result<(), ChemError> {
    if let Some(p) = *prev {
        bonds.push(RawBond {
            a: p,
            b: idx,
            sym: pending.take().map(|(s, _)| s),
        });
    } else if let Some((_, offset)) = pending.take() {
        return Err(ChemError::UnexpectedCharacter {
            ch: '-',
            offset: offset.min(atoms[idx].offset),
        });
    }
    *prev = Some(idx);
    Ok(())
}

fn parse_bracket(bytes: &[u8], open: usize, warned: &mut bool) -> Result<(RawAtom, usize), ChemError> {
    let close = bytes[open..]
        .iter()
        .position(|&b| b == b']')
        .map(|p| open + p)
        .ok_or(ChemError::UnexpectedCharacter { ch: '[', offset: open })?;
    let body = &bytes[open + 1..close];
    let mut j = 0;
    while j < body.len() && body[j].is_ascii_digit() {
        j += 1;
    }
    if j > 0 {
        log::warn!("ignoring isotope label at byte {open}");
    }
    let sym_start = j;
    if j >= body.len() || !body[j].is_ascii_alphabetic() {
        return Err(ChemError::UnknownElement {
            symbol: String::new(),
            offset: open + 1 + j,
        });
    }
    j += 1;
    if j < body.len() && body[j].is_ascii_lowercase() && body[sym_start].is_ascii_uppercase() {
        // Two-letter symbols (Cl, Br, Si, ...) are outside the supported set.
        let sym = String::from_utf8_lossy(&body[sym_start..=j]).into_owned();
        return Err(ChemError::UnknownElement {
            symbol: sym,
            offset: open + 1 + sym_start,
        });
    }
    let sym_char = body[sym_start] as char;
    let aromatic = sym_char.is_ascii_lowercase();
    let element = Element::from_symbol(&sym_char.to_ascii_uppercase().to_string())
        .filter(|e| !(aromatic && matches!(e, Element::H | Element::F)))
        .ok_or_else(|| ChemError::UnknownElement {
            symbol: sym_char.to_string(),
            offset: open + 1 + sym_start,
        })?;
    while j < body.len() && body[j] == b'@' {
        if !*warned {
            log::warn!("ignoring chirality marks");
            *warned = true;
        }
        j += 1;
    }
    let mut hcount = 0u8;
    if j < body.len() && body[j] == b'H' {
        j += 1;
        hcount = 1;
        if j < body.len() && body[j].is_ascii_digit() {
            hcount = body[j] - b'0';
            j += 1;
        }
    }
    let mut charge: i32 = 0;
    if j < body.len() && (body[j] == b'+' || body[j] == b'-') {
        let sign = if body[j] == b'+' { 1 } else { -1 };
        let sign_byte = body[j];
        j += 1;
        if j < body.len() && body[j].is_ascii_digit() {
            charge = sign * (body[j] - b'0') as i32;
            j += 1;
        } else {
            charge = sign;
            while j < body.len() && body[j] == sign_byte {
                charge += sign;
                j += 1;
            }
        }
    }
    if j < body.len() && body[j] == b':' {
        j += 1;
        while j < body.len() && body[j].is_ascii_digit() {
            j += 1;
        }
    }
    if j != body.len() {
        return Err(ChemError::UnexpectedCharacter {
            ch: body[j] as char,
            offset: open + 1 + j,
        });
    }
    let charge = i8::try_from(charge).unwrap_or(i8::MAX);
    Ok((
        RawAtom {
            element,
            charge,
            hcount: Some(hcount),
            aromatic,
            offset: open,
        },
        close + 1,
    ))
}

fn build_graph(text: &str, raw_atoms: Vec<RawAtom>, raw_bonds: Vec<RawBond>) -> Result<MolGraph, ChemError> {
    let n = raw_atoms.len();
    // Aromatic bonds count as single sigma bonds until kekulized.
    let is_arom_bond = |b: &RawBond| match b.sym {
        Some(BondSym::Aromatic) => true,
        None => raw_atoms[b.a].aromatic && raw_atoms[b.b].aromatic,
        _ => false,
    };
    let sym_order = |s: Option<BondSym>| match s {
        Some(BondSym::Double) => 2u8,
        Some(BondSym::Triple) => 3,
        _ => 1,
    };
    let mut sigma = vec![0u8; n];
    for b in &raw_bonds {
        let v = sym_order(b.sym);
        sigma[b.a] += v;
        sigma[b.b] += v;
    }

    let mut hydrogens = vec![0u8; n];
    let mut needs_pi = vec![false; n];
    for (i, a) in raw_atoms.iter().enumerate() {
        let cap = allowed_valence(a.element, a.charge).ok_or_else(|| ChemError::ValenceViolation {
            reason: format!("unsupported charge state {}{:+}", a.element, a.charge),
            offset: a.offset,
        })?;
        let h = match a.hcount {
            Some(h) => h,
            None if a.aromatic => cap.saturating_sub(sigma[i] + 1),
            None => cap.checked_sub(sigma[i]).ok_or_else(|| ChemError::ValenceViolation {
                reason: format!("{} has bond order {} above valence {cap}", a.element, sigma[i]),
                offset: a.offset,
            })?,
        };
        let free = cap as i16 - sigma[i] as i16 - h as i16;
        let ok = if a.aromatic { free == 0 || free == 1 } else { free == 0 };
        if !ok {
            return Err(ChemError::ValenceViolation {
                reason: format!(
                    "{} with {} bond order and {h} H does not fill valence {cap}",
                    a.element, sigma[i]
                ),
                offset: a.offset,
            });
        }
        hydrogens[i] = h;
        needs_pi[i] = a.aromatic && free == 1;
    }

    let arom_edges: Vec<usize> = (0..raw_bonds.len()).filter(|&k| is_arom_bond(&raw_bonds[k])).collect();
    let mut doubled = vec![false; raw_bonds.len()];
    if needs_pi.iter().any(|&x| x) {
        let mut matched = vec![false; n];
        if !kekulize(&raw_bonds, &arom_edges, &needs_pi, &mut matched, &mut doubled) {
            let offset = raw_atoms
                .iter()
                .zip(&needs_pi)
                .find(|(_, &p)| p)
                .map_or(0, |(a, _)| a.offset);
            return Err(ChemError::ValenceViolation {
                reason: "no Kekulé structure for the aromatic system".into(),
                offset,
            });
        }
    }

    let atoms: Vec<Atom> = raw_atoms
        .iter()
        .zip(&hydrogens)
        .map(|(a, &h)| Atom {
            element: a.element,
            formal_charge: a.charge,
            explicit_h: if a.hcount.is_some() { h } else { 0 },
            implicit_h: if a.hcount.is_some() { 0 } else { h },
            aromatic: a.aromatic,
        })
        .collect();
    let bonds: Vec<Bond> = raw_bonds
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let aromatic = is_arom_bond(b);
            let order = if aromatic {
                if doubled[k] {
                    BondOrder::Double
                } else {
                    BondOrder::Single
                }
            } else {
                BondOrder::from_value(sym_order(b.sym)).unwrap()
            };
            Bond {
                a: b.a,
                b: b.b,
                order,
                aromatic,
                in_ring: false,
            }
        })
        .collect();
    let first_offset = raw_atoms.last().map_or(0, |a| a.offset);
    let mol = MolGraph::new(atoms, bonds, text).map_err(|e| match e {
        ChemError::Disconnected { .. } => ChemError::Disconnected { offset: first_offset },
        other => other,
    })?;
    if let Err(ChemError::ValenceViolation { reason, .. }) = mol.check_valence() {
        return Err(ChemError::ValenceViolation { reason, offset: 0 });
    }
    Ok(mol)
}

/// Perfect matching of the atoms that need a double bond over aromatic
/// edges, by backtracking on the lowest unmatched atom.
fn kekulize(
    bonds: &[RawBond],
    arom_edges: &[usize],
    needs: &[bool],
    matched: &mut [bool],
    doubled: &mut [bool],
) -> bool {
    let Some(atom) = (0..needs.len()).find(|&i| needs[i] && !matched[i]) else {
        return true;
    };
    for &k in arom_edges {
        let b = &bonds[k];
        let other = if b.a == atom {
            b.b
        } else if b.b == atom {
            b.a
        } else {
            continue;
        };
        if !needs[other] || matched[other] {
            continue;
        }
        matched[atom] = true;
        matched[other] = true;
        doubled[k] = true;
        if kekulize(bonds, arom_edges, needs, matched, doubled) {
            return true;
        }
        matched[atom] = false;
        matched[other] = false;
        doubled[k] = false;
    }
    false
}

/// Writes a Kekulé SMILES by depth-first traversal from atom 0. The output
/// is not canonical.
pub fn write_smiles(mol: &MolGraph) -> String {
    let n = mol.num_atoms();
    if n == 0 {
        return String::new();
    }
    // First pass: discovery order and tree edges.
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut tree_bond = vec![false; mol.num_bonds()];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    fn dfs(
        mol: &MolGraph,
        a: usize,
        visited: &mut [bool],
        order: &mut Vec<usize>,
        tree_bond: &mut [bool],
        children: &mut [Vec<usize>],
    ) {
        visited[a] = true;
        order.push(a);
        let mut nbrs: Vec<(usize, usize)> = mol.neighbors(a).to_vec();
        nbrs.sort_unstable();
        for (nb, k) in nbrs {
            if !visited[nb] {
                tree_bond[k] = true;
                children[a].push(nb);
                dfs(mol, nb, visited, order, tree_bond, children);
            }
        }
    }
    dfs(mol, 0, &mut visited, &mut order, &mut tree_bond, &mut children);
    let mut rank = vec![0usize; n];
    for (r, &a) in order.iter().enumerate() {
        rank[a] = r;
    }

    let mut out = String::new();
    let mut labels: Vec<Option<u32>> = vec![None; mol.num_bonds()];
    let mut free_labels: Vec<u32> = (1..100).rev().collect();

    fn emit(
        mol: &MolGraph,
        a: usize,
        rank: &[usize],
        tree_bond: &[bool],
        children: &[Vec<usize>],
        labels: &mut [Option<u32>],
        free_labels: &mut Vec<u32>,
        out: &mut String,
    ) {
        out.push_str(&atom_text(mol, a));
        let mut ring_bonds: Vec<(usize, usize)> = mol
            .neighbors(a)
            .iter()
            .filter(|(_, k)| !tree_bond[*k])
            .map(|&(nb, k)| (rank[nb], k))
            .collect();
        ring_bonds.sort_unstable();
        for (_, k) in ring_bonds {
            let bond = &mol.bonds[k];
            match labels[k] {
                Some(label) => {
                    out.push_str(bond_text(bond.order));
                    push_label(out, label);
                    free_labels.push(label);
                    free_labels.sort_unstable_by(|x, y| y.cmp(x));
                }
                None => {
                    let label = free_labels.pop().expect("ring label space exhausted");
                    labels[k] = Some(label);
                    out.push_str(bond_text(bond.order));
                    push_label(out, label);
                }
            }
        }
        let kids = &children[a];
        for (i, &c) in kids.iter().enumerate() {
            let order = mol.bond_between(a, c).unwrap().order;
            let last = i + 1 == kids.len();
            if !last {
                out.push('(');
            }
            out.push_str(bond_text(order));
            emit(mol, c, rank, tree_bond, children, labels, free_labels, out);
            if !last {
                out.push(')');
            }
        }
    }
    emit(mol, 0, &rank, &tree_bond, &children, &mut labels, &mut free_labels, &mut out);
    out
}

fn push_label(out: &mut String, label: u32) {
    if label < 10 {
        out.push(char::from(b'0' + label as u8));
    } else {
        out.push_str(&format!("%{label:02}"));
    }
}

fn bond_text(order: BondOrder) -> &'static str {
    match order {
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

fn atom_text(mol: &MolGraph, a: usize) -> String {
    let atom = &mol.atoms[a];
    let organic = atom.formal_charge == 0 && atom.element != Element::H;
    if organic {
        return atom.element.symbol().to_string();
    }
    let mut s = String::from("[");
    s.push_str(atom.element.symbol());
    match atom.total_h() {
        0 => {}
        1 => s.push('H'),
        h => s.push_str(&format!("H{h}")),
    }
    match atom.formal_charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    s.push(']');
    s
}
