//! Molecular descriptors: MW, ring count, rotatable bonds, H-bond donors and
//! acceptors, topological polar surface area and atom-typed logP.
//!
//! Aromaticity is taken from the input (lowercase atoms); Kekulé input is
//! treated as aliphatic.

use serde::{Deserialize, Serialize};

use super::tables::DescriptorTables;
use super::{perceive_rings, Bond, BondOrder, Element, MolGraph};

pub const DESCRIPTOR_NAMES: [&str; 7] = ["mw", "ringct", "rotb", "hbd", "hba", "tpsa", "mologp"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorVector {
    pub mw: f64,
    pub ringct: u32,
    pub rotb: u32,
    pub hbd: u32,
    pub hba: u32,
    pub tpsa: f64,
    pub mologp: f64,
}

impl DescriptorVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "mw" => self.mw,
            "ringct" => self.ringct as f64,
            "rotb" => self.rotb as f64,
            "hbd" => self.hbd as f64,
            "hba" => self.hba as f64,
            "tpsa" => self.tpsa,
            "mologp" => self.mologp,
            _ => return None,
        })
    }

    pub fn values(&self) -> [f64; 7] {
        DESCRIPTOR_NAMES.map(|n| self.get(n).unwrap())
    }
}

pub fn descriptors(mol: &MolGraph) -> DescriptorVector {
    descriptors_with(mol, DescriptorTables::builtin())
}

pub fn descriptors_with(mol: &MolGraph, tables: &DescriptorTables) -> DescriptorVector {
    let ctx = Ctx::new(mol);
    let heavy = |i: usize| mol.atoms[i].element != Element::H;
    let mw = (0..mol.num_atoms())
        .map(|i| mol.atoms[i].element.mass() + mol.atoms[i].total_h() as f64 * Element::H.mass())
        .sum();
    let rotb = mol
        .bonds
        .iter()
        .filter(|b| {
            b.order == BondOrder::Single
                && !b.aromatic
                && !b.in_ring
                && heavy(b.a)
                && heavy(b.b)
                && mol.heavy_degree(b.a) >= 2
                && mol.heavy_degree(b.b) >= 2
        })
        .count() as u32;
    let polar = |i: &usize| matches!(mol.atoms[*i].element, Element::N | Element::O);
    let hbd = (0..mol.num_atoms()).filter(polar).filter(|&i| ctx.h[i] > 0).count() as u32;
    let hba = (0..mol.num_atoms()).filter(polar).count() as u32;
    DescriptorVector {
        mw,
        ringct: perceive_rings(mol).cycle_rank as u32,
        rotb,
        hbd,
        hba,
        tpsa: tpsa_with(&ctx, tables),
        mologp: mologp_with(&ctx, tables),
    }
}

pub fn tpsa(mol: &MolGraph) -> f64 {
    tpsa_with(&Ctx::new(mol), DescriptorTables::builtin())
}

pub fn mologp(mol: &MolGraph) -> f64 {
    mologp_with(&Ctx::new(mol), DescriptorTables::builtin())
}

/// Precomputed per-atom facts used by the typing rules. Hydrogen atoms
/// present as graph nodes are folded into their neighbor's H count.
struct Ctx<'a> {
    mol: &'a MolGraph,
    h: Vec<u8>,
    heavy_nbrs: Vec<Vec<(usize, &'a Bond)>>,
}

impl<'a> Ctx<'a> {
    fn new(mol: &'a MolGraph) -> Self {
        let n = mol.num_atoms();
        let mut h: Vec<u8> = mol.atoms.iter().map(|a| a.total_h()).collect();
        let mut heavy_nbrs = vec![Vec::new(); n];
        for i in 0..n {
            for &(j, k) in mol.neighbors(i) {
                if mol.atoms[j].element == Element::H {
                    h[i] += 1;
                } else {
                    heavy_nbrs[i].push((j, &mol.bonds[k]));
                }
            }
        }
        Ctx { mol, h, heavy_nbrs }
    }

    fn el(&self, i: usize) -> Element {
        self.mol.atoms[i].element
    }

    fn arom(&self, i: usize) -> bool {
        self.mol.atoms[i].aromatic
    }

    fn charge(&self, i: usize) -> i8 {
        self.mol.atoms[i].formal_charge
    }

    /// Total connections, hydrogens included (SMARTS `X`).
    fn x(&self, i: usize) -> usize {
        self.heavy_nbrs[i].len() + self.h[i] as usize
    }

    fn aliphatic(&self, i: usize, e: Element) -> bool {
        self.el(i) == e && !self.arom(i)
    }

    fn in_three_ring(&self, i: usize) -> bool {
        let nb = &self.heavy_nbrs[i];
        nb.iter()
            .enumerate()
            .any(|(p, &(j, _))| nb[p + 1..].iter().any(|&(k, _)| self.mol.bond_between(j, k).is_some()))
    }

    /// True if distinct heavy neighbors of `i` can be assigned to every spec.
    fn has(&self, i: usize, specs: &[Spec]) -> bool {
        fn assign(ctx: &Ctx, i: usize, specs: &[Spec], used: &mut Vec<usize>) -> bool {
            let Some((first, rest)) = specs.split_first() else {
                return true;
            };
            for &(j, b) in &ctx.heavy_nbrs[i] {
                if used.contains(&j) || !first.0.accepts(b) || !(first.1)(ctx, j) {
                    continue;
                }
                used.push(j);
                if assign(ctx, i, rest, used) {
                    return true;
                }
                used.pop();
            }
            false
        }
        assign(self, i, specs, &mut Vec::new())
    }
}

#[derive(Clone, Copy)]
enum B {
    /// SMARTS default: single or aromatic.
    Dflt,
    Single,
    Double,
    Triple,
    Arom,
}

impl B {
    fn accepts(self, b: &Bond) -> bool {
        match self {
            B::Dflt => b.aromatic || b.order == BondOrder::Single,
            B::Single => !b.aromatic && b.order == BondOrder::Single,
            B::Double => !b.aromatic && b.order == BondOrder::Double,
            B::Triple => b.order == BondOrder::Triple,
            B::Arom => b.aromatic,
        }
    }
}

type AtomPred = fn(&Ctx, usize) -> bool;
type Spec = (B, AtomPred);

fn any_heavy(_: &Ctx, _: usize) -> bool {
    true
}
fn aliph(c: &Ctx, j: usize) -> bool {
    !c.arom(j)
}
fn arom(c: &Ctx, j: usize) -> bool {
    c.arom(j)
}
fn aliph_c(c: &Ctx, j: usize) -> bool {
    c.aliphatic(j, Element::C)
}
fn arom_c(c: &Ctx, j: usize) -> bool {
    c.el(j) == Element::C && c.arom(j)
}
fn any_c(c: &Ctx, j: usize) -> bool {
    c.el(j) == Element::C
}
fn any_n(c: &Ctx, j: usize) -> bool {
    c.el(j) == Element::N
}
fn aliph_n(c: &Ctx, j: usize) -> bool {
    c.aliphatic(j, Element::N)
}
fn aliph_o(c: &Ctx, j: usize) -> bool {
    c.aliphatic(j, Element::O)
}
/// `[N,O,P,S,F,Cl,Br,I]` restricted to the supported elements.
fn aliph_hetero(c: &Ctx, j: usize) -> bool {
    !c.arom(j) && matches!(c.el(j), Element::N | Element::O | Element::F)
}
fn aliph_not_c(c: &Ctx, j: usize) -> bool {
    !c.arom(j) && c.el(j) != Element::C
}
fn not_carbon(c: &Ctx, j: usize) -> bool {
    c.el(j) != Element::C
}
fn fluorine(c: &Ctx, j: usize) -> bool {
    c.el(j) == Element::F
}
fn aliph_cno(c: &Ctx, j: usize) -> bool {
    !c.arom(j) && matches!(c.el(j), Element::C | Element::N | Element::O)
}

fn carbon_type(c: &Ctx, i: usize) -> &'static str {
    let h = c.h[i];
    let x = c.x(i);
    if c.arom(i) {
        if c.has(i, &[(B::Dflt, fluorine)]) {
            return "C14";
        }
        if h == 1 {
            return "C18";
        }
        let ring2 = |third: Spec| c.has(i, &[(B::Arom, arom), (B::Arom, arom), third]);
        if ring2((B::Arom, arom)) {
            return "C19";
        }
        if ring2((B::Single, arom)) {
            return "C20";
        }
        if ring2((B::Single, aliph_c)) {
            return "C21";
        }
        if ring2((B::Single, aliph_n)) {
            return "C22";
        }
        if ring2((B::Single, aliph_o)) {
            return "C23";
        }
        if ring2((B::Double, aliph_cno)) {
            return "C25";
        }
        return "CS";
    }
    let c_nb = (B::Dflt, aliph_c as AtomPred);
    let het = (B::Dflt, aliph_hetero as AtomPred);
    let a_nb = (B::Dflt, aliph as AtomPred);
    let ar_nb = (B::Dflt, arom as AtomPred);
    let dbl_c = (B::Double, aliph_c as AtomPred);
    if h == 4 || (h == 3 && c.has(i, &[c_nb])) || (h == 2 && c.has(i, &[c_nb, c_nb])) {
        return "C1";
    }
    if (h == 1 && c.has(i, &[c_nb, c_nb, c_nb])) || (h == 0 && c.has(i, &[c_nb, c_nb, c_nb, c_nb])) {
        return "C2";
    }
    if (h == 3 && c.has(i, &[het])) || (h == 2 && x == 4 && c.has(i, &[het, a_nb])) {
        return "C3";
    }
    if (h == 1 && x == 4 && c.has(i, &[het, a_nb, a_nb])) || (h == 0 && x == 4 && c.has(i, &[het, a_nb, a_nb, a_nb]))
    {
        return "C4";
    }
    if c.has(i, &[(B::Double, aliph_not_c)]) {
        return "C5";
    }
    if (h == 2 && c.has(i, &[dbl_c]))
        || (h == 1 && c.has(i, &[dbl_c, a_nb]))
        || (h == 0 && c.has(i, &[dbl_c, a_nb, a_nb]))
        || c.has(i, &[dbl_c, dbl_c])
    {
        return "C6";
    }
    if x == 2 && c.has(i, &[(B::Triple, aliph)]) {
        return "C7";
    }
    if h == 3 && c.has(i, &[(B::Dflt, arom_c)]) {
        return "C8";
    }
    if h == 3 && c.has(i, &[ar_nb]) {
        return "C9";
    }
    if x == 4 && c.has(i, &[ar_nb]) {
        match h {
            2 => return "C10",
            1 => return "C11",
            0 => return "C12",
            _ => {}
        }
    }
    if c.has(i, &[dbl_c, ar_nb, a_nb])
        || c.has(i, &[dbl_c, (B::Dflt, arom_c), ar_nb])
        || (h == 1 && c.has(i, &[dbl_c, ar_nb]))
        || c.has(i, &[(B::Double, arom_c)])
    {
        return "C26";
    }
    "CS"
}

/// Type shared by every hydrogen attached to heavy atom `i`.
fn hydrogen_type(c: &Ctx, i: usize) -> &'static str {
    match c.el(i) {
        Element::C | Element::H => return "H1",
        Element::O if !c.arom(i) => {
            let sp3_or_arom_c = |c: &Ctx, j: usize| c.el(j) == Element::C && (c.arom(j) || c.x(j) == 4);
            if c.has(i, &[(B::Dflt, sp3_or_arom_c)]) {
                return "H2";
            }
            // `[#1]O[!C;!N;!O;!S]`: the other neighbor may itself be a hydrogen.
            let odd = |c: &Ctx, j: usize| !(aliph_c(c, j) || aliph_n(c, j) || aliph_o(c, j));
            if c.h[i] >= 2 || c.has(i, &[(B::Dflt, odd)]) {
                return "H2";
            }
        }
        _ => {}
    }
    let el = c.el(i);
    if !matches!(el, Element::C | Element::N | Element::O) {
        return "H2";
    }
    if el == Element::N || (el == Element::O && c.has(i, &[(B::Dflt, any_n)])) {
        return "H3";
    }
    if el == Element::O {
        let carbonyl_like = |c: &Ctx, j: usize| {
            aliph_c(c, j)
                && c.has(j, &[(B::Double, |c: &Ctx, k: usize| {
                    matches!(c.el(k), Element::C | Element::N) || aliph_o(c, k)
                })])
        };
        if c.has(i, &[(B::Dflt, carbonyl_like)]) || c.has(i, &[(B::Dflt, aliph_o)]) {
            return "H4";
        }
    }
    "HS"
}

fn nitrogen_type(c: &Ctx, i: usize) -> &'static str {
    let h = c.h[i];
    let q = c.charge(i);
    let a_nb = (B::Dflt, aliph as AtomPred);
    let ar_nb = (B::Dflt, arom as AtomPred);
    let any_nb = (B::Dflt, any_heavy as AtomPred);
    if c.arom(i) {
        return if q == 0 {
            "N11"
        } else if q > 0 {
            "N12"
        } else {
            "NS"
        };
    }
    if q == 0 {
        if h == 2 && c.has(i, &[a_nb]) {
            return "N1";
        }
        if h == 1 && c.has(i, &[a_nb, a_nb]) {
            return "N2";
        }
        if h == 2 && c.has(i, &[ar_nb]) {
            return "N3";
        }
        if h == 1 && c.has(i, &[any_nb, ar_nb]) {
            return "N4";
        }
        if h == 1 && c.has(i, &[(B::Double, any_heavy)]) {
            return "N5";
        }
        if c.has(i, &[(B::Double, any_heavy), any_nb]) {
            return "N6";
        }
        if c.has(i, &[a_nb, a_nb, a_nb]) {
            return "N7";
        }
        if c.has(i, &[ar_nb, any_nb, a_nb]) || c.has(i, &[ar_nb, ar_nb, ar_nb]) {
            return "N8";
        }
        if c.has(i, &[(B::Triple, aliph)]) {
            return "N9";
        }
        return "NS";
    }
    if q > 0 {
        if (1..=3).contains(&h) {
            return "N10";
        }
        if h == 0
            && (c.has(i, &[a_nb, a_nb, a_nb, a_nb])
                || c.has(i, &[(B::Double, aliph), a_nb, any_nb])
                || c.has(i, &[(B::Double, any_c), (B::Double, any_n)]))
        {
            return "N13";
        }
        if c.has(i, &[(B::Triple, aliph)]) {
            return "N14";
        }
        let anion_n = |c: &Ctx, j: usize| c.aliphatic(j, Element::N) && c.charge(j) < 0;
        if c.has(i, &[(B::Double, anion_n), (B::Double, aliph_n)]) {
            return "N14";
        }
        return "NS";
    }
    "N14"
}

fn oxygen_type(c: &Ctx, i: usize) -> &'static str {
    let h = c.h[i];
    let q = c.charge(i);
    let x = c.x(i);
    if c.arom(i) {
        return "O1";
    }
    if h == 1 || h == 2 {
        return "O2";
    }
    let a_nb = (B::Dflt, aliph as AtomPred);
    if c.has(i, &[a_nb, a_nb]) {
        return "O3";
    }
    if c.has(i, &[(B::Dflt, arom), (B::Dflt, any_heavy)]) {
        return "O4";
    }
    let n_or_o = |c: &Ctx, j: usize| matches!(c.el(j), Element::N | Element::O);
    if c.has(i, &[(B::Double, n_or_o)]) || (q < 0 && x == 1 && c.has(i, &[(B::Dflt, any_n)])) {
        return "O5";
    }
    let carboxyl_c = |c: &Ctx, j: usize| aliph_c(c, j) && c.has(j, &[(B::Double, aliph_o)]);
    if q < 0 && c.has(i, &[(B::Dflt, carboxyl_c)]) {
        return "O12";
    }
    if q < 0 && x == 1 && c.has(i, &[(B::Dflt, |c: &Ctx, j: usize| !aliph_n(c, j))]) {
        return "O7";
    }
    if c.has(i, &[(B::Double, arom_c)]) {
        return "O8";
    }
    // Carbonyl carbon partner, if any.
    let Some(&(cj, _)) = c.heavy_nbrs[i]
        .iter()
        .find(|(j, b)| aliph_c(c, *j) && B::Double.accepts(b))
    else {
        return "OS";
    };
    let ch = c.h[cj];
    let c_nb = (B::Dflt, aliph_c as AtomPred);
    if (ch == 1 && c.has(cj, &[c_nb]))
        || c.has(cj, &[c_nb, a_nb])
        || (ch == 1 && c.has(cj, &[(B::Dflt, |c: &Ctx, j: usize| aliph_n(c, j) || aliph_o(c, j))]))
        || ch == 2
        || (c.x(cj) == 2 && c.heavy_nbrs[cj].iter().filter(|(j, b)| aliph_o(c, *j) && B::Double.accepts(b)).count() == 2)
    {
        return "O9";
    }
    if (ch == 1 && c.has(cj, &[(B::Dflt, arom_c)]))
        || c.has(cj, &[(B::Dflt, any_c), (B::Dflt, arom)])
        || c.has(cj, &[(B::Dflt, arom_c), a_nb])
    {
        return "O10";
    }
    if c.has(cj, &[(B::Dflt, not_carbon), (B::Dflt, not_carbon)]) {
        return "O11";
    }
    "OS"
}

/// Atom-type id for heavy atom `i`.
fn logp_type(c: &Ctx, i: usize) -> &'static str {
    match c.el(i) {
        Element::C => carbon_type(c, i),
        Element::N => nitrogen_type(c, i),
        Element::O => oxygen_type(c, i),
        Element::F => "F",
        Element::H => "HS",
    }
}

fn mologp_with(c: &Ctx, tables: &DescriptorTables) -> f64 {
    let t = &tables.logp;
    // Ids missing from a custom table fall back to the element's default type.
    let value = |id: &str| {
        t.get(id).unwrap_or_else(|| {
            let fallback = match id.as_bytes()[0] {
                b'C' => "CS",
                b'H' => "HS",
                b'N' => "NS",
                b'O' => "OS",
                _ => return 0.0,
            };
            t.get(fallback).unwrap_or(0.0)
        })
    };
    let mut total = 0.0;
    for i in 0..c.mol.num_atoms() {
        if c.el(i) == Element::H {
            // Hydrogen nodes are counted through their neighbor; an isolated
            // or H-H bonded hydrogen is a hydrocarbon hydrogen.
            if c.heavy_nbrs[i].is_empty() {
                total += value("H1");
            }
            continue;
        }
        total += value(logp_type(c, i));
        if c.h[i] > 0 {
            total += c.h[i] as f64 * value(hydrogen_type(c, i));
        }
    }
    total
}

fn tpsa_with(c: &Ctx, tables: &DescriptorTables) -> f64 {
    let t = &tables.tpsa;
    let mut total = 0.0;
    for i in 0..c.mol.num_atoms() {
        let el = c.el(i);
        if !matches!(el, Element::N | Element::O) {
            continue;
        }
        let (mut s, mut d, mut tr, mut a) = (0, 0, 0, 0);
        for (_, b) in &c.heavy_nbrs[i] {
            if b.aromatic {
                a += 1;
            } else {
                match b.order {
                    BondOrder::Single => s += 1,
                    BondOrder::Double => d += 1,
                    BondOrder::Triple => tr += 1,
                }
            }
        }
        let nbrs = c.heavy_nbrs[i].len();
        let h = c.h[i];
        let q = c.charge(i);
        let r3 = c.in_three_ring(i);
        let id = if el == Element::N {
            tpsa_nitrogen_id(nbrs, h, q, s, d, tr, a, r3)
        } else {
            tpsa_oxygen_id(nbrs, h, q, s, d, a, r3)
        };
        let v = match id.and_then(|id| t.get(id)) {
            Some(v) => v,
            None => {
                let p = if el == Element::N { "N" } else { "O" };
                let get = |k: &str| t.get(&format!("{p}_{k}")).unwrap_or(0.0);
                (get("base") + get("per_neighbor") * nbrs as f64 + get("per_h") * h as f64).max(0.0)
            }
        };
        total += v;
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn tpsa_nitrogen_id(nbrs: usize, h: u8, q: i8, s: u8, d: u8, t: u8, a: u8, r3: bool) -> Option<&'static str> {
    Some(match nbrs {
        1 => match (h, q) {
            (0, 0) if t == 1 => "N_t",
            (1, 0) if d == 1 => "N_h1_d",
            (2, 0) if s == 1 => "N_h2_s",
            (2, 1) if d == 1 => "N_h2_pos_d",
            (3, 1) if s == 1 => "N_h3_pos_s",
            _ => return None,
        },
        2 => match (h, q) {
            (0, 0) if s == 1 && d == 1 => "N_sd",
            (0, 0) if t == 1 && d == 1 => "N_td",
            (1, 0) if s == 2 && r3 => "N_h1_ss_r3",
            (1, 0) if s == 2 => "N_h1_ss",
            (0, 1) if t == 1 && s == 1 => "N_pos_ts",
            (1, 1) if s == 1 && d == 1 => "N_h1_pos_sd",
            (2, 1) if s == 2 => "N_h2_pos_ss",
            (0, 0) if a == 2 => "n_aa",
            (1, 0) if a == 2 => "n_h1_aa",
            (1, 1) if a == 2 => "n_h1_pos_aa",
            _ => return None,
        },
        3 => match (h, q) {
            (0, 0) if s == 3 && r3 => "N_sss_r3",
            (0, 0) if s == 3 => "N_sss",
            (0, 0) if s == 1 && d == 2 => "N_sdd",
            (0, 1) if s == 2 && d == 1 => "N_pos_ssd",
            (1, 1) if s == 3 => "N_h1_pos_sss",
            (0, 0) if a == 3 => "n_aaa",
            (0, 0) if s == 1 && a == 2 => "n_saa",
            (0, 0) if d == 1 && a == 2 => "n_daa",
            (0, 1) if a == 3 => "n_pos_aaa",
            (0, 1) if s == 1 && a == 2 => "n_pos_saa",
            _ => return None,
        },
        4 if h == 0 && q == 1 && s == 4 => "N_pos_ssss",
        _ => return None,
    })
}

fn tpsa_oxygen_id(nbrs: usize, h: u8, q: i8, s: u8, d: u8, a: u8, r3: bool) -> Option<&'static str> {
    Some(match (nbrs, h, q) {
        (1, 0, 0) if d == 1 => "O_d",
        (1, 1, 0) if s == 1 => "O_h1_s",
        (1, 0, -1) if s == 1 => "O_neg_s",
        (2, 0, 0) if s == 2 && r3 => "O_ss_r3",
        (2, 0, 0) if s == 2 => "O_ss",
        (2, 0, 0) if a == 2 => "o_aa",
        _ => return None,
    })
}
