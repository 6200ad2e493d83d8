use super::MolGraph;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingInfo {
    /// Per bond: lies on at least one cycle.
    pub in_ring: Vec<bool>,
    /// Number of independent cycles, `|E| - |V| + 1` for a connected graph.
    pub cycle_rank: usize,
}

/// A bond is on a cycle iff it is not a bridge; bridges are found with the
/// low-link DFS.
pub fn perceive_rings(mol: &MolGraph) -> RingInfo {
    let n = mol.num_atoms();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut in_ring = vec![true; mol.num_bonds()];
    let mut timer = 0;
    let mut components = 0;

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        components += 1;
        // (atom, parent bond, next neighbor position)
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (v, parent_bond, ref mut pos)) = stack.last_mut() {
            let nbrs = mol.neighbors(v);
            if *pos < nbrs.len() {
                let (w, k) = nbrs[*pos];
                *pos += 1;
                if Some(k) == parent_bond {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, Some(k), 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let (Some(k), Some(&(u, _, _))) = (parent_bond, stack.last()) {
                    low[u] = low[u].min(low[v]);
                    if low[v] > disc[u] {
                        in_ring[k] = false;
                    }
                }
            }
        }
    }
    RingInfo {
        in_ring,
        cycle_rank: mol.num_bonds() + components - n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    // Oracle: a bond is in a ring iff its endpoints stay connected without it.
    fn brute_in_ring(mol: &MolGraph) -> Vec<bool> {
        (0..mol.num_bonds())
            .map(|skip| {
                let b = &mol.bonds[skip];
                let mut seen = vec![false; mol.num_atoms()];
                let mut stack = vec![b.a];
                seen[b.a] = true;
                while let Some(a) = stack.pop() {
                    for &(nb, k) in mol.neighbors(a) {
                        if k != skip && !seen[nb] {
                            seen[nb] = true;
                            stack.push(nb);
                        }
                    }
                }
                seen[b.b]
            })
            .collect()
    }

    #[test]
    fn cycle_ranks() {
        assert_eq!(perceive_rings(&parse_smiles("c1ccccc1").unwrap()).cycle_rank, 1);
        let acyclic = perceive_rings(&parse_smiles("CCCC").unwrap());
        assert_eq!(acyclic.cycle_rank, 0);
        assert!(acyclic.in_ring.iter().all(|f| !f));
        // 9 heavy atoms, 11 bonds: 11 - 9 + 1.
        let m = parse_smiles("CC1C2CC1(C)C1CN21").unwrap();
        assert_eq!((m.num_atoms(), m.num_bonds()), (9, 11));
        assert_eq!(perceive_rings(&m).cycle_rank, 3);
    }

    #[test]
    fn flags_match_bridge_oracle() {
        for s in [
            "CC1C2CC1(C)C1CN21",
            "C1CC1CC1CC1",
            "OC1CC=C2COCC12",
            "CC12CCC(C)(CC1)C2",
            "N#CCC1CCCO1",
            "C1CC2CC1C2",
        ] {
            let m = parse_smiles(s).unwrap();
            assert_eq!(perceive_rings(&m).in_ring, brute_in_ring(&m), "{s}");
        }
    }
}
