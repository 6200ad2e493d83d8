use super::{Element, MolGraph};

type Label = (Element, i8, u8, usize);

fn label(m: &MolGraph, i: usize) -> Label {
    let a = &m.atoms[i];
    (a.element, a.formal_charge, a.total_h(), m.degree(i))
}

/// Exact graph isomorphism over element, charge, total hydrogen count and
/// bond order, by backtracking. Intended for QM9-sized molecules.
pub fn is_isomorphic(a: &MolGraph, b: &MolGraph) -> bool {
    let n = a.num_atoms();
    if n != b.num_atoms() || a.num_bonds() != b.num_bonds() {
        return false;
    }
    if n == 0 {
        return true;
    }
    let la: Vec<Label> = (0..n).map(|i| label(a, i)).collect();
    let lb: Vec<Label> = (0..n).map(|i| label(b, i)).collect();
    let mut sa = la.clone();
    let mut sb = lb.clone();
    sa.sort_unstable();
    sb.sort_unstable();
    if sa != sb {
        return false;
    }
    let mut bond_a: Vec<_> = a.bonds.iter().map(|x| x.order).collect();
    let mut bond_b: Vec<_> = b.bonds.iter().map(|x| x.order).collect();
    bond_a.sort_unstable();
    bond_b.sort_unstable();
    if bond_a != bond_b {
        return false;
    }

    // Visit atoms of `a` in BFS order so every atom after the first has an
    // already-mapped neighbor to constrain it.
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        order.push(start);
        let mut head = order.len() - 1;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &(w, _) in a.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    order.push(w);
                }
            }
        }
    }

    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    extend(a, b, &la, &lb, &order, 0, &mut map, &mut used)
}

#[allow(clippy::too_many_arguments)]
fn extend(
    a: &MolGraph,
    b: &MolGraph,
    la: &[Label],
    lb: &[Label],
    order: &[usize],
    depth: usize,
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let v = order[depth];
    let anchor = a.neighbors(v).iter().find(|(w, _)| map[*w] != usize::MAX).map(|(w, _)| map[*w]);
    let candidates: Vec<usize> = match anchor {
        Some(img) => b.neighbors(img).iter().map(|(x, _)| *x).collect(),
        None => (0..b.num_atoms()).collect(),
    };
    for c in candidates {
        if used[c] || la[v] != lb[c] {
            continue;
        }
        let consistent = a.neighbors(v).iter().all(|&(w, k)| {
            let img = map[w];
            img == usize::MAX
                || b
                    .bond_between(c, img)
                    .is_some_and(|bb| bb.order == a.bonds[k].order)
        });
        if !consistent {
            continue;
        }
        map[v] = c;
        used[c] = true;
        if extend(a, b, la, lb, order, depth + 1, map, used) {
            return true;
        }
        map[v] = usize::MAX;
        used[c] = false;
    }
    false
}
