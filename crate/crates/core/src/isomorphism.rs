//! Exact attributed-graph isomorphism.
//!
//! The fast path compares canonical certificates; [`find_isomorphism`] is the
//! independent backtracking search used to verify certificate equality and to
//! cross-check the canonical labeling in tests.

use crate::graph::MolGraph;
use crate::smiles::canon::certificate_colored;

/// Attribute tuple that two atoms must share to be mapped onto each other.
///
/// Hydrogen counts are the resolved ones (explicit bracket count or the
/// valence default), so a bracket atom whose count merely restates the
/// default is equal to its bare spelling.
fn atom_key(g: &MolGraph, i: usize) -> (u8, i32, bool, Option<u16>, u8) {
    let a = g.atom(i);
    (a.element.0, a.charge, a.aromatic, a.isotope, g.hydrogen_count(i))
}

/// Finds an isomorphism from `g1` onto `g2` preserving atom attributes, bond
/// orders, and the optional per-atom colors. Returns the image of each `g1`
/// atom, or `None` when the graphs differ.
pub fn find_isomorphism(
    g1: &MolGraph,
    g2: &MolGraph,
    colors1: Option<&[u64]>,
    colors2: Option<&[u64]>,
) -> Option<Vec<usize>> {
    let n = g1.atom_count();
    if n != g2.atom_count() || g1.bond_count() != g2.bond_count() {
        return None;
    }
    if n == 0 {
        return Some(Vec::new());
    }
    let color_of = |colors: Option<&[u64]>, i: usize| colors.map_or(0, |c| c[i]);

    // Candidate lists per g1 atom: attribute, color, and degree must agree.
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let key = atom_key(g1, i);
        let color = color_of(colors1, i);
        let cands: Vec<usize> = (0..n)
            .filter(|&j| {
                atom_key(g2, j) == key
                    && color_of(colors2, j) == color
                    && g1.degree(i) == g2.degree(j)
            })
            .collect();
        if cands.is_empty() {
            return None;
        }
        candidates.push(cands);
    }

    // Assign g1 atoms in order of fewest candidates first, then prefer atoms
    // adjacent to already-assigned ones so bond checks prune early.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (candidates[i].len(), i));

    let mut mapping = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn assign(
        g1: &MolGraph,
        g2: &MolGraph,
        order: &[usize],
        candidates: &[Vec<usize>],
        pos: usize,
        mapping: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if pos == order.len() {
            return true;
        }
        let i = order[pos];
        'cand: for &j in &candidates[i] {
            if used[j] {
                continue;
            }
            // Every already-mapped neighbor relation must be mirrored in g2
            // with the same bond order; equal degrees plus a global bond
            // count check make non-edge violations impossible to miss.
            for (nbr, order) in g1.neighbors(i) {
                let img = mapping[nbr];
                if img == usize::MAX {
                    continue;
                }
                if g2.bond_between(j, img) != Some(order) {
                    continue 'cand;
                }
            }
            mapping[i] = j;
            used[j] = true;
            if assign(g1, g2, order, candidates, pos + 1, mapping, used) {
                return true;
            }
            mapping[i] = usize::MAX;
            used[j] = false;
        }
        false
    }

    if assign(g1, g2, &order, &candidates, 0, &mut mapping, &mut used) {
        Some(mapping)
    } else {
        None
    }
}

/// True iff the graphs are isomorphic as attributed molecular graphs.
///
/// Certificate equality decides it; a certificate match is verified by the
/// backtracking search so a labeling defect can never report a false
/// positive.
pub fn graph_isomorphic(g1: &MolGraph, g2: &MolGraph) -> bool {
    graph_isomorphic_colored(g1, g2, None, None)
}

/// [`graph_isomorphic`] with per-atom colors that mapped atoms must share.
pub fn graph_isomorphic_colored(
    g1: &MolGraph,
    g2: &MolGraph,
    colors1: Option<&[u64]>,
    colors2: Option<&[u64]>,
) -> bool {
    if g1.atom_count() != g2.atom_count() || g1.bond_count() != g2.bond_count() {
        return false;
    }
    let zeros1 = vec![0u64; g1.atom_count()];
    let zeros2 = vec![0u64; g2.atom_count()];
    let cert1 = certificate_colored(g1, colors1.unwrap_or(&zeros1));
    let cert2 = certificate_colored(g2, colors2.unwrap_or(&zeros2));
    if cert1 != cert2 {
        return false;
    }
    find_isomorphism(g1, g2, colors1, colors2).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Atom, BondOrder};
    use crate::smiles::parse::parse_smiles;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute force over all atom bijections; ground truth for small graphs.
    fn permutation_oracle(g1: &MolGraph, g2: &MolGraph) -> bool {
        let n = g1.atom_count();
        if n != g2.atom_count() || g1.bond_count() != g2.bond_count() {
            return false;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            let ok = (0..n).all(|i| atom_key(g1, i) == atom_key(g2, perm[i]))
                && g1
                    .bonds()
                    .iter()
                    .all(|b| g2.bond_between(perm[b.a], perm[b.b]) == Some(b.order));
            if ok {
                return true;
            }
            if !next_permutation(&mut perm) {
                return false;
            }
        }
    }

    fn next_permutation(p: &mut [usize]) -> bool {
        let n = p.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && p[i - 1] >= p[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while p[j] <= p[i - 1] {
            j -= 1;
        }
        p.swap(i - 1, j);
        p[i..].reverse();
        true
    }

    #[test]
    fn matches_spelling_variants() {
        let a = parse_smiles("CCO").unwrap();
        let b = parse_smiles("OCC").unwrap();
        let c = parse_smiles("CCN").unwrap();
        assert!(graph_isomorphic(&a, &b));
        assert!(!graph_isomorphic(&a, &c));
    }

    #[test]
    fn agrees_with_permutation_oracle_on_small_graphs() {
        let smiles = [
            "CCO", "CC(C)C", "c1ccccc1", "C1CC1O", "N#CC=O", "CC(=O)O", "C1CCC1", "CC", "O",
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for s in smiles {
            let g = parse_smiles(s).unwrap();
            let n = g.atom_count();
            assert!(n <= 8, "oracle graphs must stay tiny: {s}");
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let shuffled = g.permuted(&perm);
            assert!(graph_isomorphic(&g, &shuffled), "{s} vs shuffle");
            assert!(permutation_oracle(&g, &shuffled), "{s} oracle vs shuffle");
        }
        // Pairwise cross-checks, including non-isomorphic pairs.
        let graphs: Vec<MolGraph> = smiles.iter().map(|s| parse_smiles(s).unwrap()).collect();
        for i in 0..graphs.len() {
            for j in 0..graphs.len() {
                assert_eq!(
                    graph_isomorphic(&graphs[i], &graphs[j]),
                    permutation_oracle(&graphs[i], &graphs[j]),
                    "{} vs {}",
                    smiles[i],
                    smiles[j]
                );
            }
        }
    }

    #[test]
    fn bond_orders_and_charges_separate_graphs() {
        let single = parse_smiles("CC=O").unwrap();
        let other = parse_smiles("C=CO").unwrap();
        assert!(!graph_isomorphic(&single, &other));
        let plain = parse_smiles("CO").unwrap();
        let charged = parse_smiles("C[O-]").unwrap();
        assert!(!graph_isomorphic(&plain, &charged));
        // A bracket spelling that restates the valence default is the same
        // molecule as the bare spelling.
        let bracket = parse_smiles("C[OH]").unwrap();
        assert!(graph_isomorphic(&plain, &bracket));
    }

    #[test]
    fn colors_constrain_the_mapping() {
        let g = parse_smiles("CCC").unwrap();
        // Color one terminal methyl; an isomorphism must map colored to
        // colored, so coloring atom 0 on one side and atom 2 on the other
        // still works (symmetry), but coloring the middle atom does not.
        let ends = vec![1u64, 0, 0];
        let other_end = vec![0u64, 0, 1];
        let middle = vec![0u64, 1, 0];
        assert!(graph_isomorphic_colored(&g, &g, Some(&ends), Some(&other_end)));
        assert!(!graph_isomorphic_colored(&g, &g, Some(&ends), Some(&middle)));
    }

    #[test]
    fn wildcard_atoms_participate() {
        use crate::element::Element;
        let carbon = Element::from_symbol("C").unwrap();
        let mut a = MolGraph::new();
        let w = a.add_atom(Atom::new(crate::element::WILDCARD)).unwrap();
        let c = a.add_atom(Atom::new(carbon)).unwrap();
        a.add_bond(w, c, BondOrder::Double).unwrap();
        let mut b = MolGraph::new();
        let c2 = b.add_atom(Atom::new(carbon)).unwrap();
        let w2 = b.add_atom(Atom::new(crate::element::WILDCARD)).unwrap();
        b.add_bond(w2, c2, BondOrder::Double).unwrap();
        assert!(graph_isomorphic(&a, &b));
        let mut c3 = MolGraph::new();
        let x = c3.add_atom(Atom::new(carbon)).unwrap();
        let y = c3.add_atom(Atom::new(carbon)).unwrap();
        c3.add_bond(x, y, BondOrder::Double).unwrap();
        assert!(!graph_isomorphic(&a, &c3));
    }
}
