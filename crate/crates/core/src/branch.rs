//! Branch decomposition around a candidate editing center.
//!
//! Deleting one atom from a molecule splits it into connected components;
//! each component, together with the bonds that tied it to the deleted atom,
//! is a branch. Branches compare by an anchored isomorphism that preserves
//! atom attributes, bond orders, and the orders of the bonds back to the
//! center. The comparison is realized by a canonical key: the fragment is
//! augmented with one wildcard atom per anchor (carrying the center-bond
//! order) and written as a canonical string, so two branches are
//! anchored-isomorphic exactly when their augmented graphs are isomorphic.

use std::collections::BTreeMap;

use crate::error::GraphError;
use crate::graph::{Atom, BondOrder, MolGraph};
use crate::isomorphism::find_isomorphism;
use crate::smiles::canon::canonical_rank;
use crate::smiles::write::write_smiles;

/// One connected component of a molecule minus the center atom.
#[derive(Debug, Clone)]
pub struct Branch {
    /// The excluded atom, as an index into the parent graph.
    pub center: usize,
    /// Fragment atoms bonded to the center in the parent, with those orders.
    pub anchors: Vec<(usize, BondOrder)>,
    /// The component itself, re-indexed densely.
    pub fragment: MolGraph,
    /// Fragment index -> parent index.
    pub source_indices: Vec<usize>,
    key: String,
}

impl Branch {
    /// Number of atoms in the fragment (the center never counts).
    pub fn size(&self) -> usize {
        self.fragment.atom_count()
    }

    /// Canonical anchored-isomorphism key: equal keys ⇔ isomorphic branches.
    pub fn key(&self) -> &str {
        &self.key
    }

    /// The fragment plus one wildcard atom per anchor, bonded with the
    /// center-bond order. Isomorphism of these augmented graphs is exactly
    /// anchored isomorphism of the branches: wildcards can only map to
    /// wildcards, which forces anchors onto anchors with equal bond orders.
    pub fn augmented(&self) -> MolGraph {
        let mut g = self.fragment.clone();
        for &(anchor, order) in &self.anchors {
            let w = g
                .add_atom(Atom::new(crate::element::WILDCARD))
                .expect("wildcard atoms are unrestricted");
            g.add_bond(w, anchor, order).expect("fresh atom cannot collide");
        }
        g
    }
}

/// All branches around one center, grouped by canonical key.
#[derive(Debug, Clone)]
pub struct BranchSet {
    pub center: usize,
    pub branches: Vec<Branch>,
    /// Key -> indices into `branches`, in branch order.
    pub by_class: BTreeMap<String, Vec<usize>>,
}

impl BranchSet {
    /// Total fragment atoms across branches; equals parent size − 1.
    pub fn atom_total(&self) -> usize {
        self.branches.iter().map(Branch::size).sum()
    }
}

/// Decomposes `g` around `center`. Branch order follows the smallest
/// canonical rank among each branch's anchor atoms, which depends only on
/// the graph's structure, not its input atom order.
pub fn branches_around(g: &MolGraph, center: usize) -> BranchSet {
    let ranks = canonical_rank(g);
    branches_around_ranked(g, center, &ranks)
}

/// [`branches_around`] with the parent's canonical ranks precomputed, for
/// callers that sweep every center of the same graph.
pub fn branches_around_ranked(g: &MolGraph, center: usize, ranks: &[usize]) -> BranchSet {
    assert!(center < g.atom_count(), "center out of range");
    let mut branches: Vec<Branch> = g
        .components_excluding(&[center])
        .into_iter()
        .map(|members| {
            let (fragment, source_indices) = g.induced_subgraph(&members);
            let mut anchors: Vec<(usize, BondOrder)> = Vec::new();
            for (frag_idx, &src) in source_indices.iter().enumerate() {
                if let Some(order) = g.bond_between(src, center) {
                    anchors.push((frag_idx, order));
                }
            }
            debug_assert!(!anchors.is_empty(), "component must touch the center");
            let mut b = Branch {
                center,
                anchors,
                fragment,
                source_indices,
                key: String::new(),
            };
            b.key = write_smiles(&b.augmented());
            b
        })
        .collect();
    branches.sort_by_key(|b| {
        b.anchors
            .iter()
            .map(|&(a, _)| ranks[b.source_indices[a]])
            .min()
            .expect("anchors are non-empty")
    });
    let mut by_class: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (idx, b) in branches.iter().enumerate() {
        by_class.entry(b.key.clone()).or_default().push(idx);
    }
    BranchSet { center, branches, by_class }
}

/// Anchored isomorphism. Key equality decides it; equal keys are verified by
/// an independent backtracking search so a labeling defect cannot produce a
/// false positive.
pub fn branch_isomorphic(a: &Branch, b: &Branch) -> bool {
    if a.key != b.key {
        return false;
    }
    find_isomorphism(&a.augmented(), &b.augmented(), None, None).is_some()
}

/// Assembles a molecule from a center atom and parts, each part contributing
/// its fragment atoms plus bonds from its anchors back to the new center.
/// With no parts the result is the bare center. The merged graph is
/// re-validated, since the center's bond sum is new.
pub fn merge_disjoint(
    center: Atom,
    parts: &[(&MolGraph, &[(usize, BondOrder)])],
) -> Result<MolGraph, GraphError> {
    let mut g = MolGraph::new();
    let center_idx = g.add_atom(center)?;
    for &(fragment, anchors) in parts {
        let offset = g.atom_count();
        for atom in fragment.atoms() {
            g.add_atom(*atom)?;
        }
        for bond in fragment.bonds() {
            g.add_bond(bond.a + offset, bond.b + offset, bond.order)?;
        }
        for &(anchor, order) in anchors {
            g.add_bond(center_idx, anchor + offset, order)?;
        }
    }
    g.validate_valences()?;
    Ok(g)
}
