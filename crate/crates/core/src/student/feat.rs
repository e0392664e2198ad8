//! Fixed-size numeric features for atoms and bonds.

use crate::graph::{BondOrder, MolGraph};

/// Element one-hot (11 common organic elements + other), degree one-hot
/// (0..=5, capped), hydrogen-count one-hot (0..=4, capped), formal charge,
/// aromatic flag.
pub const ATOM_FEATURES: usize = 11 + 6 + 5 + 1 + 1;
pub const BOND_FEATURES: usize = 4;

const ELEMENT_BUCKETS: [&str; 11] = ["C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B", "*"];

pub fn atom_features(g: &MolGraph, i: usize) -> Vec<f64> {
    let atom = g.atom(i);
    let mut out = vec![0.0; ATOM_FEATURES];
    let sym = atom.element.symbol();
    let bucket = ELEMENT_BUCKETS
        .iter()
        .position(|&s| s == sym)
        .unwrap_or(ELEMENT_BUCKETS.len() - 1);
    out[bucket] = 1.0;
    let degree = g.degree(i).min(5);
    out[11 + degree] = 1.0;
    let hydrogens = (g.hydrogen_count(i) as usize).min(4);
    out[11 + 6 + hydrogens] = 1.0;
    out[11 + 6 + 5] = atom.charge as f64;
    out[11 + 6 + 5 + 1] = if atom.aromatic { 1.0 } else { 0.0 };
    out
}

pub fn bond_features(order: BondOrder) -> Vec<f64> {
    let mut out = vec![0.0; BOND_FEATURES];
    let slot = match order {
        BondOrder::Single => 0,
        BondOrder::Double => 1,
        BondOrder::Triple => 2,
        BondOrder::Aromatic => 3,
    };
    out[slot] = 1.0;
    out
}
