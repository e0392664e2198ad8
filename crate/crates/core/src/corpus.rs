//! Seeded synthetic molecules and editing pairs for tests, demos, and
//! toy-scale training.

use crate::branch::{branches_around, merge_disjoint};
use crate::element::Element;
use crate::error::GraphError;
use crate::graph::{Atom, BondOrder, MolGraph};
use crate::juncttree::{decompose, ground_truth_assembly, DEFAULT_ASSEMBLY_CAP};
use crate::teacher::annotate_pair;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn elem(sym: &str) -> Element {
    Element::from_symbol(sym).expect("known element")
}

/// Remaining bonding capacity under the largest effective valence.
fn capacity(g: &MolGraph, i: usize) -> i32 {
    let atom = g.atom(i);
    let max = match atom.element.effective_valences(atom.charge) {
        Some(vs) => vs.iter().copied().max().unwrap_or(0),
        None => return 0,
    };
    // Aromatic ring bonds are counted as simple connections here, which is
    // what the validator does for aromatic atoms; for plain atoms use the
    // doubled-order sum.
    let used = if atom.aromatic {
        g.neighbors(i).map(|(_, o)| if o == BondOrder::Aromatic { 1 } else { i32::from(o.code().min(3)) }).sum()
    } else {
        g.bond_order_sum_twice(i) / 2
    };
    max - used
}

fn weighted_element(rng: &mut ChaCha8Rng) -> Element {
    let roll = rng.random_range(0..100);
    match roll {
        0..=59 => elem("C"),
        60..=74 => elem("N"),
        75..=89 => elem("O"),
        90..=92 => elem("S"),
        93..=95 => elem("F"),
        96..=97 => elem("Cl"),
        98 => elem("Br"),
        _ => elem("P"),
    }
}

fn attach_aromatic_ring(g: &mut MolGraph, rng: &mut ChaCha8Rng, host: usize) {
    // Benzene most of the time, pyridine otherwise.
    let hetero = rng.random_range(0..5) == 0;
    let hetero_pos = if hetero { rng.random_range(0..6) } else { 6 };
    let mut ring = Vec::with_capacity(6);
    for k in 0..6 {
        let el = if k == hetero_pos { elem("N") } else { elem("C") };
        ring.push(g.add_atom(Atom::aromatic(el)).expect("fresh atom"));
    }
    for k in 0..6 {
        g.add_bond(ring[k], ring[(k + 1) % 6], BondOrder::Aromatic).expect("ring bond");
    }
    // Attach through a carbon so the nitrogen keeps its hydrogen budget.
    let port = ring.into_iter().find(|&i| g.atom(i).element == elem("C")).expect("ring carbon");
    g.add_bond(host, port, BondOrder::Single).expect("ring attachment");
}

/// A random connected, valence-valid molecule of at most `max_atoms` heavy
/// atoms: tree growth with occasional multiple bonds, aromatic six-rings,
/// saturated ring closures, and rare charges and isotopes.
pub fn random_molecule(rng: &mut ChaCha8Rng, max_atoms: usize) -> MolGraph {
    let max_atoms = max_atoms.max(1);
    let target = rng.random_range(1..=max_atoms).max(3).min(max_atoms);
    let mut g = MolGraph::new();
    g.add_atom(Atom::new(elem("C"))).expect("first atom");
    let mut guard = 0;
    while g.atom_count() < target && guard < 200 {
        guard += 1;
        let hosts: Vec<usize> = (0..g.atom_count()).filter(|&i| capacity(&g, i) >= 1).collect();
        let Some(&host) = hosts.get(rng.random_range(0..hosts.len().max(1))) else { break };
        if hosts.is_empty() {
            break;
        }
        if g.atom_count() + 6 <= max_atoms && rng.random_range(0..100) < 12 {
            attach_aromatic_ring(&mut g, rng, host);
            continue;
        }
        let el = weighted_element(rng);
        let el_max = el.standard_valences().map(|v| *v.last().unwrap()).unwrap_or(1);
        let host_cap = capacity(&g, host);
        let roll = rng.random_range(0..100);
        let order = if roll < 85 || g.atom(host).aromatic {
            BondOrder::Single
        } else if roll < 95 && host_cap >= 2 && el_max >= 2 {
            BondOrder::Double
        } else if host_cap >= 3 && el_max >= 3 && el == elem("C") {
            BondOrder::Triple
        } else {
            BondOrder::Single
        };
        let idx = g.add_atom(Atom::new(el)).expect("fresh atom");
        g.add_bond(host, idx, order).expect("growth bond");
    }
    // Saturated ring closures between spare-capacity atoms.
    for _ in 0..2 {
        if rng.random_range(0..100) >= 25 {
            continue;
        }
        let open: Vec<usize> =
            (0..g.atom_count()).filter(|&i| !g.atom(i).aromatic && capacity(&g, i) >= 1).collect();
        if open.len() < 2 {
            continue;
        }
        let a = open[rng.random_range(0..open.len())];
        let b = open[rng.random_range(0..open.len())];
        if a != b && g.bond_between(a, b).is_none() {
            g.add_bond(a, b, BondOrder::Single).expect("closure bond");
        }
    }
    // Rare decorations: an ammonium-style charge, a carboxylate-style
    // oxygen, or an isotope label.
    if rng.random_range(0..100) < 8 {
        if let Some(n) = (0..g.atom_count()).find(|&i| g.atom(i).element == elem("N") && !g.atom(i).aromatic) {
            g.atom_mut(n).charge = 1;
        }
    }
    if rng.random_range(0..100) < 8 {
        if let Some(o) = (0..g.atom_count()).find(|&i| {
            g.atom(i).element == elem("O") && !g.atom(i).aromatic && g.bond_order_sum_twice(i) == 2
        }) {
            g.atom_mut(o).charge = -1;
        }
    }
    if rng.random_range(0..100) < 6 {
        let i = rng.random_range(0..g.atom_count());
        if g.atom(i).element == elem("C") {
            g.atom_mut(i).isotope = Some(13);
        }
    }
    g.validate_valences().expect("generator keeps valences legal");
    g
}

/// A molecule the expansion assembler can always rebuild from its own
/// junction tree (retries until the replay succeeds).
pub fn random_assemblable_molecule(rng: &mut ChaCha8Rng, max_atoms: usize) -> MolGraph {
    loop {
        let g = random_molecule(rng, max_atoms);
        let tree = decompose(&g);
        if ground_truth_assembly(&g, &tree, DEFAULT_ASSEMBLY_CAP).is_ok() {
            return g;
        }
    }
}

/// A carbon skeleton (tree plus at most one saturated ring) with exactly one
/// hydroxyl oxygen. The paired target swaps that oxygen for nitrogen —
/// a single crisp rewrite rule for learnability tests.
pub fn rule_pair(rng: &mut ChaCha8Rng, max_carbons: usize) -> (MolGraph, MolGraph) {
    let max_carbons = max_carbons.clamp(2, 16);
    loop {
        let n = rng.random_range(2..=max_carbons);
        let mut x = MolGraph::new();
        x.add_atom(Atom::new(elem("C"))).expect("first atom");
        while x.atom_count() < n {
            let host = rng.random_range(0..x.atom_count());
            if capacity(&x, host) < 1 {
                continue;
            }
            let idx = x.add_atom(Atom::new(elem("C"))).expect("fresh atom");
            x.add_bond(host, idx, BondOrder::Single).expect("growth bond");
        }
        if rng.random_range(0..100) < 20 {
            let open: Vec<usize> = (0..x.atom_count()).filter(|&i| capacity(&x, i) >= 1).collect();
            if open.len() >= 2 {
                let a = open[rng.random_range(0..open.len())];
                let b = open[rng.random_range(0..open.len())];
                if a != b && x.bond_between(a, b).is_none() {
                    x.add_bond(a, b, BondOrder::Single).expect("closure bond");
                }
            }
        }
        let hosts: Vec<usize> = (0..x.atom_count()).filter(|&i| capacity(&x, i) >= 1).collect();
        let Some(&host) = hosts.first().map(|_| &hosts[rng.random_range(0..hosts.len())]) else { continue };
        let o = x.add_atom(Atom::new(elem("O"))).expect("hydroxyl");
        x.add_bond(host, o, BondOrder::Single).expect("hydroxyl bond");

        let mut y = x.clone();
        y.atom_mut(o).element = elem("N");
        debug_assert!(x.validate_valences().is_ok() && y.validate_valences().is_ok());
        return (x, y);
    }
}

/// `count` rule pairs.
pub fn rule_pairs(rng: &mut ChaCha8Rng, count: usize, max_carbons: usize) -> Vec<(MolGraph, MolGraph)> {
    (0..count).map(|_| rule_pair(rng, max_carbons)).collect()
}

fn small_fragment(rng: &mut ChaCha8Rng) -> MolGraph {
    let mut f = MolGraph::new();
    let first = weighted_element(rng);
    f.add_atom(Atom::new(first)).expect("fragment seed");
    let extra = rng.random_range(0..3);
    for _ in 0..extra {
        let hosts: Vec<usize> = (0..f.atom_count()).filter(|&i| capacity(&f, i) >= 1).collect();
        if hosts.is_empty() {
            break;
        }
        let host = hosts[rng.random_range(0..hosts.len())];
        let idx = f.add_atom(Atom::new(weighted_element(rng))).expect("fragment atom");
        f.add_bond(host, idx, BondOrder::Single).expect("fragment bond");
    }
    f
}

/// A random annotatable editing pair: the target keeps a random subset of
/// the source's branches around a random center and grafts up to two fresh
/// small fragments there.
pub fn random_edit_pair(rng: &mut ChaCha8Rng, max_atoms: usize) -> (MolGraph, MolGraph) {
    loop {
        let x = random_molecule(rng, max_atoms);
        if x.atom_count() < 3 {
            continue;
        }
        let center = rng.random_range(0..x.atom_count());
        let set = branches_around(&x, center);
        if set.branches.is_empty() {
            continue;
        }
        let mut kept: Vec<usize> = Vec::new();
        for (i, _) in set.branches.iter().enumerate() {
            if rng.random_range(0..100) < 65 {
                kept.push(i);
            }
        }
        let mut fresh: Vec<MolGraph> = Vec::new();
        let want = rng.random_range(0..=2) + usize::from(kept.len() == set.branches.len());
        for _ in 0..want.min(2) {
            fresh.push(small_fragment(rng));
        }
        if kept.len() == set.branches.len() && fresh.is_empty() {
            fresh.push(small_fragment(rng));
        }

        let build = || -> Result<MolGraph, GraphError> {
            let mut parts: Vec<(&MolGraph, &[(usize, BondOrder)])> = kept
                .iter()
                .map(|&i| (&set.branches[i].fragment, set.branches[i].anchors.as_slice()))
                .collect();
            let anchors: Vec<[(usize, BondOrder); 1]> = fresh.iter().map(|_| [(0, BondOrder::Single)]).collect();
            for (f, a) in fresh.iter().zip(&anchors) {
                parts.push((f, a.as_slice()));
            }
            merge_disjoint(*x.atom(center), &parts)
        };
        let Ok(y) = build() else { continue };
        if y.validate_valences().is_err() {
            continue;
        }
        if annotate_pair(&x, &y).is_err() {
            continue;
        }
        return (x, y);
    }
}

pub fn random_edit_pairs(rng: &mut ChaCha8Rng, count: usize, max_atoms: usize) -> Vec<(MolGraph, MolGraph)> {
    (0..count).map(|_| random_edit_pair(rng, max_atoms)).collect()
}
