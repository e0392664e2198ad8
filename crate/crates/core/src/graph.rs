//! Hydrogen-suppressed molecular graphs.
//!
//! Atoms are nodes with chemical attributes; hydrogens are never nodes and
//! live in per-atom counts derived from the valence model (or pinned by an
//! explicit count from bracket notation).

use crate::element::Element;
use crate::error::GraphError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Order contribution doubled so aromatic (1.5) stays integral.
    pub fn twice(self) -> i32 {
        match self {
            BondOrder::Single => 2,
            BondOrder::Double => 4,
            BondOrder::Triple => 6,
            BondOrder::Aromatic => 3,
        }
    }

    /// Stable small code for hashing and sort keys.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BondOrder::Single => "single",
            BondOrder::Double => "double",
            BondOrder::Triple => "triple",
            BondOrder::Aromatic => "aromatic",
        }
    }

    pub fn from_label(s: &str) -> Option<BondOrder> {
        match s {
            "single" => Some(BondOrder::Single),
            "double" => Some(BondOrder::Double),
            "triple" => Some(BondOrder::Triple),
            "aromatic" => Some(BondOrder::Aromatic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Atom {
    pub element: Element,
    pub charge: i32,
    pub aromatic: bool,
    pub isotope: Option<u16>,
    /// Hydrogen count pinned by bracket notation. `None` means the count
    /// follows from the valence model and the current bonds.
    pub explicit_h: Option<u8>,
}

impl Atom {
    pub fn new(element: Element) -> Atom {
        Atom {
            element,
            charge: 0,
            aromatic: false,
            isotope: None,
            explicit_h: None,
        }
    }

    pub fn aromatic(element: Element) -> Atom {
        Atom {
            aromatic: true,
            ..Atom::new(element)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

/// A molecular graph. Atom indices are dense `0..atom_count()`; bonds are
/// unordered pairs with no duplicates and no self loops.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Per-atom list of (neighbor, bond index).
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MolGraph {
    pub fn new() -> MolGraph {
        MolGraph {
            atoms: Vec::new(),
            bonds: Vec::new(),
            adjacency: Vec::new(),
        }
    }

    pub fn add_atom(&mut self, atom: Atom) -> Result<usize, GraphError> {
        if atom.aromatic && !atom.element.aromatizable() {
            return Err(GraphError::AromaticElement(atom.element.symbol().into()));
        }
        self.atoms.push(atom);
        self.adjacency.push(Vec::new());
        Ok(self.atoms.len() - 1)
    }

    pub fn add_bond(&mut self, a: usize, b: usize, order: BondOrder) -> Result<usize, GraphError> {
        let n = self.atoms.len();
        if a >= n {
            return Err(GraphError::BadAtomIndex(a));
        }
        if b >= n {
            return Err(GraphError::BadAtomIndex(b));
        }
        if a == b {
            return Err(GraphError::SelfBond(a));
        }
        if self.bond_between(a, b).is_some() {
            return Err(GraphError::DuplicateBond(a, b));
        }
        if order == BondOrder::Aromatic && !(self.atoms[a].aromatic && self.atoms[b].aromatic) {
            // Fragments cut out of a larger molecule may legitimately carry an
            // aromatic bond onto a wildcard anchor.
            let wild = self.atoms[a].element.is_wildcard() || self.atoms[b].element.is_wildcard();
            if !wild {
                return Err(GraphError::AromaticBond(a, b));
            }
        }
        let idx = self.bonds.len();
        self.bonds.push(Bond { a, b, order });
        self.adjacency[a].push((b, idx));
        self.adjacency[b].push((a, idx));
        Ok(idx)
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn atom_mut(&mut self, i: usize) -> &mut Atom {
        &mut self.atoms[i]
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, BondOrder)> + '_ {
        self.adjacency[i]
            .iter()
            .map(move |&(nbr, bidx)| (nbr, self.bonds[bidx].order))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<BondOrder> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|&&(nbr, _)| nbr == b)
            .map(|&(_, bidx)| self.bonds[bidx].order)
    }

    /// Restores the adjacency lists after deserialization.
    pub fn rebuild_adjacency(&mut self) {
        self.adjacency = vec![Vec::new(); self.atoms.len()];
        for (idx, bond) in self.bonds.iter().enumerate() {
            self.adjacency[bond.a].push((bond.b, idx));
            self.adjacency[bond.b].push((bond.a, idx));
        }
    }

    /// Twice the bond order sum at an atom (aromatic counts 1.5).
    pub fn bond_order_sum_twice(&self, i: usize) -> i32 {
        self.adjacency[i]
            .iter()
            .map(|&(_, bidx)| self.bonds[bidx].order.twice())
            .sum()
    }

    /// Hydrogen count at an atom: the explicit count when the atom was
    /// written in brackets, otherwise the smallest standard valence that
    /// accommodates the bonds. Saturates at zero when the bonds exceed every
    /// valence alternative; `validate_valences` reports that case as an error.
    pub fn hydrogen_count(&self, i: usize) -> u8 {
        let atom = &self.atoms[i];
        if let Some(h) = atom.explicit_h {
            return h;
        }
        let ceil_sum = (self.bond_order_sum_twice(i) + 1) / 2;
        match atom.element.effective_valences(atom.charge) {
            Some(valences) => valences
                .iter()
                .copied()
                .filter(|&v| v >= ceil_sum)
                .min()
                .map(|v| (v - ceil_sum) as u8)
                .unwrap_or(0),
            None => 0,
        }
    }

    /// Checks every atom against its charge-adjusted valence alternatives.
    ///
    /// Aromatic atoms count each ring bond as a single bond here: the 1.5
    /// model used for hydrogen defaulting over-counts at fusion atoms (three
    /// ring bonds) and at ring atoms written with an explicit hydrogen.
    pub fn validate_valences(&self) -> Result<(), GraphError> {
        for i in 0..self.atoms.len() {
            let atom = &self.atoms[i];
            let Some(valences) = atom.element.effective_valences(atom.charge) else {
                continue;
            };
            let twice_sum = if atom.aromatic {
                self.adjacency[i]
                    .iter()
                    .map(|&(_, bidx)| match self.bonds[bidx].order {
                        BondOrder::Aromatic => 2,
                        other => other.twice(),
                    })
                    .sum()
            } else {
                self.bond_order_sum_twice(i)
            };
            let ceil_sum = (twice_sum + 1) / 2;
            let total = ceil_sum + i32::from(atom.explicit_h.unwrap_or(0));
            let max = valences.iter().copied().max().unwrap_or(0);
            if total > max {
                return Err(GraphError::Valence {
                    index: i,
                    symbol: atom.element.symbol().into(),
                    total,
                    max,
                });
            }
        }
        Ok(())
    }

    pub fn is_connected(&self) -> bool {
        if self.atoms.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.atoms.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &(nbr, _) in &self.adjacency[i] {
                if !seen[nbr] {
                    seen[nbr] = true;
                    count += 1;
                    stack.push(nbr);
                }
            }
        }
        count == self.atoms.len()
    }

    /// Per-atom flag: true when the atom lies on a cycle. An atom is cyclic
    /// exactly when one of its bonds is not a bridge.
    pub fn ring_membership(&self) -> Vec<bool> {
        let bridges = self.bridge_flags();
        let mut in_ring = vec![false; self.atoms.len()];
        for (idx, bond) in self.bonds.iter().enumerate() {
            if !bridges[idx] {
                in_ring[bond.a] = true;
                in_ring[bond.b] = true;
            }
        }
        in_ring
    }

    /// Per-bond flag: true when removing the bond disconnects its component.
    pub fn bridge_flags(&self) -> Vec<bool> {
        let n = self.atoms.len();
        let mut bridges = vec![false; self.bonds.len()];
        if n == 0 {
            return bridges;
        }
        // Iterative Tarjan bridge finding; recursion would overflow on long
        // chains only at absurd sizes, but the iterative form costs nothing.
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![usize::MAX; n];
        let mut timer = 0usize;
        for start in 0..n {
            if disc[start] != usize::MAX {
                continue;
            }
            // Stack entries: (node, incoming bond index, next adjacency slot).
            let mut stack: Vec<(usize, usize, usize)> = vec![(start, usize::MAX, 0)];
            disc[start] = timer;
            low[start] = timer;
            timer += 1;
            while let Some(&mut (node, in_bond, ref mut slot)) = stack.last_mut() {
                if *slot < self.adjacency[node].len() {
                    let (nbr, bidx) = self.adjacency[node][*slot];
                    *slot += 1;
                    if bidx == in_bond {
                        continue;
                    }
                    if disc[nbr] == usize::MAX {
                        disc[nbr] = timer;
                        low[nbr] = timer;
                        timer += 1;
                        stack.push((nbr, bidx, 0));
                    } else {
                        low[node] = low[node].min(disc[nbr]);
                    }
                } else {
                    stack.pop();
                    if let Some(&mut (parent, _, _)) = stack.last_mut() {
                        low[parent] = low[parent].min(low[node]);
                        if low[node] > disc[parent] {
                            bridges[in_bond] = true;
                        }
                    }
                }
            }
        }
        bridges
    }

    /// Connected components after deleting `removed` atoms, as sorted index
    /// lists. Components come out in order of their smallest member.
    pub fn components_excluding(&self, removed: &[usize]) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut skip = vec![false; n];
        for &r in removed {
            skip[r] = true;
        }
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if skip[start] || seen[start] {
                continue;
            }
            let mut comp = vec![start];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                for &(nbr, _) in &self.adjacency[i] {
                    if !skip[nbr] && !seen[nbr] {
                        seen[nbr] = true;
                        comp.push(nbr);
                        stack.push(nbr);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Extracts the subgraph induced by `atoms` (kept in the given order).
    /// Returns the fragment and the map from fragment index to source index.
    pub fn induced_subgraph(&self, atoms: &[usize]) -> (MolGraph, Vec<usize>) {
        let mut back = vec![usize::MAX; self.atoms.len()];
        let mut frag = MolGraph::new();
        for (new_idx, &src) in atoms.iter().enumerate() {
            back[src] = new_idx;
            frag.atoms.push(self.atoms[src]);
            frag.adjacency.push(Vec::new());
        }
        for bond in &self.bonds {
            let (na, nb) = (back[bond.a], back[bond.b]);
            if na != usize::MAX && nb != usize::MAX {
                let idx = frag.bonds.len();
                frag.bonds.push(Bond {
                    a: na,
                    b: nb,
                    order: bond.order,
                });
                frag.adjacency[na].push((nb, idx));
                frag.adjacency[nb].push((na, idx));
            }
        }
        (frag, atoms.to_vec())
    }

    /// Rebuilds the graph with atoms permuted: new index `i` holds the atom
    /// previously at `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> MolGraph {
        assert_eq!(perm.len(), self.atoms.len());
        let mut back = vec![usize::MAX; perm.len()];
        for (new_idx, &old) in perm.iter().enumerate() {
            back[old] = new_idx;
        }
        let mut g = MolGraph::new();
        for &old in perm {
            g.atoms.push(self.atoms[old]);
            g.adjacency.push(Vec::new());
        }
        for bond in &self.bonds {
            let (na, nb) = (back[bond.a], back[bond.b]);
            let idx = g.bonds.len();
            g.bonds.push(Bond {
                a: na,
                b: nb,
                order: bond.order,
            });
            g.adjacency[na].push((nb, idx));
            g.adjacency[nb].push((na, idx));
        }
        g
    }
}

impl Default for MolGraph {
    fn default() -> Self {
        MolGraph::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::Element;

    fn carbon() -> Atom {
        Atom::new(Element::from_symbol("C").unwrap())
    }

    #[test]
    fn bond_bookkeeping_rejects_bad_input() {
        let mut g = MolGraph::new();
        let a = g.add_atom(carbon()).unwrap();
        let b = g.add_atom(carbon()).unwrap();
        g.add_bond(a, b, BondOrder::Single).unwrap();
        assert_eq!(g.add_bond(a, a, BondOrder::Single), Err(GraphError::SelfBond(a)));
        assert_eq!(
            g.add_bond(a, b, BondOrder::Double),
            Err(GraphError::DuplicateBond(a, b))
        );
        assert_eq!(g.add_bond(a, 9, BondOrder::Single), Err(GraphError::BadAtomIndex(9)));
    }

    #[test]
    fn hydrogen_counts_follow_valence_model() {
        // Propene: CH2=CH-CH3.
        let mut g = MolGraph::new();
        let a = g.add_atom(carbon()).unwrap();
        let b = g.add_atom(carbon()).unwrap();
        let c = g.add_atom(carbon()).unwrap();
        g.add_bond(a, b, BondOrder::Double).unwrap();
        g.add_bond(b, c, BondOrder::Single).unwrap();
        assert_eq!(g.hydrogen_count(a), 2);
        assert_eq!(g.hydrogen_count(b), 1);
        assert_eq!(g.hydrogen_count(c), 3);
        g.validate_valences().unwrap();
    }

    #[test]
    fn over_valent_atom_is_an_error() {
        let mut g = MolGraph::new();
        let o = g.add_atom(Atom::new(Element::from_symbol("O").unwrap())).unwrap();
        for _ in 0..3 {
            let c = g.add_atom(carbon()).unwrap();
            g.add_bond(o, c, BondOrder::Single).unwrap();
        }
        assert!(matches!(
            g.validate_valences(),
            Err(GraphError::Valence { index: 0, .. })
        ));
    }

    #[test]
    fn bridges_and_ring_membership() {
        // Cyclopropane with a methyl tail: ring atoms 0,1,2; tail atom 3.
        let mut g = MolGraph::new();
        for _ in 0..4 {
            g.add_atom(carbon()).unwrap();
        }
        g.add_bond(0, 1, BondOrder::Single).unwrap();
        g.add_bond(1, 2, BondOrder::Single).unwrap();
        g.add_bond(2, 0, BondOrder::Single).unwrap();
        g.add_bond(2, 3, BondOrder::Single).unwrap();
        let rings = g.ring_membership();
        assert_eq!(rings, vec![true, true, true, false]);
        let bridges = g.bridge_flags();
        assert_eq!(bridges, vec![false, false, false, true]);
    }

    #[test]
    fn components_after_center_removal() {
        // Star: center 0 bonded to 1, 2, 3; 2-3 also bonded to each other.
        let mut g = MolGraph::new();
        for _ in 0..4 {
            g.add_atom(carbon()).unwrap();
        }
        g.add_bond(0, 1, BondOrder::Single).unwrap();
        g.add_bond(0, 2, BondOrder::Single).unwrap();
        g.add_bond(0, 3, BondOrder::Single).unwrap();
        g.add_bond(2, 3, BondOrder::Single).unwrap();
        let comps = g.components_excluding(&[0]);
        assert_eq!(comps, vec![vec![1], vec![2, 3]]);
    }
}
