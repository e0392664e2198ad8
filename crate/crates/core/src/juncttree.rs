//! Junction-tree decomposition, the component vocabulary, and assembly.
//!
//! A molecule decomposes into clusters — smallest-basis rings (fused systems
//! sharing more than two atoms are merged), non-ring bonds, and bridging
//! singletons for heavily shared atoms — connected into a maximum spanning
//! tree over cluster overlaps. The tree plus one attachment choice per node
//! reassembles the molecule; enumerating those choices is what the trainable
//! decoder later scores.

use std::collections::{BTreeMap, HashMap};

use log::warn;

use crate::error::{AssembleError, VocabError};
use crate::graph::MolGraph;
use crate::smiles::canon::{canonical_rank_colored, certificate_colored};
use crate::smiles::write::write_smiles;

/// Spanning-tree weight for edges from a ring-hub singleton; chosen far
/// above any overlap count so these edges always survive into the tree.
const RING_HUB_WEIGHT: i64 = 99;

pub const DEFAULT_ASSEMBLY_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterKind {
    Ring,
    Bond,
    Singleton,
}

/// One node of the junction tree: a set of parent-graph atoms.
#[derive(Debug, Clone)]
pub struct Cluster {
    /// Parent atom indices, ascending.
    pub atoms: Vec<usize>,
    pub kind: ClusterKind,
    /// Canonical string of the induced fragment; the vocabulary key.
    pub key: String,
}

#[derive(Debug, Clone)]
pub struct JunctionTree {
    pub nodes: Vec<Cluster>,
    pub edges: Vec<(usize, usize)>,
    pub adjacency: Vec<Vec<usize>>,
    pub root: usize,
}

impl JunctionTree {
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    /// Preorder walk from the root, children in index order.
    pub fn dfs_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        seen[self.root] = true;
        while let Some(n) = stack.pop() {
            order.push(n);
            // Push in reverse so the smallest-index child is visited first.
            let mut kids: Vec<usize> =
                self.adjacency[n].iter().copied().filter(|&m| !seen[m]).collect();
            kids.sort_unstable_by(|a, b| b.cmp(a));
            for k in kids {
                seen[k] = true;
                stack.push(k);
            }
        }
        order
    }

    pub fn rooted_at(mut self, node: usize) -> JunctionTree {
        assert!(node < self.nodes.len());
        self.root = node;
        self
    }
}

/// Induced subgraph of one cluster, with the fragment→parent atom map.
pub fn cluster_fragment(g: &MolGraph, atoms: &[usize]) -> (MolGraph, Vec<usize>) {
    g.induced_subgraph(atoms)
}

/// Smallest cycle basis (Horton): shortest candidate cycles through every
/// vertex, kept greedily while independent over GF(2) on edge sets.
fn smallest_rings(g: &MolGraph) -> Vec<Vec<usize>> {
    let n = g.atom_count();
    let m = g.bond_count();
    let bridges = g.bridge_flags();
    let cyclic_edges = bridges.iter().filter(|&&b| !b).count();
    if cyclic_edges == 0 {
        return Vec::new();
    }
    let dim = m + 1 - n; // connected graph
    let words = m.div_ceil(64);

    // Candidate cycles: for a BFS tree rooted at v, each non-tree edge
    // (x, y) whose root paths meet only at v closes one candidate.
    let mut candidates: Vec<(usize, Vec<usize>, Vec<u64>)> = Vec::new(); // (len, edge ids, bitset)
    let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
    for (idx, bond) in g.bonds().iter().enumerate() {
        edge_id.insert((bond.a.min(bond.b), bond.a.max(bond.b)), idx);
    }
    let eid = |a: usize, b: usize| edge_id[&(a.min(b), a.max(b))];
    for v in 0..n {
        let mut dist = vec![usize::MAX; n];
        let mut parent = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        dist[v] = 0;
        queue.push_back(v);
        while let Some(u) = queue.pop_front() {
            let mut nbrs: Vec<usize> = g.neighbors(u).map(|(w, _)| w).collect();
            nbrs.sort_unstable();
            for w in nbrs {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        let path_to_root = |mut a: usize| -> Vec<usize> {
            let mut p = vec![a];
            while parent[a] != usize::MAX {
                a = parent[a];
                p.push(a);
            }
            p
        };
        for (idx, bond) in g.bonds().iter().enumerate() {
            if bridges[idx] {
                continue;
            }
            let (x, y) = (bond.a, bond.b);
            if dist[x] == usize::MAX || parent[x] == y || parent[y] == x {
                continue;
            }
            let px = path_to_root(x);
            let py = path_to_root(y);
            // Paths may share only the root v.
            let shares_only_root = px[..px.len() - 1].iter().all(|a| !py.contains(a))
                && py[..py.len() - 1].iter().all(|a| !px.contains(a));
            if !shares_only_root {
                continue;
            }
            let mut ids: Vec<usize> = vec![idx];
            for w in [&px, &py] {
                for pair in w.windows(2) {
                    ids.push(eid(pair[0], pair[1]));
                }
            }
            ids.sort_unstable();
            ids.dedup();
            let mut bits = vec![0u64; words];
            for &e in &ids {
                bits[e / 64] |= 1 << (e % 64);
            }
            candidates.push((ids.len(), ids, bits));
        }
    }
    candidates.sort();
    candidates.dedup_by(|a, b| a.1 == b.1);

    // Greedy GF(2) independence.
    let mut basis: Vec<Vec<u64>> = Vec::new(); // reduced rows
    let mut rings: Vec<Vec<usize>> = Vec::new();
    for (_, ids, bits) in candidates {
        if rings.len() == dim {
            break;
        }
        let mut row = bits.clone();
        for b in &basis {
            let lead = b.iter().rposition(|&w| w != 0).unwrap();
            let lead_bit = 63 - b[lead].leading_zeros() as usize;
            if row[lead] >> lead_bit & 1 == 1 {
                for (r, q) in row.iter_mut().zip(b) {
                    *r ^= q;
                }
            }
        }
        if row.iter().any(|&w| w != 0) {
            basis.push(row);
            let mut atoms: Vec<usize> = ids
                .iter()
                .flat_map(|&e| [g.bonds()[e].a, g.bonds()[e].b])
                .collect();
            atoms.sort_unstable();
            atoms.dedup();
            rings.push(atoms);
        }
    }
    debug_assert_eq!(rings.len(), dim, "cycle basis incomplete");
    rings
}

/// Splits `g` into clusters and connects them into a junction tree.
pub fn decompose(g: &MolGraph) -> JunctionTree {
    assert!(g.atom_count() > 0, "cannot decompose an empty graph");
    let bridges = g.bridge_flags();

    // Bond clusters for every non-ring bond, then rings, merging fused rings
    // that share more than two atoms.
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut kinds: Vec<ClusterKind> = Vec::new();
    for (idx, bond) in g.bonds().iter().enumerate() {
        if bridges[idx] {
            clusters.push(vec![bond.a.min(bond.b), bond.a.max(bond.b)]);
            kinds.push(ClusterKind::Bond);
        }
    }
    for ring in smallest_rings(g) {
        clusters.push(ring);
        kinds.push(ClusterKind::Ring);
    }
    if clusters.is_empty() {
        // Single atom (a one-atom molecule has no bonds).
        clusters.push(vec![0]);
        kinds.push(ClusterKind::Singleton);
    }
    loop {
        let mut merged = false;
        'outer: for i in 0..clusters.len() {
            if clusters[i].len() <= 2 {
                continue;
            }
            for j in i + 1..clusters.len() {
                if clusters[j].len() <= 2 {
                    continue;
                }
                let inter = clusters[i].iter().filter(|a| clusters[j].contains(a)).count();
                if inter > 2 {
                    let extra = std::mem::take(&mut clusters[j]);
                    clusters[i].extend(extra);
                    clusters[i].sort_unstable();
                    clusters[i].dedup();
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    let keep: Vec<usize> = (0..clusters.len()).filter(|&i| !clusters[i].is_empty()).collect();
    let mut clusters: Vec<Vec<usize>> = keep.iter().map(|&i| clusters[i].clone()).collect();
    let mut kinds: Vec<ClusterKind> = keep.iter().map(|&i| kinds[i]).collect();

    // Overlap edges, plus bridging singletons for heavily shared atoms. An
    // atom spanning many two-atom clusters (or sitting at the hub of more
    // than two large rings) becomes its own cluster so the tree stays a
    // faithful junction structure.
    let mut membership: Vec<Vec<usize>> = vec![Vec::new(); g.atom_count()];
    for (ci, cluster) in clusters.iter().enumerate() {
        for &a in cluster {
            membership[a].push(ci);
        }
    }
    let mut weights: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for (atom, cnei) in membership.iter().enumerate() {
        if cnei.len() <= 1 {
            continue;
        }
        let bonds = cnei.iter().filter(|&&c| clusters[c].len() == 2).count();
        let big_rings = cnei.iter().filter(|&&c| clusters[c].len() > 4).count();
        if bonds > 2 || (bonds == 2 && cnei.len() > 2) {
            let s = clusters.len();
            clusters.push(vec![atom]);
            kinds.push(ClusterKind::Singleton);
            for &c in cnei {
                weights.insert((c.min(s), c.max(s)), 1);
            }
        } else if big_rings > 2 {
            let s = clusters.len();
            clusters.push(vec![atom]);
            kinds.push(ClusterKind::Singleton);
            for &c in cnei {
                weights.insert((c.min(s), c.max(s)), RING_HUB_WEIGHT);
            }
        } else {
            for i in 0..cnei.len() {
                for j in i + 1..cnei.len() {
                    let (c1, c2) = (cnei[i].min(cnei[j]), cnei[i].max(cnei[j]));
                    let inter = clusters[c1]
                        .iter()
                        .filter(|a| clusters[c2].contains(a))
                        .count() as i64;
                    let w = weights.entry((c1, c2)).or_insert(0);
                    *w = (*w).max(inter);
                }
            }
        }
    }

    let nodes: Vec<Cluster> = clusters
        .iter()
        .zip(&kinds)
        .map(|(atoms, &kind)| {
            let (frag, _) = g.induced_subgraph(atoms);
            Cluster { atoms: atoms.clone(), kind, key: write_smiles(&frag) }
        })
        .collect();

    // Maximum spanning tree (Kruskal), ties broken by the clusters' keys so
    // the result never depends on hash order.
    let mut edge_list: Vec<((usize, usize), i64)> = weights.into_iter().collect();
    edge_list.sort_by(|&((a1, b1), w1), &((a2, b2), w2)| {
        w2.cmp(&w1)
            .then_with(|| nodes[a1].key.cmp(&nodes[a2].key))
            .then_with(|| nodes[b1].key.cmp(&nodes[b2].key))
            .then_with(|| (a1, b1).cmp(&(a2, b2)))
    });
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut edges = Vec::with_capacity(nodes.len().saturating_sub(1));
    for ((a, b), _) in edge_list {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            edges.push((a, b));
        }
    }
    let mut adjacency = vec![Vec::new(); nodes.len()];
    for &(a, b) in &edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    let root = (0..nodes.len())
        .find(|&c| nodes[c].atoms.contains(&0))
        .expect("atom 0 is in some cluster");
    JunctionTree { nodes, edges, adjacency, root }
}

/// Catalog of cluster fragments seen in a corpus, densest first.
#[derive(Debug, Clone)]
pub struct ComponentVocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct VocabEntry {
    pub id: usize,
    pub count: u64,
    pub key: String,
}

impl ComponentVocabulary {
    pub fn build<'a>(corpus: impl IntoIterator<Item = &'a MolGraph>) -> ComponentVocabulary {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for g in corpus {
            for node in decompose(g).nodes {
                *counts.entry(node.key).or_insert(0) += 1;
            }
        }
        let mut pairs: Vec<(String, u64)> = counts.into_iter().collect();
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let entries: Vec<VocabEntry> = pairs
            .into_iter()
            .enumerate()
            .map(|(id, (key, count))| VocabEntry { id, count, key })
            .collect();
        let index = entries.iter().map(|e| (e.key.clone(), e.id)).collect();
        ComponentVocabulary { entries, index }
    }

    pub fn id_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn entry(&self, id: usize) -> &VocabEntry {
        &self.entries[id]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &VocabEntry> {
        self.entries.iter()
    }

    /// One line per entry: `id<TAB>count<TAB>fragment`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\t{}\n", e.id, e.count, e.key));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<ComponentVocabulary, VocabError> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let bad = |reason: &str| VocabError::Parse {
                line: lineno + 1,
                reason: reason.to_string(),
            };
            let id: usize = parts
                .next()
                .ok_or_else(|| bad("missing id"))?
                .parse()
                .map_err(|_| bad("id is not an integer"))?;
            let count: u64 = parts
                .next()
                .ok_or_else(|| bad("missing count"))?
                .parse()
                .map_err(|_| bad("count is not an integer"))?;
            let key = parts.next().ok_or_else(|| bad("missing fragment"))?.to_string();
            if id != entries.len() {
                return Err(bad("ids must be dense and ascending from 0"));
            }
            entries.push(VocabEntry { id, count, key });
        }
        let index = entries.iter().map(|e: &VocabEntry| (e.key.clone(), e.id)).collect();
        Ok(ComponentVocabulary { entries, index })
    }
}

/// A partially assembled molecule: the graph so far plus, for every realized
/// tree node, the image of its cluster atoms (`node_atoms[n][i]` is the graph
/// atom realizing fragment atom `i` of node `n`).
#[derive(Debug, Clone)]
pub struct PartialAssembly {
    pub graph: MolGraph,
    pub node_atoms: Vec<Option<Vec<usize>>>,
}

/// One way of attaching a node's fragment to the partial assembly.
#[derive(Debug, Clone)]
pub struct Candidate {
    /// The grown graph, atoms renumbered into its canonical order (with the
    /// new-atom marking as color), so isomorphic candidates are bitwise
    /// identical.
    pub graph: MolGraph,
    /// Per-atom flag: the atom arrived with the newly attached fragment.
    pub is_new: Vec<bool>,
    /// Updated realization maps, in the candidate's atom order.
    pub node_atoms: Vec<Option<Vec<usize>>>,
}

impl Candidate {
    pub fn into_state(self) -> PartialAssembly {
        PartialAssembly { graph: self.graph, node_atoms: self.node_atoms }
    }

    fn dedup_key(&self) -> Vec<u64> {
        let colors: Vec<u64> = self.is_new.iter().map(|&b| u64::from(b)).collect();
        certificate_colored(&self.graph, &colors)
    }
}

fn atoms_compatible(a: &MolGraph, i: usize, b: &MolGraph, j: usize) -> bool {
    let (x, y) = (a.atom(i), b.atom(j));
    x.element == y.element
        && x.charge == y.charge
        && x.aromatic == y.aromatic
        && x.isotope == y.isotope
        && x.explicit_h == y.explicit_h
}

/// All valid ways to glue `fragment` (the cluster of `node`) onto `state`.
///
/// The overlap is with the realized tree neighbor (the parent in assembly
/// order): either one shared atom or one shared bond, matching atom
/// attributes and bond order. Results are valence-checked, deduplicated up
/// to isomorphism with the new atoms marked, canonically ordered, and capped
/// at `cap` (logged when the cap bites). An unplaced root fragment realizes
/// as itself.
pub fn enumerate_assemblies(
    tree: &JunctionTree,
    node: usize,
    state: &PartialAssembly,
    fragment: &MolGraph,
    cap: usize,
) -> Result<Vec<Candidate>, AssembleError> {
    let realized_parent = tree.adjacency[node]
        .iter()
        .find(|&&m| state.node_atoms[m].is_some());

    let mut raw: Vec<Candidate> = Vec::new();
    match realized_parent {
        None => {
            // Root placement: the fragment stands alone.
            let mapped: Vec<usize> = (0..fragment.atom_count()).collect();
            if let Some(c) = build_candidate(tree, node, state, fragment, &[], &mapped) {
                raw.push(c);
            }
        }
        Some(&parent) => {
            let parent_atoms = state.node_atoms[parent].as_ref().unwrap();
            // One shared atom.
            for fa in 0..fragment.atom_count() {
                for &pa in parent_atoms {
                    if !atoms_compatible(fragment, fa, &state.graph, pa) {
                        continue;
                    }
                    if let Some(c) =
                        build_candidate(tree, node, state, fragment, &[(fa, pa)], &[])
                    {
                        raw.push(c);
                    }
                }
            }
            // One shared bond, both orientations.
            for bond in fragment.bonds() {
                for &pa in parent_atoms {
                    for &pb in parent_atoms {
                        if state.graph.bond_between(pa, pb) != Some(bond.order) {
                            continue;
                        }
                        if atoms_compatible(fragment, bond.a, &state.graph, pa)
                            && atoms_compatible(fragment, bond.b, &state.graph, pb)
                        {
                            if let Some(c) = build_candidate(
                                tree,
                                node,
                                state,
                                fragment,
                                &[(bond.a, pa), (bond.b, pb)],
                                &[],
                            ) {
                                raw.push(c);
                            }
                        }
                    }
                }
            }
        }
    }

    raw.sort_by_key(|c| c.dedup_key());
    raw.dedup_by(|a, b| a.dedup_key() == b.dedup_key());
    if raw.is_empty() {
        return Err(AssembleError::NoValidAttachment(node));
    }
    if raw.len() > cap {
        warn!("assembly candidates at node {node} truncated: {} -> {cap}", raw.len());
        raw.truncate(cap);
    }
    Ok(raw)
}

/// Glues the fragment onto the state along `shared` (fragment atom → graph
/// atom), or places it fresh when `fresh_map` lists all fragment atoms.
/// Returns None when the glue collides (duplicate bond) or breaks a valence.
fn build_candidate(
    tree: &JunctionTree,
    node: usize,
    state: &PartialAssembly,
    fragment: &MolGraph,
    shared: &[(usize, usize)],
    fresh_map: &[usize],
) -> Option<Candidate> {
    let mut g = state.graph.clone();
    let mut frag_to_new: Vec<Option<usize>> = vec![None; fragment.atom_count()];
    let mut is_new = vec![false; g.atom_count()];
    if !fresh_map.is_empty() {
        for (fa, atom) in fragment.atoms().iter().enumerate() {
            let idx = g.add_atom(*atom).ok()?;
            frag_to_new[fa] = Some(idx);
            is_new.push(true);
        }
    } else {
        for &(fa, pa) in shared {
            frag_to_new[fa] = Some(pa);
        }
        for (fa, atom) in fragment.atoms().iter().enumerate() {
            if frag_to_new[fa].is_none() {
                let idx = g.add_atom(*atom).ok()?;
                frag_to_new[fa] = Some(idx);
                is_new.push(true);
            }
        }
    }
    for bond in fragment.bonds() {
        let (a, b) = (frag_to_new[bond.a].unwrap(), frag_to_new[bond.b].unwrap());
        if g.bond_between(a, b) == Some(bond.order)
            && shared.iter().any(|&(fa, _)| fa == bond.a)
            && shared.iter().any(|&(fa, _)| fa == bond.b)
        {
            // The deliberately shared bond already exists.
            continue;
        }
        g.add_bond(a, b, bond.order).ok()?;
    }
    if g.validate_valences().is_err() {
        return None;
    }

    let mut node_atoms = state.node_atoms.clone();
    node_atoms[node] = Some(frag_to_new.iter().map(|m| m.unwrap()).collect());

    // Renumber into the canonical order of the colored graph so equal
    // candidates become bitwise equal.
    let colors: Vec<u64> = is_new.iter().map(|&b| u64::from(b)).collect();
    let ranks = canonical_rank_colored(&g, &colors);
    let mut order: Vec<usize> = (0..g.atom_count()).collect();
    order.sort_unstable_by_key(|&i| ranks[i]);
    let graph = g.permuted(&order);
    let mut new_flags = vec![false; graph.atom_count()];
    for (i, &flag) in is_new.iter().enumerate() {
        new_flags[ranks[i]] = flag;
    }
    for mapping in node_atoms.iter_mut().flatten() {
        for a in mapping.iter_mut() {
            *a = ranks[*a];
        }
    }
    let _ = tree;
    Some(Candidate { graph, is_new: new_flags, node_atoms })
}

/// One assembly decision while replaying a molecule's own decomposition.
#[derive(Debug, Clone)]
pub struct AssemblyStep {
    pub node: usize,
    pub candidates: Vec<Candidate>,
    /// Index into `candidates` of the attachment the molecule actually uses.
    pub truth: usize,
}

/// Replays the decomposition of `g`: realizes nodes in DFS order, and at
/// each non-root node records the full candidate set and which candidate is
/// the molecule's own attachment (matched by colored certificate against the
/// induced subgraph of the atoms realized so far).
pub fn ground_truth_assembly(
    g: &MolGraph,
    tree: &JunctionTree,
    cap: usize,
) -> Result<(Vec<AssemblyStep>, PartialAssembly), AssembleError> {
    let order = tree.dfs_order();
    let mut realized: Vec<bool> = vec![false; g.atom_count()];
    let mut state = PartialAssembly {
        graph: MolGraph::new(),
        node_atoms: vec![None; tree.nodes.len()],
    };
    let mut steps = Vec::new();
    for (step_idx, &node) in order.iter().enumerate() {
        let (fragment, src_map) = g.induced_subgraph(&tree.nodes[node].atoms);
        let candidates = enumerate_assemblies(tree, node, &state, &fragment, cap)?;
        // The true partial graph after this node: induced on all atoms
        // realized so far plus this cluster, new atoms colored.
        let mut now_realized = realized.clone();
        for &a in &tree.nodes[node].atoms {
            now_realized[a] = true;
        }
        let members: Vec<usize> = (0..g.atom_count()).filter(|&a| now_realized[a]).collect();
        let (true_partial, true_map) = g.induced_subgraph(&members);
        let true_colors: Vec<u64> = true_map
            .iter()
            .map(|&src| u64::from(!realized[src] && src_map.contains(&src)))
            .collect();
        let true_key = certificate_colored(&true_partial, &true_colors);
        let truth = candidates
            .iter()
            .position(|c| c.dedup_key() == true_key)
            .ok_or(AssembleError::GroundTruthMissing(node))?;
        // Adopt the true partial itself as the forced state. The matched
        // candidate is only isomorphic to it, and its bookkeeping can realize
        // a cluster at atoms that are interchangeable in this partial but not
        // in the finished molecule, stranding a later step with no match.
        let mut inv = vec![usize::MAX; g.atom_count()];
        for (i, &src) in true_map.iter().enumerate() {
            inv[src] = i;
        }
        let mut node_atoms: Vec<Option<Vec<usize>>> = vec![None; tree.nodes.len()];
        for &placed in &order[..=step_idx] {
            node_atoms[placed] =
                Some(tree.nodes[placed].atoms.iter().map(|&src| inv[src]).collect());
        }
        state = PartialAssembly { graph: true_partial, node_atoms };
        realized = now_realized;
        if step_idx > 0 {
            steps.push(AssemblyStep { node, candidates, truth });
        }
    }
    Ok((steps, state))
}

/// Assembles a molecule from per-node attachment choices (indices into each
/// step's candidate list, in DFS order after the root).
pub fn realize_molecule(
    tree: &JunctionTree,
    fragments: &[MolGraph],
    choices: &[usize],
    cap: usize,
) -> Result<MolGraph, AssembleError> {
    let order = tree.dfs_order();
    let mut state = PartialAssembly {
        graph: MolGraph::new(),
        node_atoms: vec![None; tree.nodes.len()],
    };
    let mut choice_iter = choices.iter();
    for (step_idx, &node) in order.iter().enumerate() {
        let candidates = enumerate_assemblies(tree, node, &state, &fragments[node], cap)?;
        let pick = if step_idx == 0 {
            0
        } else {
            *choice_iter.next().ok_or(AssembleError::MissingChoice(node))?
        };
        let cand = candidates
            .into_iter()
            .nth(pick)
            .ok_or(AssembleError::BadChoice { node, pick })?;
        state = cand.into_state();
    }
    state.graph.validate_valences().map_err(AssembleError::Graph)?;
    Ok(state.graph)
}
