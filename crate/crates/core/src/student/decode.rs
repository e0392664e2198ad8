//! Tree decoding, region construction, assembly scoring, and the final
//! merge that produces an output molecule.

use super::model::{EncodedViews, StudentModel};
use super::tape::{Tape, ValueId};
use crate::branch::{merge_disjoint, Branch};
use crate::error::{GraphError, StudentError};
use crate::graph::{Atom, MolGraph};
use crate::isomorphism::find_isomorphism;
use crate::juncttree::{
    decompose, enumerate_assemblies, ground_truth_assembly, Cluster, ClusterKind, ComponentVocabulary,
    JunctionTree, PartialAssembly,
};
use crate::smiles::{canonical_rank, parse_smiles};
use crate::teacher::PolishAnnotation;
use crate::Element;

/// Ground-truth walk of a junction tree: per-node vocabulary labels plus the
/// depth-first expand/backtrack step sequence.
#[derive(Debug, Clone)]
pub struct DecodeScript {
    /// Vocabulary id per tree node (indexed by tree node id).
    pub node_labels: Vec<usize>,
    pub steps: Vec<ScriptStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScriptStep {
    Expand { from: usize, to: usize },
    /// `to` is None exactly at the root, which terminates the walk.
    Backtrack { from: usize, to: Option<usize> },
}

/// Builds the forced walk for a tree whose every cluster is in `vocab`.
pub fn decode_script(tree: &JunctionTree, vocab: &ComponentVocabulary) -> Result<DecodeScript, StudentError> {
    let node_labels: Vec<usize> = tree
        .nodes
        .iter()
        .map(|c| vocab.id_of(&c.key).ok_or_else(|| StudentError::UnknownCluster(c.key.clone())))
        .collect::<Result<_, _>>()?;
    let mut steps = Vec::new();
    fn walk(tree: &JunctionTree, node: usize, parent: Option<usize>, steps: &mut Vec<ScriptStep>) {
        for &next in tree.neighbors(node) {
            if Some(next) != parent {
                steps.push(ScriptStep::Expand { from: node, to: next });
                walk(tree, next, Some(node), steps);
            }
        }
        steps.push(ScriptStep::Backtrack { from: node, to: parent });
    }
    walk(tree, tree.root, None, &mut steps);
    Ok(DecodeScript { node_labels, steps })
}

/// Logits gathered while replaying a ground-truth walk: one (logit, truth)
/// per topological decision and one (logits, truth) per label decision,
/// the root label first.
pub struct ForcedDecode {
    pub topo: Vec<(ValueId, bool)>,
    pub labels: Vec<(ValueId, usize)>,
}

pub fn decode_forced(
    tape: &mut Tape,
    model: &StudentModel,
    views: &EncodedViews,
    tree: &JunctionTree,
    script: &DecodeScript,
) -> ForcedDecode {
    let d = model.config.hidden;
    let embed = |tape: &mut Tape, label: usize| tape.embed(&model.store, model.cluster_embed, label);
    let mut incoming: Vec<Vec<(usize, ValueId)>> = vec![Vec::new(); tree.nodes.len()];
    let mut topo = Vec::new();
    let mut labels = Vec::new();

    // The root label is predicted before any message exists.
    let zero_msg = tape.zeros(d);
    let root_logits = model.label_logits(tape, zero_msg, views);
    labels.push((root_logits, script.node_labels[tree.root]));

    for step in &script.steps {
        match *step {
            ScriptStep::Expand { from, to } => {
                let x = embed(tape, script.node_labels[from]);
                let inbox: Vec<ValueId> = incoming[from].iter().map(|&(_, m)| m).collect();
                let h_t = model.topo_node_state(tape, x, &inbox);
                topo.push((model.topo_logit(tape, h_t, views), true));
                let msg = model.gru.step(tape, &model.store, x, &inbox);
                labels.push((model.label_logits(tape, msg, views), script.node_labels[to]));
                incoming[to].push((from, msg));
            }
            ScriptStep::Backtrack { from, to } => {
                let x = embed(tape, script.node_labels[from]);
                let inbox: Vec<ValueId> = incoming[from].iter().map(|&(_, m)| m).collect();
                let h_t = model.topo_node_state(tape, x, &inbox);
                topo.push((model.topo_logit(tape, h_t, views), false));
                if let Some(parent) = to {
                    let filtered: Vec<ValueId> =
                        incoming[from].iter().filter(|&&(src, _)| src != parent).map(|&(_, m)| m).collect();
                    let msg = model.gru.step(tape, &model.store, x, &filtered);
                    incoming[parent].push((from, msg));
                }
            }
        }
    }
    ForcedDecode { topo, labels }
}

/// Everything the greedy decoder decided, plus its probability trail.
#[derive(Debug, Clone)]
pub struct DecodeTrace {
    pub node_labels: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    /// Expand probability at each topological step.
    pub topo_probs: Vec<f64>,
    /// Full label distribution at each label step (root first).
    pub label_probs: Vec<Vec<f64>>,
}

impl DecodeTrace {
    /// Materializes the decoded topology as a junction tree rooted at the
    /// first node. Clusters carry keys and kinds but no source atoms.
    pub fn to_tree(&self, vocab: &ComponentVocabulary) -> Result<JunctionTree, StudentError> {
        let mut nodes = Vec::with_capacity(self.node_labels.len());
        for &label in &self.node_labels {
            let key = vocab.entry(label).key.clone();
            let fragment =
                parse_smiles(&key).map_err(|_| StudentError::UnknownCluster(key.clone()))?;
            let kind = if fragment.atom_count() == 1 {
                ClusterKind::Singleton
            } else if fragment.bond_count() < fragment.atom_count() {
                ClusterKind::Bond
            } else {
                ClusterKind::Ring
            };
            nodes.push(Cluster { atoms: Vec::new(), kind, key });
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &(a, b) in &self.edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        Ok(JunctionTree { nodes, edges: self.edges.clone(), adjacency, root: 0 })
    }
}

fn masked_argmax(logits: &[f64], allowed: &[usize]) -> usize {
    let mut best = allowed[0];
    for &i in allowed {
        if logits[i] > logits[best] {
            best = i;
        }
    }
    best
}

/// Greedy depth-first generation. `root_allowed` restricts the root label;
/// later labels range over the whole vocabulary.
pub fn decode_greedy(
    tape: &mut Tape,
    model: &StudentModel,
    views: &EncodedViews,
    root_allowed: &[usize],
) -> Result<DecodeTrace, StudentError> {
    if root_allowed.is_empty() {
        return Err(StudentError::Domain("no permitted root label".into()));
    }
    let d = model.config.hidden;
    let budget = model.config.decode_budget;
    let all_ids: Vec<usize> = (0..model.vocab.len()).collect();

    let zero_msg = tape.zeros(d);
    let root_logits = model.label_logits(tape, zero_msg, views);
    let root_dist = tape.softmax(root_logits);
    let root_dist = tape.value(root_dist).to_vec();
    let root_label = masked_argmax(tape.value(root_logits), root_allowed);
    tape.note_decision(0x9000 | root_label as u64);

    let mut trace = DecodeTrace {
        node_labels: vec![root_label],
        edges: Vec::new(),
        topo_probs: Vec::new(),
        label_probs: vec![root_dist],
    };
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut incoming: Vec<Vec<(usize, ValueId)>> = vec![Vec::new()];
    let mut current = 0usize;
    loop {
        let x = tape.embed(&model.store, model.cluster_embed, trace.node_labels[current]);
        let inbox: Vec<ValueId> = incoming[current].iter().map(|&(_, m)| m).collect();
        let h_t = model.topo_node_state(tape, x, &inbox);
        let logit = model.topo_logit(tape, h_t, views);
        let z = tape.scalar(logit);
        if !z.is_finite() {
            return Err(StudentError::NonFinite("topological logit".into()));
        }
        let expand = z >= 0.0;
        tape.note_decision(0x7000 | expand as u64);
        trace.topo_probs.push(1.0 / (1.0 + (-z).exp()));
        if expand {
            if trace.node_labels.len() >= budget {
                return Err(StudentError::BudgetExceeded(budget));
            }
            let msg = model.gru.step(tape, &model.store, x, &inbox);
            let logits = model.label_logits(tape, msg, views);
            let dist = tape.softmax(logits);
            trace.label_probs.push(tape.value(dist).to_vec());
            let label = masked_argmax(tape.value(logits), &all_ids);
            tape.note_decision(0x9000 | label as u64);
            let child = trace.node_labels.len();
            trace.node_labels.push(label);
            trace.edges.push((current, child));
            parent.push(Some(current));
            incoming.push(vec![(current, msg)]);
            current = child;
        } else {
            match parent[current] {
                None => break,
                Some(up) => {
                    let filtered: Vec<ValueId> =
                        incoming[current].iter().filter(|&&(src, _)| src != up).map(|&(_, m)| m).collect();
                    let msg = model.gru.step(tape, &model.store, x, &filtered);
                    incoming[up].push((current, msg));
                    current = up;
                }
            }
        }
    }
    Ok(trace)
}

/// The preserved region: the center atom of `x` plus the kept branches,
/// center first.
pub fn preserved_region(x: &MolGraph, center: usize, kept: &[Branch]) -> Result<MolGraph, GraphError> {
    let parts: Vec<(&MolGraph, &[(usize, crate::graph::BondOrder)])> =
        kept.iter().map(|b| (&b.fragment, b.anchors.as_slice())).collect();
    merge_disjoint(*x.atom(center), &parts)
}

/// The expansion region: the center (with its target-side attributes) plus
/// the branches to add, center first.
pub fn added_region(center_attrs: Atom, added: &[Branch]) -> Result<MolGraph, GraphError> {
    let parts: Vec<(&MolGraph, &[(usize, crate::graph::BondOrder)])> =
        added.iter().map(|b| (&b.fragment, b.anchors.as_slice())).collect();
    merge_disjoint(center_attrs, &parts)
}

/// Glues the preserved region onto the expansion: every bond of `r` at
/// `r_center` re-targets `a_center`, whose attributes (from the expansion
/// side) win. Fails if the union breaks a valence.
pub fn merge_final(
    r: &MolGraph,
    r_center: usize,
    a: &MolGraph,
    a_center: usize,
) -> Result<MolGraph, GraphError> {
    let mut out = a.clone();
    let mut map: Vec<Option<usize>> = vec![None; r.atom_count()];
    map[r_center] = Some(a_center);
    for (i, slot) in map.iter_mut().enumerate() {
        if i != r_center {
            *slot = Some(out.add_atom(*r.atom(i))?);
        }
    }
    for bond in r.bonds() {
        out.add_bond(map[bond.a].unwrap(), map[bond.b].unwrap(), bond.order)?;
    }
    out.validate_valences()?;
    Ok(out)
}

/// Among the root cluster's realized atoms, the designated image of the
/// optimization center: matching element, lowest canonical rank.
pub fn identify_center_image(a: &MolGraph, root_atoms: &[usize], element: Element) -> Option<usize> {
    let ranks = canonical_rank(a);
    root_atoms
        .iter()
        .copied()
        .filter(|&i| a.atom(i).element == element)
        .min_by_key(|&i| ranks[i])
}

/// Replays one annotated pair with every decision forced to ground truth:
/// build both regions, reassemble the expansion from its own decomposition,
/// and merge. The result must be the target molecule up to isomorphism —
/// this is the wiring oracle for the whole generation pipeline.
pub fn replay_pair(
    x: &MolGraph,
    y: &MolGraph,
    ann: &PolishAnnotation,
    cap: usize,
) -> Result<MolGraph, StudentError> {
    let kept: Vec<Branch> = ann.preserved.iter().map(|(bx, _)| bx.clone()).collect();
    let r = preserved_region(x, ann.center, &kept)?;
    let a = added_region(*y.atom(ann.mapped_center), &ann.added)?;
    let a_tree = decompose(&a);
    let (_, state) = ground_truth_assembly(&a, &a_tree, cap)?;
    // The assembled graph matches `a` only up to isomorphism, and the tracked
    // node atoms may realize the center at an atom that is interchangeable in
    // some partial state but not in the finished graph. Recover the center
    // through an explicit isomorphism instead of trusting the bookkeeping.
    let map = find_isomorphism(&a, &state.graph, None, None)
        .ok_or_else(|| StudentError::Domain("reassembled expansion lost isomorphism".into()))?;
    let a_center = map[0];
    Ok(merge_final(&r, 0, &state.graph, a_center)?)
}

/// Result of one generation attempt. `status` is "ok" on success, otherwise
/// a short reason token.
#[derive(Debug, Clone)]
pub struct GenerationOutcome {
    pub molecule: Option<MolGraph>,
    pub status: String,
    pub center: Option<usize>,
    pub kept_branches: usize,
    pub decoded_clusters: usize,
}

const STATUS_OK: &str = "ok";

/// One greedy generation pass: center, branch retention, preserved region,
/// tree decode, scored assembly, merge. Never panics on chemistry failures;
/// they come back as a status token.
pub fn generate(model: &StudentModel, x: &MolGraph) -> GenerationOutcome {
    let mut outcome = GenerationOutcome {
        molecule: None,
        status: STATUS_OK.to_string(),
        center: None,
        kept_branches: 0,
        decoded_clusters: 0,
    };
    if x.atom_count() == 0 {
        outcome.status = "empty-input".into();
        return outcome;
    }
    let mut tape = Tape::new();
    let x_tree = decompose(x);
    let x_embeds = model.encode_graph(&mut tape, x);
    let (_, probs) = model.center_forward(&mut tape, &x_embeds);
    if probs.iter().any(|p| !p.is_finite()) {
        outcome.status = "non-finite".into();
        return outcome;
    }
    let center = super::model::predict_center(x, &probs);
    outcome.center = Some(center);

    let branches = super::model::branches_in_written_order(x, center);
    let decisions = model.branch_logits(&mut tape, &x_embeds, center, &branches);
    let kept: Vec<Branch> = branches
        .iter()
        .zip(&decisions)
        .filter(|(_, (_, keep))| *keep)
        .map(|(b, _)| b.clone())
        .collect();
    outcome.kept_branches = kept.len();

    let r = match preserved_region(x, center, &kept) {
        Ok(r) => r,
        Err(e) => {
            outcome.status = format!("region:{e}");
            return outcome;
        }
    };
    let r_tree = decompose(&r);
    let views = model.encode_views(&mut tape, x, &r, &x_tree, &r_tree);

    let element = x.atom(center).element;
    let root_allowed: Vec<usize> = model
        .vocab
        .iter()
        .filter(|e| match parse_smiles(&e.key) {
            Ok(frag) => frag.atoms().iter().any(|a| a.element == element),
            Err(_) => false,
        })
        .map(|e| e.id)
        .collect();
    if root_allowed.is_empty() {
        outcome.status = "root-label".into();
        return outcome;
    }

    let trace = match decode_greedy(&mut tape, model, &views, &root_allowed) {
        Ok(t) => t,
        Err(StudentError::BudgetExceeded(_)) => {
            outcome.status = "budget".into();
            return outcome;
        }
        Err(e) => {
            outcome.status = format!("decode:{e}");
            return outcome;
        }
    };
    outcome.decoded_clusters = trace.node_labels.len();
    let tree = match trace.to_tree(&model.vocab) {
        Ok(t) => t,
        Err(e) => {
            outcome.status = format!("decode:{e}");
            return outcome;
        }
    };
    let fragments: Result<Vec<MolGraph>, StudentError> = tree
        .nodes
        .iter()
        .map(|c| parse_smiles(&c.key).map_err(|_| StudentError::UnknownCluster(c.key.clone())))
        .collect();
    let fragments = match fragments {
        Ok(f) => f,
        Err(_) => {
            outcome.status = "decode:vocabulary".into();
            return outcome;
        }
    };

    let mut state = PartialAssembly { graph: MolGraph::new(), node_atoms: vec![None; tree.nodes.len()] };
    for node in tree.dfs_order() {
        let candidates =
            match enumerate_assemblies(&tree, node, &state, &fragments[node], model.config.assembly_cap) {
                Ok(c) => c,
                Err(e) => {
                    outcome.status = format!("assembly:{e}");
                    return outcome;
                }
            };
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (k, cand) in candidates.iter().enumerate() {
            let s = model.candidate_score(&mut tape, &cand.graph, &views);
            let s = tape.scalar(s);
            if !s.is_finite() {
                outcome.status = "non-finite".into();
                return outcome;
            }
            if s > best_score {
                best_score = s;
                best = k;
            }
        }
        tape.note_decision(0xa000 | best as u64);
        state = candidates[best].clone().into_state();
    }

    let root_atoms = match state.node_atoms[tree.root].as_ref() {
        Some(atoms) => atoms.clone(),
        None => {
            outcome.status = "assembly:unrealized-root".into();
            return outcome;
        }
    };
    let a_center = match identify_center_image(&state.graph, &root_atoms, element) {
        Some(i) => i,
        None => {
            outcome.status = "center-image".into();
            return outcome;
        }
    };
    match merge_final(&r, 0, &state.graph, a_center) {
        Ok(molecule) => {
            outcome.molecule = Some(molecule);
        }
        Err(e) => {
            outcome.status = format!("valence:{e}");
        }
    }
    outcome
}
