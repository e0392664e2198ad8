//! The learned polisher: shared encoders plus the center, branch,
//! topological, label, and candidate-scoring heads.

use super::feat::{atom_features, bond_features, ATOM_FEATURES, BOND_FEATURES};
use super::mpn::{MessagePassing, Mlp};
use super::tape::{Tape, ValueId};
use super::tensor::{ParamId, ParamStore};
use crate::branch::{branches_around, Branch, BranchSet};
use crate::error::StudentError;
use crate::graph::MolGraph;
use crate::juncttree::{ComponentVocabulary, JunctionTree};
use crate::smiles::canonical_rank;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudentConfig {
    /// Hidden/embedding width.
    pub hidden: usize,
    /// Message-passing rounds for both encoders.
    pub mpn_rounds: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Multiply the learning rate by 0.9 after each epoch.
    pub anneal: bool,
    /// Weights for the center, branch, topology, label, and assembly losses.
    pub loss_weights: [f64; 5],
    /// Maximum clusters a decoded tree may grow.
    pub decode_budget: usize,
    /// Candidate cap handed to assembly enumeration.
    pub assembly_cap: usize,
}

impl Default for StudentConfig {
    fn default() -> Self {
        StudentConfig {
            hidden: 64,
            mpn_rounds: 4,
            seed: 0,
            learning_rate: 1e-4,
            batch_size: 32,
            epochs: 30,
            anneal: false,
            loss_weights: [1.0; 5],
            decode_budget: 30,
            assembly_cap: crate::juncttree::DEFAULT_ASSEMBLY_CAP,
        }
    }
}

/// Gated recurrent unit over tree messages: the update gate blends the sum
/// of incoming messages with a candidate state, and per-message reset gates
/// filter what the candidate sees.
#[derive(Debug, Clone)]
pub struct TreeGru {
    wz: ParamId,
    uz: ParamId,
    bz: ParamId,
    wr: ParamId,
    ur: ParamId,
    br: ParamId,
    wh: ParamId,
    uh: ParamId,
    bh: ParamId,
}

impl TreeGru {
    fn register(store: &mut ParamStore, rng: &mut ChaCha8Rng, d: usize) -> TreeGru {
        TreeGru {
            wz: store.register("gru.wz", d, d, rng),
            uz: store.register("gru.uz", d, d, rng),
            bz: store.register("gru.bz", d, 1, rng),
            wr: store.register("gru.wr", d, d, rng),
            ur: store.register("gru.ur", d, d, rng),
            br: store.register("gru.br", d, 1, rng),
            wh: store.register("gru.wh", d, d, rng),
            uh: store.register("gru.uh", d, d, rng),
            bh: store.register("gru.bh", d, 1, rng),
        }
    }

    /// New outgoing message from a node with feature `x` and incoming
    /// messages `h` (excluding the edge being written).
    pub fn step(&self, tape: &mut Tape, store: &ParamStore, x: ValueId, incoming: &[ValueId]) -> ValueId {
        let d = store.tensor(self.bz).len();
        let s = if incoming.is_empty() { tape.zeros(d) } else { tape.sum_vecs(incoming) };
        let zx = tape.affine(store, self.wz, Some(self.bz), x);
        let zs = tape.affine(store, self.uz, None, s);
        let z = tape.add(zx, zs);
        let z = tape.sigmoid(z);
        let gated = if incoming.is_empty() {
            tape.zeros(d)
        } else {
            let rx = tape.affine(store, self.wr, Some(self.br), x);
            let parts: Vec<ValueId> = incoming
                .iter()
                .map(|&h| {
                    let rh = tape.affine(store, self.ur, None, h);
                    let r = tape.add(rx, rh);
                    let r = tape.sigmoid(r);
                    tape.mul(r, h)
                })
                .collect();
            tape.sum_vecs(&parts)
        };
        let hx = tape.affine(store, self.wh, Some(self.bh), x);
        let hg = tape.affine(store, self.uh, None, gated);
        let cand = tape.add(hx, hg);
        let cand = tape.tanh(cand);
        // h = s + z ⊙ (cand − s)
        let neg_s = tape.scale(s, -1.0);
        let delta = tape.add(cand, neg_s);
        let blended = tape.mul(z, delta);
        tape.add(s, blended)
    }
}

/// Node embeddings of the four encoder views: source molecule graph,
/// preserved-region graph, and both of their cluster trees.
pub struct EncodedViews {
    pub x_graph: Vec<ValueId>,
    pub r_graph: Vec<ValueId>,
    pub x_tree: Vec<ValueId>,
    pub r_tree: Vec<ValueId>,
}

pub struct StudentModel {
    pub config: StudentConfig,
    pub vocab: ComponentVocabulary,
    pub store: ParamStore,
    pub graph_encoder: MessagePassing,
    pub tree_encoder: MessagePassing,
    /// Cluster-label embeddings; the extra final row stands in for labels
    /// outside the vocabulary.
    pub cluster_embed: ParamId,
    pub center_head: Mlp,
    pub branch_head: Mlp,
    pub gru: TreeGru,
    pub topo_node: Mlp,
    pub topo_inbox: Mlp,
    pub topo_state: Mlp,
    pub topo_context: Mlp,
    pub topo_query: Mlp,
    pub topo_out: ParamId,
    pub label_query: Mlp,
    pub label_state: Mlp,
    pub label_context: Mlp,
    pub label_out: ParamId,
    pub score_context: Mlp,
}

impl StudentModel {
    pub fn new(config: StudentConfig, vocab: ComponentVocabulary) -> StudentModel {
        let d = config.hidden;
        let v = vocab.len();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let graph_encoder = MessagePassing::register(
            &mut store,
            &mut rng,
            "graph",
            ATOM_FEATURES,
            BOND_FEATURES,
            d,
            config.mpn_rounds,
        );
        let tree_encoder = MessagePassing::register(&mut store, &mut rng, "tree", d, 0, d, config.mpn_rounds);
        let cluster_embed = store.register("cluster_embed", v + 1, d, &mut rng);
        let center_head = Mlp::register(&mut store, &mut rng, "center", 2 * d, d, 1);
        let branch_head = Mlp::register(&mut store, &mut rng, "branch", 3 * d, d, 1);
        let gru = TreeGru::register(&mut store, &mut rng, d);
        let topo_node = Mlp::register(&mut store, &mut rng, "topo_node", d, d, d);
        let topo_inbox = Mlp::register(&mut store, &mut rng, "topo_inbox", d, d, d);
        let topo_state = Mlp::register(&mut store, &mut rng, "topo_state", d, d, d);
        let topo_context = Mlp::register(&mut store, &mut rng, "topo_context", 4 * d, d, d);
        let topo_query = Mlp::register(&mut store, &mut rng, "topo_query", d, d, d);
        let topo_out = store.register("topo_out", 1, d, &mut rng);
        let label_query = Mlp::register(&mut store, &mut rng, "label_query", d, d, d);
        let label_state = Mlp::register(&mut store, &mut rng, "label_state", d, d, d);
        let label_context = Mlp::register(&mut store, &mut rng, "label_context", 4 * d, d, d);
        let label_out = store.register("label_out", v, d, &mut rng);
        let score_context = Mlp::register(&mut store, &mut rng, "score_context", 2 * d, d, d);
        StudentModel {
            config,
            vocab,
            store,
            graph_encoder,
            tree_encoder,
            cluster_embed,
            center_head,
            branch_head,
            gru,
            topo_node,
            topo_inbox,
            topo_state,
            topo_context,
            topo_query,
            topo_out,
            label_query,
            label_state,
            label_context,
            label_out,
            score_context,
        }
    }

    pub fn param_count(&self) -> usize {
        self.store.param_count()
    }

    /// Vocabulary id used to embed a cluster key, falling back to the
    /// catch-all row for unseen keys.
    pub fn label_or_unknown(&self, key: &str) -> usize {
        self.vocab.id_of(key).unwrap_or(self.vocab.len())
    }

    /// Per-atom embeddings of a molecular graph.
    pub fn encode_graph(&self, tape: &mut Tape, g: &MolGraph) -> Vec<ValueId> {
        let feats: Vec<ValueId> = (0..g.atom_count()).map(|i| tape.input(atom_features(g, i))).collect();
        let edges: Vec<(usize, usize, Option<ValueId>)> = g
            .bonds()
            .iter()
            .map(|b| (b.a, b.b, Some(tape.input(bond_features(b.order)))))
            .collect();
        self.graph_encoder.run(tape, &self.store, g.atom_count(), &feats, &edges)
    }

    /// Per-cluster embeddings of a junction tree.
    pub fn encode_tree(&self, tape: &mut Tape, tree: &JunctionTree) -> Vec<ValueId> {
        let feats: Vec<ValueId> = tree
            .nodes
            .iter()
            .map(|c| tape.embed(&self.store, self.cluster_embed, self.label_or_unknown(&c.key)))
            .collect();
        let edges: Vec<(usize, usize, Option<ValueId>)> = tree.edges.iter().map(|&(a, b)| (a, b, None)).collect();
        self.tree_encoder.run(tape, &self.store, tree.nodes.len(), &feats, &edges)
    }

    pub fn encode_views(
        &self,
        tape: &mut Tape,
        x: &MolGraph,
        r: &MolGraph,
        x_tree: &JunctionTree,
        r_tree: &JunctionTree,
    ) -> EncodedViews {
        EncodedViews {
            x_graph: self.encode_graph(tape, x),
            r_graph: self.encode_graph(tape, r),
            x_tree: self.encode_tree(tape, x_tree),
            r_tree: self.encode_tree(tape, r_tree),
        }
    }

    /// Raw per-atom center scores (pre-softmax).
    pub fn center_scores(&self, tape: &mut Tape, x_embeddings: &[ValueId]) -> ValueId {
        let whole = tape.mean_vecs(x_embeddings);
        let per_atom: Vec<ValueId> = x_embeddings
            .iter()
            .map(|&h| {
                let stacked = tape.concat(&[whole, h]);
                self.center_head.apply(tape, &self.store, stacked)
            })
            .collect();
        tape.concat(&per_atom)
    }

    /// Softmax center distribution over atoms.
    pub fn center_forward(&self, tape: &mut Tape, x_embeddings: &[ValueId]) -> (ValueId, Vec<f64>) {
        let scores = self.center_scores(tape, x_embeddings);
        let probs = tape.softmax(scores);
        (scores, tape.value(probs).to_vec())
    }

    /// One preservation logit per branch, in the given order, accumulating
    /// the kept-so-far summary from its own thresholded decisions.
    pub fn branch_logits(
        &self,
        tape: &mut Tape,
        x_embeddings: &[ValueId],
        center: usize,
        branches: &[Branch],
    ) -> Vec<(ValueId, bool)> {
        let d = self.config.hidden;
        let h_center = x_embeddings[center];
        let mut kept: Vec<ValueId> = Vec::new();
        let mut out = Vec::with_capacity(branches.len());
        for branch in branches {
            let members: Vec<ValueId> = branch.source_indices.iter().map(|&i| x_embeddings[i]).collect();
            let h_branch = tape.mean_vecs(&members);
            let h_kept = if kept.is_empty() { tape.zeros(d) } else { tape.mean_vecs(&kept) };
            let stacked = tape.concat(&[h_center, h_branch, h_kept]);
            let logit = self.branch_head.apply(tape, &self.store, stacked);
            let keep = tape.scalar(logit) >= 0.0; // σ(z) ≥ 0.5 ⇔ z ≥ 0
            tape.note_decision(0x5000 | keep as u64);
            if keep {
                kept.push(h_branch);
            }
            out.push((logit, keep));
        }
        out
    }

    fn attend(&self, tape: &mut Tape, query_net: &Mlp, query_of: ValueId, views: &EncodedViews) -> ValueId {
        let q = query_net.apply(tape, &self.store, query_of);
        let mut pooled = Vec::with_capacity(4);
        for view in [&views.x_graph, &views.r_graph, &views.x_tree, &views.r_tree] {
            let scores: Vec<ValueId> = view.iter().map(|&h| tape.dot(q, h)).collect();
            let scores = tape.concat(&scores);
            let alphas = tape.softmax(scores);
            pooled.push(tape.lin_comb(alphas, view));
        }
        tape.concat(&pooled)
    }

    /// Expand-or-backtrack logit for the node state `h_t`.
    pub fn topo_logit(&self, tape: &mut Tape, h_t: ValueId, views: &EncodedViews) -> ValueId {
        let context = self.attend(tape, &self.topo_query, h_t, views);
        let a = self.topo_state.apply(tape, &self.store, h_t);
        let b = self.topo_context.apply(tape, &self.store, context);
        let sum = tape.add(a, b);
        let act = tape.relu(sum);
        tape.affine(&self.store, self.topo_out, None, act)
    }

    /// Node state for topological decisions: label embedding plus received
    /// messages, each through its own network, under a relu.
    pub fn topo_node_state(&self, tape: &mut Tape, x_label: ValueId, incoming: &[ValueId]) -> ValueId {
        let d = self.config.hidden;
        let inbox = if incoming.is_empty() { tape.zeros(d) } else { tape.sum_vecs(incoming) };
        let a = self.topo_node.apply(tape, &self.store, x_label);
        let b = self.topo_inbox.apply(tape, &self.store, inbox);
        let sum = tape.add(a, b);
        tape.relu(sum)
    }

    /// Vocabulary logits for the cluster label carried by message `h_msg`.
    pub fn label_logits(&self, tape: &mut Tape, h_msg: ValueId, views: &EncodedViews) -> ValueId {
        let context = self.attend(tape, &self.label_query, h_msg, views);
        let a = self.label_state.apply(tape, &self.store, h_msg);
        let b = self.label_context.apply(tape, &self.store, context);
        let sum = tape.add(a, b);
        let act = tape.relu(sum);
        tape.affine(&self.store, self.label_out, None, act)
    }

    /// Candidate score: pooled candidate embedding against the pooled
    /// source/preserved context.
    pub fn candidate_score(
        &self,
        tape: &mut Tape,
        candidate: &MolGraph,
        views: &EncodedViews,
    ) -> ValueId {
        let embeds = self.encode_graph(tape, candidate);
        let pooled = tape.sum_vecs(&embeds);
        let x_sum = tape.sum_vecs(&views.x_graph);
        let r_sum = tape.sum_vecs(&views.r_graph);
        let stacked = tape.concat(&[x_sum, r_sum]);
        let context = self.score_context.apply(tape, &self.store, stacked);
        tape.dot(pooled, context)
    }
}

/// KL divergence from the target center distribution to the predicted one,
/// expressed directly on the raw scores for numerical stability.
pub fn center_loss(tape: &mut Tape, scores: ValueId, target: &[f64]) -> Result<ValueId, StudentError> {
    let n = tape.value(scores).len();
    if n != target.len() {
        return Err(StudentError::Domain(format!(
            "center target length {} does not match {} atoms",
            target.len(),
            n
        )));
    }
    let mut entropy = 0.0;
    for &q in target {
        if q < 0.0 || !q.is_finite() {
            return Err(StudentError::Domain("center target must be a distribution".into()));
        }
        if q > 0.0 {
            entropy += q * q.max(1e-12).ln();
        }
    }
    let lse = tape.log_sum_exp(scores);
    let q_in = tape.input(target.to_vec());
    let expected = tape.dot(q_in, scores);
    let neg_expected = tape.scale(expected, -1.0);
    let cross = tape.add(lse, neg_expected);
    let shift = tape.input(vec![entropy]);
    Ok(tape.add(cross, shift))
}

/// Predicted center: argmax probability, ties broken toward the smaller
/// canonical rank so the answer is independent of input atom order.
pub fn predict_center(g: &MolGraph, probs: &[f64]) -> usize {
    assert_eq!(g.atom_count(), probs.len());
    let ranks = canonical_rank(g);
    let mut best = 0;
    for i in 1..probs.len() {
        if probs[i] > probs[best] || (probs[i] == probs[best] && ranks[i] < ranks[best]) {
            best = i;
        }
    }
    best
}

/// Bernoulli cross-entropy of one preservation decision, in the shifted
/// softplus form that stays finite for any logit.
pub fn bernoulli_loss(tape: &mut Tape, logit: ValueId, truth: bool) -> ValueId {
    let sp = tape.softplus(logit);
    if truth {
        let neg = tape.scale(logit, -1.0);
        tape.add(sp, neg)
    } else {
        sp
    }
}

/// Categorical cross-entropy of a label decision against integer truth.
pub fn categorical_loss(tape: &mut Tape, logits: ValueId, truth: usize) -> ValueId {
    let lse = tape.log_sum_exp(logits);
    let picked = tape.index(logits, truth);
    let neg = tape.scale(picked, -1.0);
    tape.add(lse, neg)
}

/// Branches of `g` around `center` ordered by the first appearance of any
/// anchor atom in the atom numbering (the written order for parsed input).
pub fn branches_in_written_order(g: &MolGraph, center: usize) -> Vec<Branch> {
    let set: BranchSet = branches_around(g, center);
    let mut branches = set.branches;
    branches.sort_by_key(|b| b.anchors.iter().map(|&(a, _)| b.source_indices[a]).min().unwrap_or(usize::MAX));
    branches
}
