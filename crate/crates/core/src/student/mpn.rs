//! Message passing over molecular graphs and over cluster trees.
//!
//! Both encoders share one loopy-belief-propagation shape: directed edge
//! messages start at zero, are refreshed for a fixed number of rounds from
//! the source node's features plus all *other* incoming messages, and node
//! embeddings are read out from the final incoming sums. The graph variant
//! additionally feeds bond features into each message.

use super::tape::{Tape, ValueId};
use super::tensor::{ParamId, ParamStore};
use rand_chacha::ChaCha8Rng;

/// One hidden relu layer, linear output.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

impl Mlp {
    pub fn register(
        store: &mut ParamStore,
        rng: &mut ChaCha8Rng,
        name: &str,
        d_in: usize,
        d_hidden: usize,
        d_out: usize,
    ) -> Mlp {
        Mlp {
            w1: store.register(&format!("{name}.w1"), d_hidden, d_in, rng),
            b1: store.register(&format!("{name}.b1"), d_hidden, 1, rng),
            w2: store.register(&format!("{name}.w2"), d_out, d_hidden, rng),
            b2: store.register(&format!("{name}.b2"), d_out, 1, rng),
        }
    }

    pub fn apply(&self, tape: &mut Tape, store: &ParamStore, x: ValueId) -> ValueId {
        let h = tape.affine(store, self.w1, Some(self.b1), x);
        let h = tape.relu(h);
        tape.affine(store, self.w2, Some(self.b2), h)
    }
}

/// A directed-message encoder; `edges` are undirected with optional edge
/// features shared by both directions.
#[derive(Debug, Clone)]
pub struct MessagePassing {
    pub f_message: Mlp,
    pub f_readout: Mlp,
    pub dim: usize,
    pub rounds: usize,
}

impl MessagePassing {
    pub fn register(
        store: &mut ParamStore,
        rng: &mut ChaCha8Rng,
        name: &str,
        node_features: usize,
        edge_features: usize,
        dim: usize,
        rounds: usize,
    ) -> MessagePassing {
        let f_message = Mlp::register(
            store,
            rng,
            &format!("{name}.message"),
            node_features + edge_features + dim,
            dim,
            dim,
        );
        let f_readout = Mlp::register(store, rng, &format!("{name}.readout"), node_features + dim, dim, dim);
        MessagePassing { f_message, f_readout, dim, rounds }
    }

    /// Returns one embedding per node.
    pub fn run(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        node_count: usize,
        feats: &[ValueId],
        edges: &[(usize, usize, Option<ValueId>)],
    ) -> Vec<ValueId> {
        assert_eq!(feats.len(), node_count, "one feature vector per node");
        // Directed slot 2k is edges[k].0 → edges[k].1; slot 2k+1 the reverse.
        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); node_count];
        for (k, &(a, b, _)) in edges.iter().enumerate() {
            incoming[b].push(2 * k);
            incoming[a].push(2 * k + 1);
        }
        let zero = tape.zeros(self.dim);
        let mut messages: Vec<ValueId> = vec![zero; 2 * edges.len()];
        for _ in 0..self.rounds {
            let mut next = Vec::with_capacity(messages.len());
            for (k, &(a, b, feat)) in edges.iter().enumerate() {
                for (slot, src, dst) in [(2 * k, a, b), (2 * k + 1, b, a)] {
                    let _ = dst;
                    let reverse = slot ^ 1;
                    let inputs: Vec<ValueId> =
                        incoming[src].iter().filter(|&&s| s != reverse).map(|&s| messages[s]).collect();
                    let summed = if inputs.is_empty() { zero } else { tape.sum_vecs(&inputs) };
                    let stacked = match feat {
                        Some(f) => tape.concat(&[feats[src], f, summed]),
                        None => tape.concat(&[feats[src], summed]),
                    };
                    debug_assert_eq!(next.len(), slot);
                    next.push(self.f_message.apply(tape, store, stacked));
                }
            }
            messages = next;
        }
        (0..node_count)
            .map(|i| {
                let inputs: Vec<ValueId> = incoming[i].iter().map(|&s| messages[s]).collect();
                let summed = if inputs.is_empty() { zero } else { tape.sum_vecs(&inputs) };
                let stacked = tape.concat(&[feats[i], summed]);
                self.f_readout.apply(tape, store, stacked)
            })
            .collect()
    }
}
