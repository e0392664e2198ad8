//! Teacher-forced training: corpus preparation, the five-headed loss, the
//! epoch loop with Adam, and JSON checkpoints.

use super::decode::{decode_forced, decode_script, added_region, preserved_region, DecodeScript};
use super::model::{
    bernoulli_loss, branches_in_written_order, categorical_loss, center_loss, StudentConfig, StudentModel,
};
use super::tape::{Tape, ValueId};
use super::tensor::StoreSnapshot;
use crate::branch::Branch;
use crate::error::StudentError;
use crate::graph::MolGraph;
use crate::juncttree::{decompose, ground_truth_assembly, AssemblyStep, ComponentVocabulary, JunctionTree};
use crate::teacher::annotate_pair;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

/// One fully preprocessed training pair: everything the forward pass needs,
/// with no teacher or assembly work left.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub x: MolGraph,
    pub center: usize,
    /// Teacher center distribution over atoms of `x`.
    pub center_target: Vec<f64>,
    /// Branches around the center in written order, with keep flags.
    pub branches: Vec<Branch>,
    pub branch_truth: Vec<bool>,
    pub r: MolGraph,
    pub a: MolGraph,
    pub x_tree: JunctionTree,
    pub r_tree: JunctionTree,
    pub a_tree: JunctionTree,
    pub script: DecodeScript,
    pub assembly: Vec<AssemblyStep>,
}

/// Why a pair was dropped during preparation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    /// The teacher found no shared-element center.
    Teacher(String),
    /// The expansion region could not be rebuilt from its own clusters.
    Assembly(String),
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::Teacher(m) => write!(f, "teacher: {m}"),
            SkipReason::Assembly(m) => write!(f, "assembly: {m}"),
        }
    }
}

pub struct PreparedCorpus {
    pub samples: Vec<TrainSample>,
    pub vocab: ComponentVocabulary,
    /// (pair index, reason) for every dropped pair.
    pub skipped: Vec<(usize, SkipReason)>,
}

struct StagedPair {
    x: MolGraph,
    center: usize,
    center_target: Vec<f64>,
    branches: Vec<Branch>,
    branch_truth: Vec<bool>,
    r: MolGraph,
    a: MolGraph,
    a_tree: JunctionTree,
    assembly: Vec<AssemblyStep>,
}

/// Annotates every pair, builds both regions, replays the expansion
/// assembly, and collects the component vocabulary over all sources,
/// preserved regions, and expansions.
pub fn prepare_corpus(pairs: &[(MolGraph, MolGraph)], assembly_cap: usize) -> PreparedCorpus {
    let mut staged: Vec<StagedPair> = Vec::new();
    let mut skipped = Vec::new();
    for (idx, (x, y)) in pairs.iter().enumerate() {
        let ann = match annotate_pair(x, y) {
            Ok(a) => a,
            Err(e) => {
                skipped.push((idx, SkipReason::Teacher(e.to_string())));
                continue;
            }
        };
        let kept: Vec<Branch> = ann.preserved.iter().map(|(bx, _)| bx.clone()).collect();
        let r = match preserved_region(x, ann.center, &kept) {
            Ok(r) => r,
            Err(e) => {
                skipped.push((idx, SkipReason::Assembly(e.to_string())));
                continue;
            }
        };
        let a = match added_region(*y.atom(ann.mapped_center), &ann.added) {
            Ok(a) => a,
            Err(e) => {
                skipped.push((idx, SkipReason::Assembly(e.to_string())));
                continue;
            }
        };
        let a_tree = decompose(&a);
        let assembly = match ground_truth_assembly(&a, &a_tree, assembly_cap) {
            Ok((steps, _)) => steps,
            Err(e) => {
                skipped.push((idx, SkipReason::Assembly(e.to_string())));
                continue;
            }
        };
        let branches = branches_in_written_order(x, ann.center);
        let branch_truth: Vec<bool> = branches
            .iter()
            .map(|b| {
                let mut mine = b.source_indices.clone();
                mine.sort_unstable();
                ann.preserved.iter().any(|(bx, _)| {
                    let mut theirs = bx.source_indices.clone();
                    theirs.sort_unstable();
                    theirs == mine
                })
            })
            .collect();
        staged.push(StagedPair {
            x: x.clone(),
            center: ann.center,
            center_target: ann.scores.normalized.clone(),
            branches,
            branch_truth,
            r,
            a,
            a_tree,
            assembly,
        });
    }

    let vocab_graphs: Vec<&MolGraph> =
        staged.iter().flat_map(|s| [&s.x, &s.r, &s.a]).collect();
    let vocab = ComponentVocabulary::build(vocab_graphs);

    let mut samples = Vec::with_capacity(staged.len());
    for s in staged {
        // The vocabulary was built over these very graphs, so every cluster
        // key resolves.
        let script = decode_script(&s.a_tree, &vocab).expect("expansion clusters are in the vocabulary");
        samples.push(TrainSample {
            x_tree: decompose(&s.x),
            r_tree: decompose(&s.r),
            x: s.x,
            center: s.center,
            center_target: s.center_target,
            branches: s.branches,
            branch_truth: s.branch_truth,
            r: s.r,
            a: s.a,
            a_tree: s.a_tree,
            script,
            assembly: s.assembly,
        });
    }
    PreparedCorpus { samples, vocab, skipped }
}

/// The five loss heads of one sample, as live tape nodes.
pub struct SampleLosses {
    pub center: ValueId,
    pub branch: ValueId,
    pub topo: ValueId,
    pub label: ValueId,
    pub assembly: ValueId,
}

impl SampleLosses {
    pub fn values(&self, tape: &Tape) -> [f64; 5] {
        [
            tape.scalar(self.center),
            tape.scalar(self.branch),
            tape.scalar(self.topo),
            tape.scalar(self.label),
            tape.scalar(self.assembly),
        ]
    }
}

/// Runs the full teacher-forced forward pass for one sample.
pub fn forward_sample(
    tape: &mut Tape,
    model: &StudentModel,
    sample: &TrainSample,
) -> Result<SampleLosses, StudentError> {
    let x_embeds = model.encode_graph(tape, &sample.x);
    let scores = model.center_scores(tape, &x_embeds);
    let center = center_loss(tape, scores, &sample.center_target)?;

    let decisions = model.branch_logits(tape, &x_embeds, sample.center, &sample.branches);
    let branch = if decisions.is_empty() {
        tape.zeros(1)
    } else {
        let terms: Vec<ValueId> = decisions
            .iter()
            .zip(&sample.branch_truth)
            .map(|(&(logit, _), &truth)| bernoulli_loss(tape, logit, truth))
            .collect();
        tape.sum_vecs(&terms)
    };

    let views = model.encode_views(tape, &sample.x, &sample.r, &sample.x_tree, &sample.r_tree);
    let forced = decode_forced(tape, model, &views, &sample.a_tree, &sample.script);
    let topo_terms: Vec<ValueId> =
        forced.topo.iter().map(|&(logit, truth)| bernoulli_loss(tape, logit, truth)).collect();
    let topo = tape.sum_vecs(&topo_terms);
    let label_terms: Vec<ValueId> =
        forced.labels.iter().map(|&(logits, truth)| categorical_loss(tape, logits, truth)).collect();
    let label = tape.sum_vecs(&label_terms);

    let assembly = if sample.assembly.is_empty() {
        tape.zeros(1)
    } else {
        let terms: Vec<ValueId> = sample
            .assembly
            .iter()
            .map(|step| {
                let scores: Vec<ValueId> =
                    step.candidates.iter().map(|c| model.candidate_score(tape, &c.graph, &views)).collect();
                let scores = tape.concat(&scores);
                categorical_loss(tape, scores, step.truth)
            })
            .collect();
        tape.sum_vecs(&terms)
    };

    let losses = SampleLosses { center, branch, topo, label, assembly };
    for (value, name) in losses.values(tape).iter().zip(["center", "branch", "topology", "label", "assembly"]) {
        if !value.is_finite() {
            return Err(StudentError::NonFinite(format!("{name} loss")));
        }
    }
    Ok(losses)
}

/// Weighted total of the five heads.
pub fn weighted_total(tape: &mut Tape, losses: &SampleLosses, weights: &[f64; 5]) -> ValueId {
    let parts = [losses.center, losses.branch, losses.topo, losses.label, losses.assembly];
    let scaled: Vec<ValueId> = parts.iter().zip(weights).map(|(&l, &w)| tape.scale(l, w)).collect();
    tape.sum_vecs(&scaled)
}

/// Per-epoch mean losses (per sample) and wall time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub loss_total: f64,
    pub loss_center: f64,
    pub loss_branch: f64,
    pub loss_topo: f64,
    pub loss_label: f64,
    pub loss_assembly: f64,
    pub seconds: f64,
}

pub struct TrainOutcome {
    pub rows: Vec<EpochRow>,
    /// Set when training stopped early; checkpoints for completed epochs
    /// are already on disk.
    pub aborted: Option<StudentError>,
}

/// Runs epochs `first_epoch..=config.epochs`, updating the model in place.
/// Shuffling is derived from the seed and epoch number alone, so training
/// resumed from a checkpoint retraces the original run exactly.
pub fn train(
    model: &mut StudentModel,
    samples: &[TrainSample],
    first_epoch: usize,
    checkpoint_dir: Option<&Path>,
) -> TrainOutcome {
    let mut rows = Vec::new();
    if samples.is_empty() {
        return TrainOutcome { rows, aborted: Some(StudentError::Domain("no usable training pairs".into())) };
    }
    let config = model.config.clone();
    for epoch in first_epoch..=config.epochs {
        let start = Instant::now();
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ epoch as u64);
        order.shuffle(&mut rng);
        let lr = if config.anneal {
            config.learning_rate * 0.9f64.powi(epoch as i32 - 1)
        } else {
            config.learning_rate
        };
        let mut sums = [0.0f64; 6];
        for batch in order.chunks(config.batch_size) {
            model.store.zero_grads();
            for &i in batch {
                let mut tape = Tape::new();
                let losses = match forward_sample(&mut tape, model, &samples[i]) {
                    Ok(l) => l,
                    Err(e) => return TrainOutcome { rows, aborted: Some(e) },
                };
                let total = weighted_total(&mut tape, &losses, &config.loss_weights);
                let head_values = losses.values(&tape);
                let total_value = tape.scalar(total);
                if !total_value.is_finite() {
                    return TrainOutcome { rows, aborted: Some(StudentError::NonFinite("total loss".into())) };
                }
                sums[0] += total_value;
                for (s, v) in sums[1..].iter_mut().zip(head_values) {
                    *s += v;
                }
                tape.backward(total, &mut model.store);
            }
            model.store.scale_grads(1.0 / batch.len() as f64);
            model.store.adam_step(lr);
        }
        let n = samples.len() as f64;
        let row = EpochRow {
            epoch,
            loss_total: sums[0] / n,
            loss_center: sums[1] / n,
            loss_branch: sums[2] / n,
            loss_topo: sums[3] / n,
            loss_label: sums[4] / n,
            loss_assembly: sums[5] / n,
            seconds: start.elapsed().as_secs_f64(),
        };
        rows.push(row);
        if let Some(dir) = checkpoint_dir {
            if let Err(e) = save_checkpoint(model, epoch, &dir.join(format!("checkpoint_epoch_{epoch}.json"))) {
                return TrainOutcome { rows, aborted: Some(e) };
            }
            if let Err(e) = save_checkpoint(model, epoch, &dir.join("checkpoint_latest.json")) {
                return TrainOutcome { rows, aborted: Some(e) };
            }
        }
    }
    TrainOutcome { rows, aborted: None }
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    config: StudentConfig,
    vocab: String,
    epoch: usize,
    store: StoreSnapshot,
}

pub fn save_checkpoint(model: &StudentModel, epoch: usize, path: &Path) -> Result<(), StudentError> {
    let ck = Checkpoint {
        version: CHECKPOINT_VERSION,
        config: model.config.clone(),
        vocab: model.vocab.to_tsv(),
        epoch,
        store: model.store.to_snapshot(),
    };
    let text = serde_json::to_string(&ck).map_err(|e| StudentError::Checkpoint(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| StudentError::Checkpoint(format!("{}: {e}", path.display())))
}

/// Rebuilds the model (parameters, optimizer state, vocabulary, config) and
/// reports the epoch the checkpoint was written after.
pub fn load_checkpoint(path: &Path) -> Result<(StudentModel, usize), StudentError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| StudentError::Checkpoint(format!("{}: {e}", path.display())))?;
    let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| StudentError::Checkpoint(e.to_string()))?;
    if ck.version != CHECKPOINT_VERSION {
        return Err(StudentError::Checkpoint(format!("unsupported checkpoint version {}", ck.version)));
    }
    let vocab = ComponentVocabulary::from_tsv(&ck.vocab).map_err(|e| StudentError::Checkpoint(e.to_string()))?;
    let mut model = StudentModel::new(ck.config, vocab);
    model.store.restore(&ck.store).map_err(StudentError::Checkpoint)?;
    Ok((model, ck.epoch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn toy_pairs() -> Vec<(MolGraph, MolGraph)> {
        [
            ("CCO", "CCN"),
            ("CC(C)O", "CC(C)N"),
            ("CCCO", "CCCN"),
            ("CC(O)CC", "CC(N)CC"),
        ]
        .iter()
        .map(|(a, b)| (parse_smiles(a).unwrap(), parse_smiles(b).unwrap()))
        .collect()
    }

    fn toy_config(seed: u64, epochs: usize) -> StudentConfig {
        StudentConfig {
            hidden: 8,
            mpn_rounds: 2,
            seed,
            learning_rate: 5e-3,
            batch_size: 2,
            epochs,
            ..Default::default()
        }
    }

    #[test]
    fn corpus_preparation_builds_consistent_samples() {
        let pairs = toy_pairs();
        let corpus = prepare_corpus(&pairs, 2000);
        assert!(corpus.skipped.is_empty(), "unexpected skips: {:?}", corpus.skipped);
        assert_eq!(corpus.samples.len(), 4);
        for s in &corpus.samples {
            assert_eq!(s.branches.len(), s.branch_truth.len());
            assert!((s.center_target.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert_eq!(s.center_target.len(), s.x.atom_count());
            // Every expansion cluster is in the vocabulary.
            for c in &s.a_tree.nodes {
                assert!(corpus.vocab.id_of(&c.key).is_some(), "missing {}", c.key);
            }
            // The hydroxyl swap drops one branch and keeps the rest.
            assert_eq!(s.branch_truth.iter().filter(|&&k| !k).count(), 1);
        }

        // A pair with no shared element is skipped, not fatal.
        let bad = vec![(parse_smiles("O=O").unwrap(), parse_smiles("CC").unwrap())];
        let corpus = prepare_corpus(&bad, 2000);
        assert!(corpus.samples.is_empty());
        assert_eq!(corpus.skipped.len(), 1);
        assert!(matches!(corpus.skipped[0].1, SkipReason::Teacher(_)));
    }

    #[test]
    fn forward_losses_are_finite_and_nonnegative() {
        let pairs = toy_pairs();
        let corpus = prepare_corpus(&pairs, 2000);
        let model = StudentModel::new(toy_config(41, 1), corpus.vocab.clone());
        for s in &corpus.samples {
            let mut tape = Tape::new();
            let losses = forward_sample(&mut tape, &model, s).unwrap();
            for v in losses.values(&tape) {
                assert!(v.is_finite());
                assert!(v >= -1e-9, "loss went negative: {v}");
            }
        }
    }

    #[test]
    fn loss_decreases_on_a_fixed_pair() {
        let pairs = vec![toy_pairs().remove(0)];
        let corpus = prepare_corpus(&pairs, 2000);
        let mut model = StudentModel::new(toy_config(7, 60), corpus.vocab.clone());
        let outcome = train(&mut model, &corpus.samples, 1, None);
        assert!(outcome.aborted.is_none(), "{:?}", outcome.aborted);
        let first = outcome.rows.first().unwrap().loss_total;
        let last = outcome.rows.last().unwrap().loss_total;
        assert!(last < first, "loss did not decrease: {first} → {last}");
    }

    #[test]
    fn checkpoint_resume_replays_identical_losses() {
        let dir = std::env::temp_dir().join(format!("student-ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let pairs = toy_pairs();
        let corpus = prepare_corpus(&pairs, 2000);

        let mut straight = StudentModel::new(toy_config(13, 4), corpus.vocab.clone());
        let full = train(&mut straight, &corpus.samples, 1, None);
        assert!(full.aborted.is_none());

        let mut staged = StudentModel::new(toy_config(13, 2), corpus.vocab.clone());
        let half = train(&mut staged, &corpus.samples, 1, Some(&dir));
        assert!(half.aborted.is_none());
        let (mut resumed, epoch) = load_checkpoint(&dir.join("checkpoint_latest.json")).unwrap();
        assert_eq!(epoch, 2);
        resumed.config.epochs = 4;
        let rest = train(&mut resumed, &corpus.samples, epoch + 1, None);
        assert!(rest.aborted.is_none());

        let mut combined = half.rows.clone();
        combined.extend(rest.rows.clone());
        assert_eq!(combined.len(), full.rows.len());
        for (a, b) in combined.iter().zip(&full.rows) {
            assert_eq!(a.epoch, b.epoch);
            assert!((a.loss_total - b.loss_total).abs() < 1e-12, "epoch {}: {} vs {}", a.epoch, a.loss_total, b.loss_total);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn poisoned_parameters_abort_with_diagnostic() {
        let pairs = toy_pairs();
        let corpus = prepare_corpus(&pairs, 2000);
        let mut model = StudentModel::new(toy_config(3, 2), corpus.vocab.clone());
        // Poison past the relu (which would silently zero a NaN input).
        let id = model.store.id_by_name("center.w2").unwrap();
        model.store.tensor_mut(id).data[0] = f64::NAN;
        let outcome = train(&mut model, &corpus.samples, 1, None);
        assert!(matches!(outcome.aborted, Some(StudentError::NonFinite(_))));
        assert!(outcome.rows.is_empty());
    }

    #[test]
    fn annealing_shrinks_the_learning_rate_schedule() {
        // Indirect but deterministic: two runs differing only in the anneal
        // flag diverge after the second epoch.
        let pairs = toy_pairs();
        let corpus = prepare_corpus(&pairs, 2000);
        let mut plain = StudentModel::new(toy_config(29, 3), corpus.vocab.clone());
        let mut annealed_config = toy_config(29, 3);
        annealed_config.anneal = true;
        let mut annealed = StudentModel::new(annealed_config, corpus.vocab.clone());
        let a = train(&mut plain, &corpus.samples, 1, None);
        let b = train(&mut annealed, &corpus.samples, 1, None);
        assert!((a.rows[0].loss_total - b.rows[0].loss_total).abs() < 1e-12);
        assert!(a.rows[2].loss_total != b.rows[2].loss_total);
    }
}
