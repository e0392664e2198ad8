//! Deterministic annotation of (source, target) molecule pairs.
//!
//! For a pair (X, Y) the annotator scores every X atom as a candidate
//! editing center by the total size of X branches that survive in Y around
//! some element-matching Y atom, picks the best center pair, and splits the
//! branches into preserved / removed / added. Merging the preserved and
//! added branches back around the center must reproduce Y exactly; that
//! round trip is the correctness oracle for the whole pipeline.

use serde::Serialize;

use crate::branch::{branches_around_ranked, merge_disjoint, Branch, BranchSet};
use crate::error::{GraphError, TeacherError};
use crate::graph::{Atom, BondOrder, MolGraph};
use crate::smiles::canon::canonical_rank;
use crate::smiles::write::write_with_ranks;

/// Candidate-center scores over all X atoms.
#[derive(Debug, Clone)]
pub struct CenterScoreTable {
    /// Preserved-atom count of the best element-matching Y node; 0 when no
    /// such node exists.
    pub raw: Vec<usize>,
    /// Softmax of `raw`; sums to 1 within 1e-9.
    pub normalized: Vec<f64>,
    /// The Y node attaining `raw[i]`, when any element-matching node exists.
    pub best_mapped: Vec<Option<usize>>,
}

/// One annotated pair: the center, its image in Y, and the branch split.
#[derive(Debug, Clone)]
pub struct PolishAnnotation {
    /// Editing center, as an atom index of X.
    pub center: usize,
    /// The matched center, as an atom index of Y.
    pub mapped_center: usize,
    /// X branches that survive, each with its isomorphic Y branch.
    pub preserved: Vec<(Branch, Branch)>,
    /// X branches absent around the mapped center.
    pub removed: Vec<Branch>,
    /// Y branches with no X counterpart.
    pub added: Vec<Branch>,
    pub scores: CenterScoreTable,
}

/// Pairs branches of equal canonical key, consuming min(multiplicity)
/// instances per key. Branch sets list branches in ascending order of their
/// smallest anchor rank, so instance choice within a class is deterministic
/// and input-order independent. Returns (X branch index, Y branch index)
/// pairs.
pub fn match_branches(bx: &BranchSet, by: &BranchSet) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (key, xs) in &bx.by_class {
        if let Some(ys) = by.by_class.get(key) {
            pairs.extend(xs.iter().copied().zip(ys.iter().copied()));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Total size of the X branches around `i` that match branches of Y around
/// `j`: the preservation score of the candidate center pair.
pub fn center_score(x: &MolGraph, i: usize, y: &MolGraph, j: usize) -> usize {
    let rx = canonical_rank(x);
    let ry = canonical_rank(y);
    let bx = branches_around_ranked(x, i, &rx);
    let by = branches_around_ranked(y, j, &ry);
    matched_size(&bx, &by)
}

fn matched_size(bx: &BranchSet, by: &BranchSet) -> usize {
    match_branches(bx, by)
        .iter()
        .map(|&(xi, _)| bx.branches[xi].size())
        .sum()
}

/// Scores every X atom against its best element-matching Y atom and
/// normalizes with a softmax. Atoms without any element-matching Y node
/// score 0 and carry no mapped node.
pub fn center_distribution(x: &MolGraph, y: &MolGraph) -> CenterScoreTable {
    analyze(x, y).0
}

fn analyze(x: &MolGraph, y: &MolGraph) -> (CenterScoreTable, Vec<usize>, Vec<usize>) {
    let rx = canonical_rank(x);
    let ry = canonical_rank(y);
    let x_sets: Vec<BranchSet> = (0..x.atom_count())
        .map(|i| branches_around_ranked(x, i, &rx))
        .collect();
    let y_sets: Vec<BranchSet> = (0..y.atom_count())
        .map(|j| branches_around_ranked(y, j, &ry))
        .collect();
    let mut raw = vec![0usize; x.atom_count()];
    let mut best_mapped = vec![None; x.atom_count()];
    for i in 0..x.atom_count() {
        let mut best: Option<(usize, usize)> = None; // (score, j)
        for j in 0..y.atom_count() {
            if y.atom(j).element != x.atom(i).element {
                continue;
            }
            let score = matched_size(&x_sets[i], &y_sets[j]);
            let better = match best {
                None => true,
                // Higher score wins; equal scores go to the node earlier in
                // Y's canonical order, then to the smaller index.
                Some((s, b)) => {
                    score > s || (score == s && (ry[j], j) < (ry[b], b))
                }
            };
            if better {
                best = Some((score, j));
            }
        }
        if let Some((score, j)) = best {
            raw[i] = score;
            best_mapped[i] = Some(j);
        }
    }
    let normalized = softmax(&raw, &rx);
    (CenterScoreTable { raw, normalized, best_mapped }, rx, ry)
}

/// Max-shifted softmax. The denominator is accumulated in canonical atom
/// order so the floats come out bit-identical for any input atom order.
fn softmax(raw: &[usize], ranks: &[usize]) -> Vec<f64> {
    let max = raw.iter().copied().max().unwrap_or(0) as f64;
    let exps: Vec<f64> = raw.iter().map(|&s| ((s as f64) - max).exp()).collect();
    let mut by_rank: Vec<usize> = (0..raw.len()).collect();
    by_rank.sort_unstable_by_key(|&i| ranks[i]);
    let total: f64 = by_rank.iter().map(|&i| exps[i]).sum();
    exps.iter().map(|e| e / total).collect()
}

/// Picks the center pair: the X atom of maximal normalized score (ties to
/// atoms that do have a mapped node, then to the smaller canonical rank,
/// then the smaller index) and its recorded Y node.
pub fn locate_center(x: &MolGraph, y: &MolGraph) -> Result<(usize, usize), TeacherError> {
    let (table, rx, _) = analyze(x, y);
    locate_from(&table, &rx)
}

fn locate_from(table: &CenterScoreTable, rx: &[usize]) -> Result<(usize, usize), TeacherError> {
    let mut best: Option<usize> = None;
    for i in 0..table.raw.len() {
        let better = match best {
            None => true,
            Some(b) => {
                let key = |k: usize| {
                    (
                        std::cmp::Reverse(table.raw[k]),
                        std::cmp::Reverse(table.best_mapped[k].is_some() as u8),
                        rx[k],
                        k,
                    )
                };
                key(i) < key(b)
            }
        };
        if better {
            best = Some(i);
        }
    }
    let c = best.ok_or(TeacherError::NoCandidate)?;
    let mapped = table.best_mapped[c].ok_or(TeacherError::NoCandidate)?;
    Ok((c, mapped))
}

/// Full annotation: center pair plus the preserved/removed/added split.
pub fn annotate_pair(x: &MolGraph, y: &MolGraph) -> Result<PolishAnnotation, TeacherError> {
    let (scores, rx, ry) = analyze(x, y);
    let (center, mapped_center) = locate_from(&scores, &rx)?;
    let bx = branches_around_ranked(x, center, &rx);
    let by = branches_around_ranked(y, mapped_center, &ry);
    let pairs = match_branches(&bx, &by);
    let mut x_used = vec![false; bx.branches.len()];
    let mut y_used = vec![false; by.branches.len()];
    let mut preserved = Vec::with_capacity(pairs.len());
    for (xi, yi) in pairs {
        x_used[xi] = true;
        y_used[yi] = true;
        preserved.push((bx.branches[xi].clone(), by.branches[yi].clone()));
    }
    let removed: Vec<Branch> = bx
        .branches
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !x_used[*i])
        .map(|(_, b)| b)
        .collect();
    let added: Vec<Branch> = by
        .branches
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !y_used[*i])
        .map(|(_, b)| b)
        .collect();
    Ok(PolishAnnotation { center, mapped_center, preserved, removed, added, scores })
}

/// Merges the preserved X branches and the added Y branches around a center
/// carrying `center_attrs` (the mapped Y center's attributes). The result is
/// isomorphic to Y whenever the annotation came from [`annotate_pair`].
pub fn reconstruct(ann: &PolishAnnotation, center_attrs: Atom) -> Result<MolGraph, GraphError> {
    let parts: Vec<(&MolGraph, &[(usize, BondOrder)])> = ann
        .preserved
        .iter()
        .map(|(xb, _)| (&xb.fragment, xb.anchors.as_slice()))
        .chain(ann.added.iter().map(|b| (&b.fragment, b.anchors.as_slice())))
        .collect();
    merge_disjoint(center_attrs, &parts)
}

/// Per-pair atom counts of the three regions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairScale {
    pub preserved: usize,
    pub removed: usize,
    pub added: usize,
}

/// Aggregate scale report over an annotated corpus.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusScale {
    pub pairs: Vec<PairScale>,
    pub mean_preserved: f64,
    pub mean_removed: f64,
    pub mean_added: f64,
}

pub fn corpus_stats(annotations: &[PolishAnnotation]) -> CorpusScale {
    let pairs: Vec<PairScale> = annotations
        .iter()
        .map(|a| PairScale {
            preserved: a.preserved.iter().map(|(xb, _)| xb.size()).sum(),
            removed: a.removed.iter().map(Branch::size).sum(),
            added: a.added.iter().map(Branch::size).sum(),
        })
        .collect();
    let n = pairs.len().max(1) as f64;
    CorpusScale {
        mean_preserved: pairs.iter().map(|p| p.preserved).sum::<usize>() as f64 / n,
        mean_removed: pairs.iter().map(|p| p.removed).sum::<usize>() as f64 / n,
        mean_added: pairs.iter().map(|p| p.added).sum::<usize>() as f64 / n,
        pairs,
    }
}

/// One branch as it appears in the serialized annotation: the anchored
/// fragment string, the bond order back to the center (for multi-anchor
/// branches, of the anchor earliest in canonical order; the fragment string
/// itself carries every anchor), and the member atoms as positions in the
/// parent's canonical order.
#[derive(Debug, Clone, Serialize)]
pub struct BranchRecord {
    pub fragment: String,
    pub bond: String,
    pub atoms: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PreservedRecord {
    #[serde(flatten)]
    pub branch: BranchRecord,
    /// The matched Y branch, in Y's canonical coordinates.
    pub matched: BranchRecord,
}

/// The serialized form of one annotated pair. All atom positions and the
/// score array are in canonical order, so the record is identical for any
/// atom ordering of the inputs.
#[derive(Debug, Clone, Serialize)]
pub struct AnnotationRecord {
    pub src: String,
    pub tgt: String,
    pub center: usize,
    pub mapped_center: usize,
    pub center_element: String,
    pub center_charge: i32,
    pub mapped_center_charge: i32,
    pub preserved: Vec<PreservedRecord>,
    pub removed: Vec<BranchRecord>,
    pub added: Vec<BranchRecord>,
    pub score_distribution: Vec<f64>,
}

pub fn annotation_record(x: &MolGraph, y: &MolGraph, ann: &PolishAnnotation) -> AnnotationRecord {
    let rx = canonical_rank(x);
    let ry = canonical_rank(y);
    let branch_record = |b: &Branch, ranks: &[usize]| -> BranchRecord {
        let lead_anchor = b
            .anchors
            .iter()
            .min_by_key(|&&(a, _)| ranks[b.source_indices[a]])
            .expect("anchors are non-empty");
        let mut atoms: Vec<usize> = b.source_indices.iter().map(|&s| ranks[s]).collect();
        atoms.sort_unstable();
        BranchRecord {
            fragment: b.key().to_string(),
            bond: lead_anchor.1.label().to_string(),
            atoms,
        }
    };
    let mut score_distribution = vec![0.0; x.atom_count()];
    for (i, &p) in ann.scores.normalized.iter().enumerate() {
        score_distribution[rx[i]] = p;
    }
    let mut preserved: Vec<PreservedRecord> = ann
        .preserved
        .iter()
        .map(|(xb, yb)| PreservedRecord {
            branch: branch_record(xb, &rx),
            matched: branch_record(yb, &ry),
        })
        .collect();
    preserved.sort_by(|a, b| a.branch.atoms.cmp(&b.branch.atoms));
    let mut removed: Vec<BranchRecord> =
        ann.removed.iter().map(|b| branch_record(b, &rx)).collect();
    removed.sort_by(|a, b| a.atoms.cmp(&b.atoms));
    let mut added: Vec<BranchRecord> = ann.added.iter().map(|b| branch_record(b, &ry)).collect();
    added.sort_by(|a, b| a.atoms.cmp(&b.atoms));
    AnnotationRecord {
        src: write_with_ranks(x, &rx),
        tgt: write_with_ranks(y, &ry),
        center: rx[ann.center],
        mapped_center: ry[ann.mapped_center],
        center_element: x.atom(ann.center).element.symbol().to_string(),
        center_charge: x.atom(ann.center).charge,
        mapped_center_charge: y.atom(ann.mapped_center).charge,
        preserved,
        removed,
        added,
        score_distribution,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branch::{branch_isomorphic, branches_around};
    use crate::isomorphism::graph_isomorphic;
    use crate::smiles::parse::parse_smiles;
    use crate::smiles::write::write_smiles;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Maximum preserved-atom total over all injective pairings compatible
    /// with anchored isomorphism; exhaustive, so trustworthy on small sets.
    fn oracle_matched_size(bx: &BranchSet, by: &BranchSet) -> usize {
        fn go(bx: &BranchSet, by: &BranchSet, xi: usize, y_used: &mut Vec<bool>) -> usize {
            if xi == bx.branches.len() {
                return 0;
            }
            // Skip this X branch entirely.
            let mut best = go(bx, by, xi + 1, y_used);
            for yi in 0..by.branches.len() {
                if !y_used[yi] && branch_isomorphic(&bx.branches[xi], &by.branches[yi]) {
                    y_used[yi] = true;
                    let candidate = bx.branches[xi].size() + go(bx, by, xi + 1, y_used);
                    y_used[yi] = false;
                    best = best.max(candidate);
                }
            }
            best
        }
        go(bx, by, 0, &mut vec![false; by.branches.len()])
    }

    fn oracle_best_center(x: &MolGraph, y: &MolGraph) -> usize {
        let mut best = 0usize;
        for i in 0..x.atom_count() {
            for j in 0..y.atom_count() {
                if x.atom(i).element != y.atom(j).element {
                    continue;
                }
                let bx = branches_around(x, i);
                let by = branches_around(y, j);
                best = best.max(oracle_matched_size(&bx, &by));
            }
        }
        best
    }

    #[test]
    fn hydroxyl_to_amine_swap() {
        let x = parse_smiles("CCO").unwrap();
        let y = parse_smiles("CCN").unwrap();
        let (c, c2) = locate_center(&x, &y).unwrap();
        assert_eq!((c, c2), (1, 1));
        let ann = annotate_pair(&x, &y).unwrap();
        assert_eq!(ann.preserved.len(), 1);
        assert_eq!(ann.removed.len(), 1);
        assert_eq!(ann.added.len(), 1);
        assert_eq!(ann.removed[0].fragment.atom(0).element.symbol(), "O");
        assert_eq!(ann.added[0].fragment.atom(0).element.symbol(), "N");
        let rebuilt = reconstruct(&ann, *y.atom(ann.mapped_center)).unwrap();
        assert!(graph_isomorphic(&rebuilt, &y));
        assert_eq!(write_smiles(&rebuilt), write_smiles(&y));
    }

    #[test]
    fn identical_pair_preserves_everything() {
        for smiles in ["CC(C)(C)CO", "c1ccc(O)cc1", "CC(N)C(=O)O"] {
            let x = parse_smiles(smiles).unwrap();
            let y = parse_smiles(smiles).unwrap();
            let ann = annotate_pair(&x, &y).unwrap();
            assert!(ann.removed.is_empty(), "{smiles}");
            assert!(ann.added.is_empty(), "{smiles}");
            // Every atom scores the full molecule, so the tie-break picks
            // the canonical-rank-0 atom.
            let rx = canonical_rank(&x);
            assert_eq!(rx[ann.center], 0, "{smiles}");
            let rebuilt = reconstruct(&ann, *y.atom(ann.mapped_center)).unwrap();
            assert!(graph_isomorphic(&rebuilt, &x), "{smiles}");
        }
    }

    #[test]
    fn duplicate_branches_match_min_multiplicity() {
        // X: central C with two methyls and an O; Y: central C with one
        // methyl, one O, one N. Exactly one methyl can be preserved.
        let x = parse_smiles("CC(C)O").unwrap();
        let y = parse_smiles("CC(N)O").unwrap();
        let bx = branches_around(&x, 1);
        let by = branches_around(&y, 1);
        let pairs = match_branches(&bx, &by);
        let methyl_pairs: Vec<_> = pairs
            .iter()
            .filter(|&&(xi, _)| bx.branches[xi].fragment.atom(0).element.symbol() == "C")
            .collect();
        assert_eq!(methyl_pairs.len(), 1);
        // The chosen X methyl is the first of its class in branch order,
        // i.e. the one whose anchor has the smaller canonical rank.
        let class = bx.by_class.get(bx.branches[methyl_pairs[0].0].key()).unwrap();
        assert_eq!(methyl_pairs[0].0, class[0]);
    }

    #[test]
    fn disjoint_vocabularies_do_not_match() {
        let x = parse_smiles("CC(F)F").unwrap();
        let y = parse_smiles("CC(Br)Br").unwrap();
        let bx = branches_around(&x, 1);
        let by = branches_around(&y, 1);
        let pairs = match_branches(&bx, &by);
        // Only the methyl matches; the halogens differ.
        assert_eq!(pairs.len(), 1);
    }

    #[test]
    fn score_table_sums_to_one_and_respects_elements() {
        let x = parse_smiles("CCO").unwrap();
        let y = parse_smiles("CCN").unwrap();
        let table = center_distribution(&x, &y);
        let sum: f64 = table.normalized.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        // The oxygen has no image in Y.
        assert_eq!(table.best_mapped[2], None);
        assert_eq!(table.raw[2], 0);
        assert_eq!(table.raw[1], 1);
        // No shared element at all: uniform distribution.
        let z = parse_smiles("FPF").unwrap();
        let t2 = center_distribution(&x, &z);
        assert!(t2.raw.iter().all(|&s| s == 0));
        for p in &t2.normalized {
            assert!((p - 1.0 / 3.0).abs() < 1e-9);
        }
        assert!(matches!(locate_center(&x, &z), Err(TeacherError::NoCandidate)));
    }

    #[test]
    fn chosen_center_is_optimal_against_brute_force() {
        let cases = [
            ("CCO", "CCN"),
            ("CC(C)O", "CC(N)O"),
            ("c1ccc(O)cc1", "c1ccc(N)cc1"),
            ("CC(C)(C)CO", "CC(C)(C)CN"),
            ("OCC(F)CBr", "NCC(F)CBr"),
            ("CC(=O)O", "CC(=O)N"),
            ("C1CC1CO", "C1CC1CN"),
            ("CCCCC", "CCCC"),
            ("CC(C)C", "CCCC"),
        ];
        for (sx, sy) in cases {
            let x = parse_smiles(sx).unwrap();
            let y = parse_smiles(sy).unwrap();
            let ann = annotate_pair(&x, &y).unwrap();
            let achieved: usize = ann.preserved.iter().map(|(xb, _)| xb.size()).sum();
            assert_eq!(achieved, oracle_best_center(&x, &y), "{sx} -> {sy}");
        }
    }

    #[test]
    fn reconstruction_is_exact_on_varied_pairs() {
        let cases = [
            ("CCO", "CCN"),
            ("CC(C)O", "CC(N)O"),
            ("c1ccc(O)cc1", "c1ccc(N)cc1"),
            ("c1ccccc1", "c1ccccc1C"),
            ("CC(C)(C)CO", "CC(C)(C)CN"),
            ("C1CC1CO", "C1CC1CN"),
            ("CCCCC", "CC"),
            ("CC", "CCCCC"),
            ("C", "CO"),
            ("CO", "C"),
            ("CC(=O)O", "CC(=O)OC"),
            ("C[N+](C)(C)C", "C[N+](C)(C)CC"),
            ("C1CCCCC1O", "C1CCCCC1N"),
        ];
        for (sx, sy) in cases {
            let x = parse_smiles(sx).unwrap();
            let y = parse_smiles(sy).unwrap();
            let ann = annotate_pair(&x, &y).unwrap();
            let total = ann.preserved.len() + ann.removed.len();
            assert_eq!(total, branches_around(&x, ann.center).branches.len(), "{sx}");
            let rebuilt = reconstruct(&ann, *y.atom(ann.mapped_center)).unwrap();
            assert!(graph_isomorphic(&rebuilt, &y), "{sx} -> {sy}");
        }
    }

    #[test]
    fn annotation_record_is_input_order_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let cases = [("CC(C)O", "CC(N)O"), ("c1ccc(O)cc1", "c1ccc(N)cc1")];
        for (sx, sy) in cases {
            let x = parse_smiles(sx).unwrap();
            let y = parse_smiles(sy).unwrap();
            let reference =
                serde_json::to_string(&annotation_record(&x, &y, &annotate_pair(&x, &y).unwrap()))
                    .unwrap();
            for _ in 0..6 {
                let mut px: Vec<usize> = (0..x.atom_count()).collect();
                let mut py: Vec<usize> = (0..y.atom_count()).collect();
                px.shuffle(&mut rng);
                py.shuffle(&mut rng);
                let xs = x.permuted(&px);
                let ys = y.permuted(&py);
                let record =
                    serde_json::to_string(&annotation_record(&xs, &ys, &annotate_pair(&xs, &ys).unwrap()))
                        .unwrap();
                assert_eq!(record, reference, "{sx} -> {sy}");
            }
        }
    }

    #[test]
    fn corpus_stats_aggregates_scales() {
        let pairs = [("CCO", "CCN"), ("CCO", "CCO")];
        let anns: Vec<PolishAnnotation> = pairs
            .iter()
            .map(|(sx, sy)| {
                annotate_pair(&parse_smiles(sx).unwrap(), &parse_smiles(sy).unwrap()).unwrap()
            })
            .collect();
        let stats = corpus_stats(&anns);
        assert_eq!(stats.pairs.len(), 2);
        assert_eq!(stats.pairs[0].preserved, 1);
        assert_eq!(stats.pairs[0].removed, 1);
        assert_eq!(stats.pairs[0].added, 1);
        assert_eq!(stats.pairs[1].removed, 0);
        assert_eq!(stats.pairs[1].added, 0);
        assert!((stats.mean_removed - 0.5).abs() < 1e-12);
        // Preserved + removed covers X minus its center.
        for (scale, (sx, _)) in stats.pairs.iter().zip(pairs.iter()) {
            let x = parse_smiles(sx).unwrap();
            assert_eq!(scale.preserved + scale.removed, x.atom_count() - 1);
        }
    }
}
