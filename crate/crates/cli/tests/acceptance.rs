//! End-to-end acceptance gate: one test per criterion, each printing a
//! single `criterion NN: PASS - ...` line with its measured numbers (run
//! with `--nocapture` to see them). Failure messages carry the same tag.

use molpolish::corpus::{random_edit_pairs, random_molecule, rule_pairs};
use molpolish::graph::{BondOrder, MolGraph};
use molpolish::isomorphism::find_isomorphism;
use molpolish::juncttree::{decompose, ground_truth_assembly, DEFAULT_ASSEMBLY_CAP};
use molpolish::smiles::{certificate, parse_smiles, write_smiles};
use molpolish::student::{
    categorical_loss, center_loss, check_gradients, forward_sample, generate, prepare_corpus,
    replay_pair, train, StudentConfig, StudentModel, Tape,
};
use molpolish::teacher::{annotate_pair, reconstruct};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn pass(n: u32, detail: &str) {
    println!("criterion {n:02}: PASS - {detail}");
}

/// 500 hydroxyl-swap pairs plus 500 random polish pairs, sides <= 40 atoms.
fn mixed_pairs_1000() -> Vec<(MolGraph, MolGraph)> {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut pairs = rule_pairs(&mut rng, 500, 12);
    pairs.extend(random_edit_pairs(&mut rng, 500, 34));
    pairs
}

fn molecules_1000() -> Vec<MolGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    (0..1000).map(|k| random_molecule(&mut rng, 4 + (k % 37))).collect()
}

#[test]
fn criterion_01_reconstruction_round_trip() {
    let start = Instant::now();
    let pairs = mixed_pairs_1000();
    assert_eq!(pairs.len(), 1000, "criterion 01: FAIL - corpus generation came up short");
    let mut checked = 0usize;
    for (x, y) in &pairs {
        assert!(x.atom_count() <= 40 && y.atom_count() <= 40, "criterion 01: FAIL - oversized molecule");
        let ann = match annotate_pair(x, y) {
            Ok(a) => a,
            Err(_) => continue, // non-annotatable pairs are outside the claim
        };
        let rebuilt = reconstruct(&ann, *y.atom(ann.mapped_center)).unwrap_or_else(|e| {
            panic!("criterion 01: FAIL - rebuild error on {}: {e}", write_smiles(x))
        });
        assert_eq!(
            certificate(&rebuilt),
            certificate(y),
            "criterion 01: FAIL - {} -> {} rebuilt as {}",
            write_smiles(x),
            write_smiles(y),
            write_smiles(&rebuilt),
        );
        checked += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 60.0, "criterion 01: FAIL - took {secs:.1}s (budget 60s)");
    pass(1, &format!("{checked}/{} annotatable pairs rebuilt isomorphically in {secs:.1}s", pairs.len()));
}

/// Independent preservation score: delete the centers, split into connected
/// components by hand, and match components pairwise with the backtracking
/// isomorphism search (anchor atoms colored by their bond order back to the
/// center). No canonical-label machinery involved.
fn oracle_preserved(x: &MolGraph, i: usize, y: &MolGraph, j: usize) -> usize {
    fn components(g: &MolGraph, center: usize) -> Vec<(MolGraph, Vec<u64>, usize)> {
        let n = g.atom_count();
        let mut seen = vec![false; n];
        seen[center] = true;
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut members = vec![s];
            seen[s] = true;
            let mut queue = vec![s];
            while let Some(v) = queue.pop() {
                for (w, _) in g.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        members.push(w);
                        queue.push(w);
                    }
                }
            }
            members.sort_unstable();
            let (frag, src) = g.induced_subgraph(&members);
            // Color anchors by the order of their bond to the center.
            let colors: Vec<u64> = src
                .iter()
                .map(|&a| match g.bond_between(a, center) {
                    Some(BondOrder::Single) => 1,
                    Some(BondOrder::Double) => 2,
                    Some(BondOrder::Triple) => 3,
                    Some(BondOrder::Aromatic) => 4,
                    None => 0,
                })
                .collect();
            out.push((frag, colors, members.len()));
        }
        out
    }
    let xs = components(x, i);
    let ys = components(y, j);
    let mut used = vec![false; ys.len()];
    let mut score = 0usize;
    for (fx, cx, size) in &xs {
        for (k, (fy, cy, _)) in ys.iter().enumerate() {
            if used[k] {
                continue;
            }
            if find_isomorphism(fx, fy, Some(cx), Some(cy)).is_some() {
                used[k] = true;
                score += size;
                break;
            }
        }
    }
    score
}

#[test]
fn criterion_02_center_score_matches_brute_force() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let mut pairs = rule_pairs(&mut rng, 50, 5);
    pairs.extend(random_edit_pairs(&mut rng, 150, 6));
    assert_eq!(pairs.len(), 200);
    for (x, y) in &pairs {
        assert!(
            x.atom_count() <= 12 && y.atom_count() <= 12,
            "criterion 02: FAIL - molecule exceeds 12 atoms"
        );
        let Ok(ann) = annotate_pair(x, y) else { continue };
        let mut oracle_max = 0usize;
        for i in 0..x.atom_count() {
            for j in 0..y.atom_count() {
                if x.atom(i).element == y.atom(j).element {
                    oracle_max = oracle_max.max(oracle_preserved(x, i, y, j));
                }
            }
        }
        assert_eq!(
            ann.scores.raw[ann.center],
            oracle_max,
            "criterion 02: FAIL - {} -> {}: teacher score {} vs exhaustive {}",
            write_smiles(x),
            write_smiles(y),
            ann.scores.raw[ann.center],
            oracle_max,
        );
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 120.0, "criterion 02: FAIL - took {secs:.1}s (budget 120s)");
    pass(2, &format!("200 pairs match the exhaustive center score in {secs:.1}s"));
}

#[test]
fn criterion_03_canonical_output_is_stable() {
    let corpus = molecules_1000();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for g in &corpus {
        let smiles = write_smiles(g);
        let back = parse_smiles(&smiles).unwrap_or_else(|e| {
            panic!("criterion 03: FAIL - rendering `{smiles}` does not parse: {e}")
        });
        assert_eq!(
            certificate(&back),
            certificate(g),
            "criterion 03: FAIL - round trip changed `{smiles}`"
        );
        let n = g.atom_count();
        for _ in 0..10 {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let shuffled = g.permuted(&perm);
            let rendered = write_smiles(&shuffled);
            assert_eq!(
                rendered, smiles,
                "criterion 03: FAIL - relabeling changed the canonical rendering"
            );
        }
    }
    pass(3, "1000 molecules round-trip; renderings invariant under 10 relabelings each");
}

#[test]
fn criterion_04_cluster_tree_round_trip() {
    let corpus = molecules_1000();
    for g in &corpus {
        let tree = decompose(g);
        // Running intersection: the tree nodes holding any given atom are
        // connected among themselves.
        for a in 0..g.atom_count() {
            let holders: Vec<usize> = (0..tree.nodes.len())
                .filter(|&n| tree.nodes[n].atoms.contains(&a))
                .collect();
            if holders.len() > 1 {
                let mut reached = vec![false; tree.nodes.len()];
                let mut queue = vec![holders[0]];
                reached[holders[0]] = true;
                while let Some(v) = queue.pop() {
                    for &w in tree.neighbors(v) {
                        if !reached[w] && holders.contains(&w) {
                            reached[w] = true;
                            queue.push(w);
                        }
                    }
                }
                assert!(
                    holders.iter().all(|&h| reached[h]),
                    "criterion 04: FAIL - atom {a} of {} spans a disconnected node set",
                    write_smiles(g),
                );
            }
        }
        let (_, state) = ground_truth_assembly(g, &tree, DEFAULT_ASSEMBLY_CAP).unwrap_or_else(|e| {
            panic!("criterion 04: FAIL - {} does not reassemble: {e}", write_smiles(g))
        });
        assert_eq!(
            certificate(&state.graph),
            certificate(g),
            "criterion 04: FAIL - reassembly of {} is not isomorphic",
            write_smiles(g),
        );
    }
    pass(4, "1000 molecules reassemble from their own clusters; running intersection holds");
}

#[test]
fn criterion_05_every_loss_head_passes_gradient_checks() {
    // The added region of the second pair is a four-atom chain, so its
    // reassembly has a step with two distinct candidates and the assembly
    // head gets a real gradient.
    let pairs = vec![
        (parse_smiles("CCO").unwrap(), parse_smiles("CCN").unwrap()),
        (parse_smiles("CCO").unwrap(), parse_smiles("CCOCCC").unwrap()),
    ];
    let corpus = prepare_corpus(&pairs, DEFAULT_ASSEMBLY_CAP);
    assert_eq!(corpus.samples.len(), 2, "criterion 05: FAIL - fixture pairs were skipped");
    assert!(
        corpus.samples.iter().any(|s| !s.assembly.is_empty()),
        "criterion 05: FAIL - no sample exercises the assembly head"
    );
    let head_names = ["center", "branch", "topology", "label", "assembly"];
    let mut checked_total = 0usize;
    let mut worst = 0.0f64;
    for seed in 1u64..=5 {
        let config = StudentConfig { hidden: 6, mpn_rounds: 2, seed, ..Default::default() };
        for (head, name) in head_names.iter().enumerate() {
            for sample in &corpus.samples {
                if head == 4 && sample.assembly.is_empty() {
                    continue;
                }
                let mut model = StudentModel::new(config.clone(), corpus.vocab.clone());
                let mut tape = Tape::new();
                let losses = forward_sample(&mut tape, &model, sample).unwrap();
                let ids = [losses.center, losses.branch, losses.topo, losses.label, losses.assembly];
                model.store.zero_grads();
                tape.backward(ids[head], &mut model.store);

                let vocab = model.vocab.clone();
                let cfg = model.config.clone();
                let eval = |store: &molpolish::student::ParamStore| {
                    let probe = StudentModel {
                        store: store.clone(),
                        vocab: vocab.clone(),
                        config: cfg.clone(),
                        ..StudentModel::new(cfg.clone(), vocab.clone())
                    };
                    let mut tape = Tape::new();
                    let losses = forward_sample(&mut tape, &probe, sample).unwrap();
                    let ids =
                        [losses.center, losses.branch, losses.topo, losses.label, losses.assembly];
                    (tape.scalar(ids[head]), tape.kink_signature())
                };
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(977) + head as u64);
                let report = check_gradients(&mut model.store, eval, 2, 1e-4, &mut rng);
                assert!(
                    report.checked > 10,
                    "criterion 05: FAIL - {name} head seed {seed}: only {} usable probes",
                    report.checked
                );
                assert!(
                    report.max_rel_err < 1e-3,
                    "criterion 05: FAIL - {name} head seed {seed}: rel err {:.2e}",
                    report.max_rel_err
                );
                checked_total += report.checked;
                worst = worst.max(report.max_rel_err);
            }
        }
    }
    pass(5, &format!("5 heads x 5 draws: {checked_total} probes, worst rel err {worst:.2e}"));
}

#[test]
fn criterion_06_losses_match_closed_forms() {
    let ln2 = std::f64::consts::LN_2;

    // Certain-vs-uniform center distribution.
    let mut tape = Tape::new();
    let scores = tape.input(vec![0.0, 0.0]);
    let kl = center_loss(&mut tape, scores, &[1.0, 0.0]).unwrap();
    let kl = tape.scalar(kl);
    assert!((kl - ln2).abs() <= 1e-9, "criterion 06: FAIL - center loss {kl} vs ln2");

    // Uniform label scores over a 7-entry vocabulary.
    let mut tape = Tape::new();
    let logits = tape.input(vec![0.0; 7]);
    let ce = categorical_loss(&mut tape, logits, 3);
    let ce = tape.scalar(ce);
    let ln7 = 7.0f64.ln();
    assert!((ce - ln7).abs() <= 1e-9, "criterion 06: FAIL - label loss {ce} vs ln 7");

    // Two equally scored assembly candidates.
    let mut tape = Tape::new();
    let logits = tape.input(vec![1.25, 1.25]);
    let ce = categorical_loss(&mut tape, logits, 0);
    let ce = tape.scalar(ce);
    assert!((ce - ln2).abs() <= 1e-9, "criterion 06: FAIL - assembly loss {ce} vs ln2");

    pass(6, "center ln2, label ln7, assembly ln2 all within 1e-9");
}

#[test]
fn criterion_07_toy_rule_is_learned() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let pairs = rule_pairs(&mut rng, 2000, 8);
    let (train_pairs, held_pairs) = pairs.split_at(1800);

    let prepared = prepare_corpus(train_pairs, DEFAULT_ASSEMBLY_CAP);
    assert!(prepared.skipped.is_empty(), "criterion 07: FAIL - training pairs were skipped");
    let config = StudentConfig {
        hidden: 64,
        batch_size: 32,
        learning_rate: 1e-4,
        epochs: 30,
        seed: 11,
        ..Default::default()
    };
    let mut model = StudentModel::new(config, prepared.vocab.clone());
    let outcome = train(&mut model, &prepared.samples, 1, None);
    assert!(outcome.aborted.is_none(), "criterion 07: FAIL - training aborted: {:?}", outcome.aborted);
    let first = outcome.rows.first().unwrap().loss_total;
    let last = outcome.rows.last().unwrap().loss_total;
    assert!(
        last < first,
        "criterion 07: FAIL - loss did not improve: epoch 1 {first:.4} vs epoch 30 {last:.4}"
    );

    let held = prepare_corpus(held_pairs, DEFAULT_ASSEMBLY_CAP);
    assert!(held.skipped.is_empty(), "criterion 07: FAIL - held-out pairs were skipped");
    let mut center_hits = 0usize;
    let mut branch_hits = 0usize;
    let mut branch_total = 0usize;
    let mut exact = 0usize;
    for (sample, (x, y)) in held.samples.iter().zip(held_pairs) {
        let mut tape = Tape::new();
        let embeds = model.encode_graph(&mut tape, &sample.x);
        let (_, probs) = model.center_forward(&mut tape, &embeds);
        let predicted = molpolish::student::predict_center(&sample.x, &probs);
        if predicted == sample.center {
            center_hits += 1;
        }
        let decisions = model.branch_logits(&mut tape, &embeds, sample.center, &sample.branches);
        for ((_, keep), &truth) in decisions.iter().zip(&sample.branch_truth) {
            branch_total += 1;
            if *keep == truth {
                branch_hits += 1;
            }
        }
        let made = generate(&model, x);
        if let Some(m) = &made.molecule {
            if certificate(m) == certificate(y) {
                exact += 1;
            }
        }
    }
    let n = held.samples.len();
    let center_acc = center_hits as f64 / n as f64;
    let branch_acc = branch_hits as f64 / branch_total as f64;
    let exact_acc = exact as f64 / n as f64;
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 900.0, "criterion 07: FAIL - took {secs:.0}s (budget 900s)");
    assert!(center_acc >= 0.9, "criterion 07: FAIL - center accuracy {center_acc:.3}");
    assert!(branch_acc >= 0.9, "criterion 07: FAIL - branch accuracy {branch_acc:.3}");
    assert!(exact_acc >= 0.9, "criterion 07: FAIL - exact-match rate {exact_acc:.3}");
    pass(
        7,
        &format!(
            "center {:.1}%, branch {:.1}%, exact match {:.1}% on {n} held-out pairs; \
             loss {first:.3} -> {last:.3} in {secs:.0}s",
            center_acc * 100.0,
            branch_acc * 100.0,
            exact_acc * 100.0,
        ),
    );
}

#[test]
fn criterion_08_forced_replay_reproduces_targets() {
    let pairs = mixed_pairs_1000();
    let mut replayed = 0usize;
    for (x, y) in &pairs {
        let Ok(ann) = annotate_pair(x, y) else { continue };
        let merged = replay_pair(x, y, &ann, DEFAULT_ASSEMBLY_CAP).unwrap_or_else(|e| {
            panic!(
                "criterion 08: FAIL - {} -> {} does not replay: {e}",
                write_smiles(x),
                write_smiles(y)
            )
        });
        assert_eq!(
            certificate(&merged),
            certificate(y),
            "criterion 08: FAIL - forced replay of {} -> {} built {}",
            write_smiles(x),
            write_smiles(y),
            write_smiles(&merged),
        );
        replayed += 1;
    }
    pass(8, &format!("{replayed}/{} pairs replay to the exact target", pairs.len()));
}

fn run_cli(args: &[&str], dir: &std::path::Path) -> (String, String, i32) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_molpolish"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
        out.status.code().unwrap_or(-1),
    )
}

fn line_value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}\t")))
        .unwrap_or_else(|| panic!("report lacks `{key}`:\n{report}"))
        .to_string()
}

#[test]
fn criterion_09_evaluation_matches_hand_arithmetic() {
    // Threshold counting on the documented similarity quartet.
    let sims = [0.5, 0.2, 0.35, 0.45];
    let in_range = sims.iter().filter(|&&s| (0.3..=1.0).contains(&s)).count();
    assert_eq!(in_range, 3, "criterion 09: FAIL - counting rule");
    assert_eq!(in_range as f64 / sims.len() as f64, 0.75);
    // Improvement averaging on the documented pair of deltas.
    assert!(((0.1f64 + 0.3) / 2.0 - 0.2).abs() < 1e-12);

    let dir = std::env::temp_dir().join(format!("molpolish-acc9-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    // Success-rate run, recomputed by hand from this artifact's own
    // similarities (fingerprint radius 2, width 2048).
    let rows = [
        ("CCO", "CCN"),
        ("CCCC", "CCCC"),
        ("CCCO", "CCCN"),
        ("CCCCO", "CCCCN"),
    ];
    let gen_path = dir.join("gen.tsv");
    let mut gen_text = String::new();
    for (src, out) in rows {
        gen_text.push_str(&format!("{src}\t{out}\tok\n"));
    }
    std::fs::write(&gen_path, gen_text).unwrap();
    let mut hand_successes = 0usize;
    let mut side_text = String::new();
    for (src, out) in rows {
        let x = parse_smiles(src).unwrap();
        let yp = parse_smiles(out).unwrap();
        let fx = molpolish::fingerprint::morgan_fingerprint(&x, 2, 2048);
        let fy = molpolish::fingerprint::morgan_fingerprint(&yp, 2, 2048);
        let sim = molpolish::fingerprint::tanimoto(&fx, &fy).unwrap();
        // Every generated molecule gets a property inside [0.6, 1.0], so the
        // hand count depends on similarity alone.
        side_text.push_str(&format!("{}\t0.8\n", write_smiles(&yp)));
        if (0.3..=1.0).contains(&sim) {
            hand_successes += 1;
        }
    }
    let side_path = dir.join("side.tsv");
    std::fs::write(&side_path, side_text).unwrap();
    let config_path = dir.join("ranges.toml");
    std::fs::write(
        &config_path,
        "[metrics.m1.qed]\nsimilarity = [0.3, 1.0]\nproperty = [0.6, 1.0]\n",
    )
    .unwrap();
    let (report, stderr, code) = run_cli(
        &[
            "evaluate",
            "--input",
            gen_path.to_str().unwrap(),
            "--metric",
            "M1",
            "--dataset",
            "qed",
            "--properties",
            side_path.to_str().unwrap(),
            "--config",
            config_path.to_str().unwrap(),
        ],
        &dir,
    );
    assert_eq!(code, 0, "criterion 09: FAIL - evaluate exited {code}: {stderr}");
    assert!(
        report.contains("similarity=[0.300000,1.000000] property=[0.600000,1.000000]"),
        "criterion 09: FAIL - configured ranges not echoed:\n{report}"
    );
    let got = line_value(&report, "success_rate");
    let want = format!("{:.6}", hand_successes as f64 / rows.len() as f64);
    assert_eq!(got, want, "criterion 09: FAIL - success rate {got} vs hand {want}");

    // Mean-improvement run: two qualifying rows with deltas 0.1 and 0.3.
    let impr_rows = [
        ("CCO", "CCN", 1.0f64, 1.0),      // below the 0.3 threshold
        ("CCCCO", "CCCCN", 1.0, 1.1),     // qualifies, delta 0.1
        ("CCCO", "CCCN", 5.0, 5.0),       // below threshold
        ("CCCCCCO", "CCCCCCN", 2.0, 2.3), // qualifies, delta 0.3
    ];
    let mut gen2 = String::new();
    let mut side2 = String::new();
    let mut qualifying = 0usize;
    for (src, out, px, py) in impr_rows {
        gen2.push_str(&format!("{src}\t{out}\tok\n"));
        let x = parse_smiles(src).unwrap();
        let yp = parse_smiles(out).unwrap();
        side2.push_str(&format!("{}\t{px}\n", write_smiles(&x)));
        side2.push_str(&format!("{}\t{py}\n", write_smiles(&yp)));
        let fx = molpolish::fingerprint::morgan_fingerprint(&x, 2, 2048);
        let fy = molpolish::fingerprint::morgan_fingerprint(&yp, 2, 2048);
        let sim = molpolish::fingerprint::tanimoto(&fx, &fy).unwrap();
        if sim >= 0.3 {
            qualifying += 1;
        }
    }
    assert_eq!(qualifying, 2, "criterion 09: FAIL - fixture rows must give 2 qualifiers");
    let gen2_path = dir.join("gen2.tsv");
    let side2_path = dir.join("side2.tsv");
    std::fs::write(&gen2_path, gen2).unwrap();
    std::fs::write(&side2_path, side2).unwrap();
    let (report2, stderr2, code2) = run_cli(
        &[
            "evaluate",
            "--input",
            gen2_path.to_str().unwrap(),
            "--metric",
            "M4",
            "--properties",
            side2_path.to_str().unwrap(),
        ],
        &dir,
    );
    assert_eq!(code2, 0, "criterion 09: FAIL - improvement run exited {code2}: {stderr2}");
    assert_eq!(
        line_value(&report2, "qualifying"),
        "2",
        "criterion 09: FAIL - wrong qualifier count:\n{report2}"
    );
    assert_eq!(
        line_value(&report2, "mean_improvement"),
        "0.200000",
        "criterion 09: FAIL - mean improvement mismatch:\n{report2}"
    );
    let _ = std::fs::remove_dir_all(&dir);
    pass(9, &format!("success rate {want} and mean improvement 0.200000 match hand arithmetic"));
}

#[test]
fn criterion_10_published_corpus_count() {
    let expected = 75_284usize;
    let candidates = [
        "data/logp6/train_pairs.txt",
        "data/logp6/train.txt",
        "data/logp6.txt",
        "data/logp6.tsv",
        "data/logp06/train_pairs.txt",
        "datasets/logp6/train.txt",
    ];
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let found = candidates.iter().map(|c| root.join(c)).find(|p| p.exists());
    let Some(path) = found else {
        println!("criterion 10: SKIPPED - published pair corpus not present");
        return;
    };
    let dir = std::env::temp_dir().join(format!("molpolish-acc10-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (report, stderr, code) = run_cli(
        &[
            "ingest",
            "--input",
            path.to_str().unwrap(),
            "--expect-count",
            &expected.to_string(),
        ],
        &dir,
    );
    let _ = std::fs::remove_dir_all(&dir);
    assert_eq!(code, 0, "criterion 10: FAIL - ingest exited {code}: {stderr}\n{report}");
    pass(10, &format!("{expected} training pairs ingested from {}", path.display()));
}
