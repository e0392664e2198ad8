//! Corpus-facing commands: ingestion checks, teacher annotation, summary
//! statistics, vocabulary building, and synthetic pair generation.

use crate::config::EffectiveConfig;
use crate::pairs::{emit_summary, read_pairs, OutputTarget, PairFile};
use anyhow::{Context, Result};
use molpolish::corpus::{random_edit_pairs, rule_pairs};
use molpolish::juncttree::ComponentVocabulary;
use molpolish::smiles::{certificate, write_smiles};
use molpolish::teacher::{annotate_pair, annotation_record, corpus_stats, reconstruct, PolishAnnotation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

pub struct CommandOutcome {
    /// Records dropped or skipped along the way; a nonzero count downgrades
    /// the exit code to "partial".
    pub skipped: usize,
}

pub fn cmd_ingest(
    input: &Path,
    output: Option<&Path>,
    expect_count: Option<usize>,
    cfg: &EffectiveConfig,
) -> Result<CommandOutcome> {
    let file = read_pairs(input)?;
    let mut report = String::new();
    let _ = writeln!(report, "# molpolish ingest");
    let _ = writeln!(report, "# config: {}", cfg.echo());
    let _ = writeln!(report, "file = {}", input.display());
    let _ = writeln!(report, "lines = {}", file.lines);
    let _ = writeln!(report, "pairs = {}", file.pairs.len());
    let _ = writeln!(report, "parse_failures = {}", file.errors.len());
    for e in &file.errors {
        let _ = writeln!(report, "  {e}");
    }
    if let Some(expected) = expect_count {
        let ok = file.pairs.len() == expected;
        let _ = writeln!(report, "expected = {} ({})", expected, if ok { "ok" } else { "MISMATCH" });
        if !ok {
            let mut target = OutputTarget::create(output)?;
            target.write_all(report.as_bytes())?;
            anyhow::bail!("expected {} pairs, found {}", expected, file.pairs.len());
        }
    }
    let mut target = OutputTarget::create(output)?;
    target.write_all(report.as_bytes())?;
    Ok(CommandOutcome { skipped: file.errors.len() })
}

struct AnnotatedCorpus {
    /// (index into `PairFile::pairs`, annotation).
    annotations: Vec<(usize, PolishAnnotation)>,
    no_candidate: usize,
    report: String,
}

/// Shared by `stats` and `annotate`: run the teacher over every parsed pair
/// and render the summary block.
fn annotate_corpus(file: &PairFile, input: &Path, cfg: &EffectiveConfig, heading: &str) -> AnnotatedCorpus {
    let mut annotations = Vec::new();
    let mut no_candidate = 0usize;
    for (i, (_, x, y)) in file.pairs.iter().enumerate() {
        match annotate_pair(x, y) {
            Ok(ann) => annotations.push((i, ann)),
            Err(_) => no_candidate += 1,
        }
    }
    let scale = corpus_stats(
        &annotations.iter().map(|(_, a)| a.clone()).collect::<Vec<_>>(),
    );
    let mut report = String::new();
    let _ = writeln!(report, "# molpolish {heading}");
    let _ = writeln!(report, "# config: {}", cfg.echo());
    let _ = writeln!(report, "file = {}", input.display());
    let _ = writeln!(report, "pairs = {}", file.pairs.len());
    let _ = writeln!(report, "parse_failures = {}", file.errors.len());
    for e in &file.errors {
        let _ = writeln!(report, "  {e}");
    }
    let _ = writeln!(report, "annotated = {}", annotations.len());
    let _ = writeln!(report, "no_candidate = {no_candidate}");
    let _ = writeln!(report, "mean_preserved_atoms = {:.6}", scale.mean_preserved);
    let _ = writeln!(report, "mean_removed_atoms = {:.6}", scale.mean_removed);
    let _ = writeln!(report, "mean_added_atoms = {:.6}", scale.mean_added);
    AnnotatedCorpus { annotations, no_candidate, report }
}

pub fn cmd_stats(input: &Path, output: Option<&Path>, cfg: &EffectiveConfig) -> Result<CommandOutcome> {
    let file = read_pairs(input)?;
    let corpus = annotate_corpus(&file, input, cfg, "stats");
    let mut target = OutputTarget::create(output)?;
    target.write_all(corpus.report.as_bytes())?;
    Ok(CommandOutcome { skipped: corpus.no_candidate + file.errors.len() })
}

pub fn cmd_annotate(
    input: &Path,
    output: Option<&Path>,
    audit: bool,
    cfg: &EffectiveConfig,
) -> Result<CommandOutcome> {
    let file = read_pairs(input)?;
    let corpus = annotate_corpus(&file, input, cfg, "annotate");
    let mut target = OutputTarget::create(output)?;
    let mut audit_failures = 0usize;
    for (pair_idx, ann) in &corpus.annotations {
        let (_, x, y) = &file.pairs[*pair_idx];
        let record = annotation_record(x, y, ann);
        let line = serde_json::to_string(&record)?;
        writeln!(target, "{line}")?;
        if audit {
            let rebuilt = reconstruct(ann, *y.atom(ann.mapped_center))
                .with_context(|| format!("rebuilding pair {}", pair_idx + 1))?;
            if certificate(&rebuilt) != certificate(y) {
                audit_failures += 1;
                log::warn!("pair {}: reconstruction is not isomorphic to the target", pair_idx + 1);
            }
        }
    }
    target.flush()?;
    let mut summary = corpus.report.clone();
    if audit {
        let _ = writeln!(
            summary,
            "audit = {}/{} reconstructions isomorphic",
            corpus.annotations.len() - audit_failures,
            corpus.annotations.len()
        );
    }
    emit_summary(&target, summary.trim_end());
    if audit_failures > 0 {
        anyhow::bail!("{audit_failures} reconstructions were not isomorphic to their targets");
    }
    Ok(CommandOutcome { skipped: corpus.no_candidate + file.errors.len() })
}

pub fn cmd_vocab(input: &Path, output: Option<&Path>, cfg: &EffectiveConfig) -> Result<CommandOutcome> {
    let file = read_pairs(input)?;
    let mut molecules = Vec::with_capacity(file.pairs.len() * 2);
    for (_, x, y) in &file.pairs {
        molecules.push(x.clone());
        molecules.push(y.clone());
    }
    let vocab = ComponentVocabulary::build(molecules.iter());
    let mut target = OutputTarget::create(output)?;
    target.write_all(vocab.to_tsv().as_bytes())?;
    target.flush()?;
    let mut summary = String::new();
    let _ = writeln!(summary, "# molpolish vocab");
    let _ = writeln!(summary, "# config: {}", cfg.echo());
    let _ = writeln!(summary, "molecules = {}", molecules.len());
    let _ = writeln!(summary, "parse_failures = {}", file.errors.len());
    let _ = write!(summary, "entries = {}", vocab.len());
    emit_summary(&target, &summary);
    Ok(CommandOutcome { skipped: file.errors.len() })
}

pub fn cmd_gen_corpus(
    kind: &str,
    count: usize,
    max_atoms: usize,
    seed: u64,
    output: Option<&Path>,
) -> Result<CommandOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = match kind {
        "rule" => rule_pairs(&mut rng, count, max_atoms),
        "edit" => random_edit_pairs(&mut rng, count, max_atoms),
        other => anyhow::bail!("unknown corpus kind `{other}` (expected rule|edit)"),
    };
    let mut target = OutputTarget::create(output)?;
    for (x, y) in &pairs {
        writeln!(target, "{}\t{}", write_smiles(x), write_smiles(y))?;
    }
    target.flush()?;
    emit_summary(&target, &format!("pairs = {}", pairs.len()));
    Ok(CommandOutcome { skipped: 0 })
}
