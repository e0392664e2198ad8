//! Model-facing commands: training with checkpoints and a CSV loss log, and
//! batch generation over a source file.

use crate::config::EffectiveConfig;
use crate::corpus_cmds::CommandOutcome;
use crate::pairs::{emit_summary, read_pairs, read_sources, OutputTarget};
use anyhow::{Context, Result};
use molpolish::graph::MolGraph;
use molpolish::juncttree::ComponentVocabulary;
use molpolish::smiles::write_smiles;
use molpolish::student::{
    generate, load_checkpoint, prepare_corpus, train, StudentModel,
};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

pub fn cmd_train(input: &Path, outdir: &Path, cfg: &EffectiveConfig) -> Result<CommandOutcome> {
    let file = read_pairs(input)?;
    let pairs: Vec<(MolGraph, MolGraph)> =
        file.pairs.iter().map(|(_, x, y)| (x.clone(), y.clone())).collect();
    let prepared = prepare_corpus(&pairs, cfg.student.assembly_cap);
    std::fs::create_dir_all(outdir).with_context(|| format!("creating {}", outdir.display()))?;

    let mut model = StudentModel::new(cfg.student.clone(), prepared.vocab.clone());
    let outcome = train(&mut model, &prepared.samples, 1, Some(outdir));

    // The loss log is written even when training aborts: completed epochs
    // already have checkpoints on disk.
    let log_path = outdir.join("train_log.csv");
    let mut csv = String::new();
    let _ = writeln!(csv, "# molpolish train");
    let _ = writeln!(csv, "# config: {}", cfg.echo());
    let _ = writeln!(csv, "epoch,loss_total,loss_c,loss_r,loss_topo,loss_label,loss_a,seconds");
    for row in &outcome.rows {
        let _ = writeln!(
            csv,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.3}",
            row.epoch,
            row.loss_total,
            row.loss_center,
            row.loss_branch,
            row.loss_topo,
            row.loss_label,
            row.loss_assembly,
            row.seconds,
        );
    }
    std::fs::write(&log_path, csv).with_context(|| format!("writing {}", log_path.display()))?;

    let mut summary = String::new();
    let _ = writeln!(summary, "# molpolish train");
    let _ = writeln!(summary, "# config: {}", cfg.echo());
    let _ = writeln!(summary, "pairs = {}", file.pairs.len());
    let _ = writeln!(summary, "parse_failures = {}", file.errors.len());
    let _ = writeln!(summary, "samples = {}", prepared.samples.len());
    let _ = writeln!(summary, "skipped = {}", prepared.skipped.len());
    for (idx, reason) in prepared.skipped.iter().take(10) {
        let _ = writeln!(summary, "  pair {}: {reason}", idx + 1);
    }
    let _ = writeln!(summary, "vocabulary = {}", prepared.vocab.len());
    let _ = writeln!(summary, "epochs_completed = {}", outcome.rows.len());
    if let Some(last) = outcome.rows.last() {
        let _ = writeln!(summary, "final_loss = {:.6}", last.loss_total);
    }
    let _ = writeln!(summary, "log = {}", log_path.display());
    let _ = write!(summary, "checkpoint = {}", outdir.join("checkpoint_latest.json").display());
    println!("{summary}");

    if let Some(err) = outcome.aborted {
        anyhow::bail!("training aborted: {err}");
    }
    Ok(CommandOutcome { skipped: prepared.skipped.len() + file.errors.len() })
}

pub fn cmd_generate(
    input: &Path,
    output: Option<&Path>,
    checkpoint: Option<&Path>,
    cfg: &EffectiveConfig,
) -> Result<CommandOutcome> {
    let (rows, errors) = read_sources(input)?;
    let model = match checkpoint {
        Some(path) => {
            let (model, _epoch) = load_checkpoint(path)?;
            model
        }
        None => {
            // No trained weights: a seeded, untrained model over the input's
            // own cluster vocabulary. Deterministic, useful for plumbing runs.
            let molecules: Vec<MolGraph> = rows.iter().map(|(_, _, g)| g.clone()).collect();
            let vocab = ComponentVocabulary::build(molecules.iter());
            StudentModel::new(cfg.student.clone(), vocab)
        }
    };
    // The echo must describe the model that actually ran, which a checkpoint
    // overrides wholesale.
    let mut cfg = cfg.clone();
    cfg.student = model.config.clone();

    let mut target = OutputTarget::create(output)?;
    let mut ok = 0usize;
    let mut failed = 0usize;
    for (_, smiles, graph) in &rows {
        let outcome = generate(&model, graph);
        let rendered = outcome.molecule.as_ref().map(write_smiles).unwrap_or_default();
        if outcome.status == "ok" {
            ok += 1;
        } else {
            failed += 1;
        }
        writeln!(target, "{smiles}\t{rendered}\t{}", outcome.status)?;
    }
    target.flush()?;

    let mut summary = String::new();
    let _ = writeln!(summary, "# molpolish generate");
    let _ = writeln!(summary, "# config: {}", cfg.echo());
    let _ = writeln!(summary, "sources = {}", rows.len());
    let _ = writeln!(summary, "parse_failures = {}", errors.len());
    for e in errors.iter().take(10) {
        let _ = writeln!(summary, "  {e}");
    }
    let _ = writeln!(summary, "generated = {ok}");
    let _ = write!(summary, "failed = {failed}");
    emit_summary(&target, &summary);
    Ok(CommandOutcome { skipped: errors.len() })
}
