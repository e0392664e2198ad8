//! Metric evaluation over generated pairs, and standalone fingerprint
//! similarity. Property values come from a sidecar file, an external scorer
//! command, or the builtin heavy-atom toy scorer.

use crate::config::{EffectiveConfig, MetricMode, MetricSpec};
use crate::corpus_cmds::CommandOutcome;
use crate::pairs::{LineError, OutputTarget};
use anyhow::{bail, Context, Result};
use molpolish::fingerprint::{morgan_fingerprint, tanimoto};
use molpolish::graph::MolGraph;
use molpolish::smiles::{parse_smiles, write_smiles};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::process::{Command, Stdio};

/// Reserved scorer name for the builtin heavy-atom counter (test plumbing;
/// real property oracles are external programs).
const BUILTIN_SCORER: &str = "builtin:heavy-atoms";

enum PropertySource {
    Sidecar(HashMap<String, f64>),
    Command(String),
    HeavyAtoms,
    None,
}

impl PropertySource {
    fn configure(properties: Option<&Path>, scorer_cmd: Option<&str>) -> Result<PropertySource> {
        match (properties, scorer_cmd) {
            (Some(_), Some(_)) => bail!("--properties and --scorer-cmd are mutually exclusive"),
            (Some(path), None) => Ok(PropertySource::Sidecar(load_sidecar(path)?)),
            (None, Some(cmd)) if cmd == BUILTIN_SCORER => Ok(PropertySource::HeavyAtoms),
            (None, Some(cmd)) => Ok(PropertySource::Command(cmd.to_string())),
            (None, None) => Ok(PropertySource::None),
        }
    }

    /// Looks up or computes property values for canonical SMILES keys.
    /// Missing molecules are an error: silently skipping rows would corrupt
    /// the rates.
    fn resolve(&self, keys: &[String]) -> Result<HashMap<String, f64>> {
        match self {
            PropertySource::None => {
                bail!("no property source: pass --properties FILE or --scorer-cmd CMD")
            }
            PropertySource::HeavyAtoms => keys
                .iter()
                .map(|k| {
                    let g = parse_smiles(k)
                        .with_context(|| format!("builtin scorer: unparseable key {k}"))?;
                    Ok((k.clone(), g.atom_count() as f64))
                })
                .collect(),
            PropertySource::Sidecar(map) => keys
                .iter()
                .map(|k| {
                    let v = map
                        .get(k)
                        .with_context(|| format!("property missing for molecule {k}"))?;
                    Ok((k.clone(), *v))
                })
                .collect(),
            PropertySource::Command(cmd) => score_with_command(cmd, keys),
        }
    }
}

/// Sidecar layout: one "canonical-SMILES<TAB>value" per line. Keys are
/// re-canonicalized on load so any valid spelling of the molecule matches.
fn load_sidecar(path: &Path) -> Result<HashMap<String, f64>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(smiles), Some(value)) = (fields.next(), fields.next()) else {
            bail!("{}:{}: missing tab separator", path.display(), idx + 1);
        };
        let g = parse_smiles(smiles)
            .with_context(|| format!("{}:{}: bad SMILES", path.display(), idx + 1))?;
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("{}:{}: bad value", path.display(), idx + 1))?;
        if !value.is_finite() {
            bail!("{}:{}: property value must be finite", path.display(), idx + 1);
        }
        map.insert(write_smiles(&g), value);
    }
    Ok(map)
}

/// External scorer protocol: SMILES lines on stdin, one value per line on
/// stdout, same order.
fn score_with_command(cmd: &str, keys: &[String]) -> Result<HashMap<String, f64>> {
    if keys.is_empty() {
        return Ok(HashMap::new());
    }
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .with_context(|| format!("spawning scorer `{cmd}`"))?;
    {
        let stdin = child.stdin.as_mut().context("scorer stdin unavailable")?;
        for k in keys {
            writeln!(stdin, "{k}")?;
        }
    }
    let out = child.wait_with_output().context("waiting for scorer")?;
    if !out.status.success() {
        bail!("scorer `{cmd}` exited with {}", out.status);
    }
    let text = String::from_utf8(out.stdout).context("scorer output is not UTF-8")?;
    let values: Vec<f64> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().with_context(|| format!("scorer line `{l}`")))
        .collect::<Result<_>>()?;
    if values.len() != keys.len() {
        bail!("scorer returned {} values for {} molecules", values.len(), keys.len());
    }
    Ok(keys.iter().cloned().zip(values).collect())
}

struct EvalRow {
    src: String,
    generated: String,
    status: String,
    /// Parsed molecules when the row is usable.
    molecules: Option<(MolGraph, MolGraph)>,
}

fn read_generation_file(path: &Path) -> Result<(Vec<EvalRow>, Vec<LineError>)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            errors.push(LineError { line: lineno, message: "missing tab separator".into() });
            continue;
        }
        let src = fields[0].to_string();
        let generated = fields[1].to_string();
        let status = fields.get(2).map_or("ok", |s| *s).to_string();
        let molecules = if status == "ok" && !generated.is_empty() {
            match (parse_smiles(&src), parse_smiles(&generated)) {
                (Ok(x), Ok(yp)) => Some((x, yp)),
                (Err(e), _) => {
                    errors.push(LineError { line: lineno, message: format!("src: {e}") });
                    continue;
                }
                (_, Err(e)) => {
                    errors.push(LineError { line: lineno, message: format!("generated: {e}") });
                    continue;
                }
            }
        } else {
            // A failed generation stays in the record count as a non-success.
            None
        };
        rows.push(EvalRow { src, generated, status, molecules });
    }
    Ok((rows, errors))
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_evaluate(
    input: &Path,
    output: Option<&Path>,
    spec: &MetricSpec,
    properties: Option<&Path>,
    scorer_cmd: Option<&str>,
    cfg: &EffectiveConfig,
) -> Result<CommandOutcome> {
    let (rows, errors) = read_generation_file(input)?;
    let source = PropertySource::configure(properties, scorer_cmd)?;

    struct Scored {
        sim: f64,
        key_x: String,
        key_y: String,
    }
    let mut scored: Vec<Option<Scored>> = Vec::with_capacity(rows.len());
    for row in &rows {
        match &row.molecules {
            Some((x, yp)) => {
                let fx = morgan_fingerprint(x, cfg.fp_radius, cfg.fp_width);
                let fy = morgan_fingerprint(yp, cfg.fp_radius, cfg.fp_width);
                let sim = tanimoto(&fx, &fy)?;
                scored.push(Some(Scored { sim, key_x: write_smiles(x), key_y: write_smiles(yp) }));
            }
            None => scored.push(None),
        }
    }
    // Property lookups: success metrics need the generated side only; the
    // improvement metrics also need the source side.
    let needed: Vec<String> = match spec.mode {
        MetricMode::SuccessRate => scored
            .iter()
            .flatten()
            .filter(|s| in_range(s.sim, spec.similarity))
            .map(|s| s.key_y.clone())
            .collect(),
        MetricMode::MeanImprovement => scored
            .iter()
            .flatten()
            .filter(|s| s.sim >= spec.similarity.0)
            .flat_map(|s| [s.key_x.clone(), s.key_y.clone()])
            .collect(),
    };
    let mut unique = Vec::new();
    let mut dedup = HashMap::new();
    for k in needed {
        if dedup.insert(k.clone(), ()).is_none() {
            unique.push(k);
        }
    }
    let values = source.resolve(&unique)?;

    let mut report = String::new();
    let _ = writeln!(report, "# molpolish evaluate");
    let _ = writeln!(report, "# config: {}", cfg.echo());
    let _ = writeln!(report, "# metric: {}", spec.describe());
    let _ = writeln!(report, "# columns: src\tgenerated\tstatus\tsimilarity\tproperty_src\tproperty_out\tqualifies");

    let mut successes = 0usize;
    let mut qualifying = 0usize;
    let mut improvement_sum = 0.0f64;
    for (row, sc) in rows.iter().zip(&scored) {
        let (sim_str, px_str, py_str, hit) = match (sc, spec.mode) {
            (None, _) => ("-".to_string(), "-".into(), "-".into(), false),
            (Some(s), MetricMode::SuccessRate) => {
                let sim_ok = in_range(s.sim, spec.similarity);
                let mut py = "-".to_string();
                let mut hit = false;
                if sim_ok {
                    let v = values[&s.key_y];
                    py = format!("{v:.6}");
                    let range = spec.property.expect("success metric carries a property range");
                    hit = in_range(v, range);
                }
                (format!("{:.6}", s.sim), "-".into(), py, hit)
            }
            (Some(s), MetricMode::MeanImprovement) => {
                let qualifies = s.sim >= spec.similarity.0;
                let (mut px, mut py) = ("-".to_string(), "-".to_string());
                if qualifies {
                    let vx = values[&s.key_x];
                    let vy = values[&s.key_y];
                    improvement_sum += vy - vx;
                    px = format!("{vx:.6}");
                    py = format!("{vy:.6}");
                }
                (format!("{:.6}", s.sim), px, py, qualifies)
            }
        };
        if hit {
            match spec.mode {
                MetricMode::SuccessRate => successes += 1,
                MetricMode::MeanImprovement => qualifying += 1,
            }
        }
        let _ = writeln!(
            report,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            row.src,
            row.generated,
            row.status,
            sim_str,
            px_str,
            py_str,
            u8::from(hit),
        );
    }

    let _ = writeln!(report, "records\t{}", rows.len());
    let _ = writeln!(report, "parse_failures\t{}", errors.len());
    for e in &errors {
        let _ = writeln!(report, "# {e}");
    }
    match spec.mode {
        MetricMode::SuccessRate => {
            let rate = if rows.is_empty() { 0.0 } else { successes as f64 / rows.len() as f64 };
            let _ = writeln!(report, "successes\t{successes}");
            let _ = writeln!(report, "success_rate\t{rate:.6}");
            let _ = writeln!(report, "success_percent\t{:.2}", rate * 100.0);
        }
        MetricMode::MeanImprovement => {
            let mean = if qualifying == 0 { 0.0 } else { improvement_sum / qualifying as f64 };
            let _ = writeln!(report, "qualifying\t{qualifying}");
            let _ = writeln!(report, "mean_improvement\t{mean:.6}");
        }
    }

    let mut target = OutputTarget::create(output)?;
    target.write_all(report.as_bytes())?;
    target.flush()?;
    Ok(CommandOutcome { skipped: errors.len() })
}

fn in_range(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}

pub fn cmd_fingerprint(
    a: &str,
    b: &str,
    output: Option<&Path>,
    cfg: &EffectiveConfig,
) -> Result<CommandOutcome> {
    let ga = parse_smiles(a).context("first molecule")?;
    let gb = parse_smiles(b).context("second molecule")?;
    let fa = morgan_fingerprint(&ga, cfg.fp_radius, cfg.fp_width);
    let fb = morgan_fingerprint(&gb, cfg.fp_radius, cfg.fp_width);
    let sim = tanimoto(&fa, &fb)?;
    let mut report = String::new();
    let _ = writeln!(report, "# molpolish fingerprint");
    let _ = writeln!(report, "# config: {}", cfg.echo());
    let _ = writeln!(report, "a = {} ({} bits set)", write_smiles(&ga), fa.count_ones());
    let _ = writeln!(report, "b = {} ({} bits set)", write_smiles(&gb), fb.count_ones());
    let _ = writeln!(report, "similarity = {sim:.6}");
    let mut target = OutputTarget::create(output)?;
    target.write_all(report.as_bytes())?;
    Ok(CommandOutcome { skipped: 0 })
}
