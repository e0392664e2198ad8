//! Tab-separated record files: pair corpora ("src<TAB>tgt") and generation
//! output ("src<TAB>generated<TAB>status"). Per-line problems are collected
//! as diagnostics instead of aborting the run.

use anyhow::{Context, Result};
use molpolish::graph::MolGraph;
use molpolish::smiles::parse_smiles;
use std::io::Write;
use std::path::Path;

/// A line that could not be used, with its 1-based line number.
#[derive(Debug, Clone)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug)]
pub struct PairFile {
    /// (line number, source, target) for every parsed pair, in file order.
    pub pairs: Vec<(usize, MolGraph, MolGraph)>,
    pub errors: Vec<LineError>,
    /// Non-blank lines seen.
    pub lines: usize,
}

/// Reads a "src<TAB>tgt" pair file. Blank lines are skipped; malformed or
/// unparseable lines land in `errors`.
pub fn read_pairs(path: &Path) -> Result<PairFile> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = PairFile { pairs: Vec::new(), errors: Vec::new(), lines: 0 };
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        out.lines += 1;
        let lineno = idx + 1;
        let mut fields = line.split('\t');
        let (Some(src), Some(tgt)) = (fields.next(), fields.next()) else {
            out.errors.push(LineError { line: lineno, message: "missing tab separator".into() });
            continue;
        };
        match (parse_smiles(src), parse_smiles(tgt)) {
            (Ok(x), Ok(y)) => out.pairs.push((lineno, x, y)),
            (Err(e), _) => {
                out.errors.push(LineError { line: lineno, message: format!("src: {e}") })
            }
            (_, Err(e)) => {
                out.errors.push(LineError { line: lineno, message: format!("tgt: {e}") })
            }
        }
    }
    Ok(out)
}

/// Line number, raw first-column text, and the parsed molecule.
pub type SourceRecord = (usize, String, MolGraph);

/// Reads the first column of a record file as molecules (for generation
/// input, which may be a bare SMILES list or a pair file).
pub fn read_sources(path: &Path) -> Result<(Vec<SourceRecord>, Vec<LineError>)> {
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
        let smiles = line.split('\t').next().unwrap_or("");
        match parse_smiles(smiles) {
            Ok(g) => rows.push((lineno, smiles.to_string(), g)),
            Err(e) => errors.push(LineError { line: lineno, message: format!("src: {e}") }),
        }
    }
    Ok((rows, errors))
}

/// Where a command's primary output goes: a file when `--output` was given,
/// stdout otherwise.
pub enum OutputTarget {
    File(std::fs::File),
    Stdout(std::io::Stdout),
}

impl OutputTarget {
    pub fn create(path: Option<&Path>) -> Result<OutputTarget> {
        match path {
            Some(p) => {
                if let Some(dir) = p.parent() {
                    if !dir.as_os_str().is_empty() {
                        std::fs::create_dir_all(dir)
                            .with_context(|| format!("creating {}", dir.display()))?;
                    }
                }
                let f = std::fs::File::create(p)
                    .with_context(|| format!("creating {}", p.display()))?;
                Ok(OutputTarget::File(f))
            }
            None => Ok(OutputTarget::Stdout(std::io::stdout())),
        }
    }

    pub fn is_file(&self) -> bool {
        matches!(self, OutputTarget::File(..))
    }
}

impl Write for OutputTarget {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        match self {
            OutputTarget::File(f) => f.write(buf),
            OutputTarget::Stdout(s) => s.write(buf),
        }
    }
    fn flush(&mut self) -> std::io::Result<()> {
        match self {
            OutputTarget::File(f) => f.flush(),
            OutputTarget::Stdout(s) => s.flush(),
        }
    }
}

/// Prints a command summary: to stdout when the data went to a file, to
/// stderr when stdout already carries the data.
pub fn emit_summary(target: &OutputTarget, summary: &str) {
    if target.is_file() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
}
