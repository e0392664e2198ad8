//! Error types shared across the library.

use thiserror::Error;

/// What went wrong while reading a SMILES string.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("ring closure error: {0}")]
    RingClosure(String),
    #[error("valence error: {0}")]
    Valence(String),
    #[error("unsupported feature: {0}")]
    Unsupported(String),
}

/// Parse error with the 0-based byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {offset}")]
pub struct SmilesError {
    pub offset: usize,
    pub kind: SmilesErrorKind,
}

impl SmilesError {
    pub fn new(offset: usize, kind: SmilesErrorKind) -> Self {
        SmilesError { offset, kind }
    }
}

/// Errors from graph construction and editing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("atom index {0} out of range")]
    BadAtomIndex(usize),
    #[error("self bond on atom {0}")]
    SelfBond(usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
    #[error("aromatic bond between non-aromatic atoms {0} and {1}")]
    AromaticBond(usize, usize),
    #[error("aromatic flag on non-aromatizable element {0}")]
    AromaticElement(String),
    #[error("valence error: atom {index} ({symbol}) carries bond order sum {total} over maximum {max}")]
    Valence {
        index: usize,
        symbol: String,
        total: i32,
        max: i32,
    },
}

/// Errors from fingerprint comparison.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FingerprintError {
    #[error("fingerprint width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("fingerprint radius mismatch: {0} vs {1}")]
    RadiusMismatch(u32, u32),
}

/// Errors from teacher annotation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TeacherError {
    #[error("no candidate center: the molecules share no chemical element")]
    NoCandidate,
}

/// Errors from junction-tree assembly.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssembleError {
    #[error("no valid attachment for tree node {0}")]
    NoValidAttachment(usize),
    #[error("tree node {0} realizes no candidate matching its own molecule")]
    GroundTruthMissing(usize),
    #[error("no attachment choice supplied for tree node {0}")]
    MissingChoice(usize),
    #[error("attachment choice {pick} out of range at tree node {node}")]
    BadChoice { node: usize, pick: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Errors from reading a persisted component vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("vocabulary line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Errors from the neural student.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StudentError {
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("decode budget exceeded: {0} tree nodes")]
    BudgetExceeded(usize),
    #[error("vocabulary entry missing for cluster {0}")]
    UnknownCluster(String),
    #[error(transparent)]
    Assemble(#[from] AssembleError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("checkpoint problem: {0}")]
    Checkpoint(String),
}
