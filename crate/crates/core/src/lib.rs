//! Molecular graph polishing.
//!
//! The library takes pairs of molecules (a source and an improved target),
//! explains the difference as a small edit around one preserved center
//! (teacher), and trains a compact neural editor to reproduce such edits on
//! new molecules (student). Supporting layers: a SMILES reader/canonical
//! writer, branch decomposition with anchored-fragment matching, circular
//! fingerprints, and junction-tree decomposition with candidate assembly.

pub mod branch;
pub mod corpus;
pub mod element;
pub mod error;
pub mod fingerprint;
pub mod graph;
pub mod isomorphism;
pub mod juncttree;
pub mod smiles;
pub mod student;
pub mod teacher;

pub use element::Element;
pub use error::{
    AssembleError, FingerprintError, GraphError, SmilesError, SmilesErrorKind, StudentError,
    TeacherError, VocabError,
};
pub use branch::{branch_isomorphic, branches_around, merge_disjoint, Branch, BranchSet};
pub use fingerprint::{morgan_fingerprint, tanimoto, Fingerprint};
pub use graph::{Atom, Bond, BondOrder, MolGraph};
pub use isomorphism::{find_isomorphism, graph_isomorphic};
pub use juncttree::{
    decompose, enumerate_assemblies, ground_truth_assembly, realize_molecule, Cluster,
    ClusterKind, ComponentVocabulary, JunctionTree, PartialAssembly,
};
pub use smiles::{canonical_rank, parse_smiles, write_smiles};
