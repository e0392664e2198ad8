//! SMILES text layer: parsing, canonical ranking, canonical writing.

pub mod canon;
pub mod parse;
pub mod write;

pub use canon::{canonical_rank, canonical_rank_colored, certificate, certificate_colored};
pub use parse::parse_smiles;
pub use write::write_smiles;
