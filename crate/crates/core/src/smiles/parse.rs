//! SMILES reader for the organic subset plus bracket atoms.
//!
//! Supported: elements written bare (B, C, N, O, P, S, F, Cl, Br, I) and
//! their aromatic lowercase forms, bracket atoms with isotope / explicit
//! hydrogens / formal charge, bond symbols `- = # :`, branches, and ring
//! closures including `%nn`. Aromatic flags are kept exactly as written; no
//! aromaticity perception or kekulization happens here.
//!
//! Rejected with a positioned error: stereo markers (`/ \ @`), wildcards,
//! dot-disconnected input, explicit hydrogen atoms, and atom classes.

use crate::element::Element;
use crate::error::{GraphError, SmilesError, SmilesErrorKind};
use crate::graph::{Atom, BondOrder, MolGraph};

use std::collections::HashMap;

fn syntax(offset: usize, msg: impl Into<String>) -> SmilesError {
    SmilesError::new(offset, SmilesErrorKind::Syntax(msg.into()))
}

fn unsupported(offset: usize, msg: impl Into<String>) -> SmilesError {
    SmilesError::new(offset, SmilesErrorKind::Unsupported(msg.into()))
}

struct RingOpen {
    atom: usize,
    order: Option<BondOrder>,
    offset: usize,
}

struct Builder {
    graph: MolGraph,
    /// Byte offset of each atom's token, for positioned valence errors.
    atom_offsets: Vec<usize>,
    prev: Option<usize>,
    branch_stack: Vec<usize>,
    pending_bond: Option<(BondOrder, usize)>,
    rings: HashMap<u16, RingOpen>,
}

impl Builder {
    fn place_atom(&mut self, atom: Atom, offset: usize) -> Result<(), SmilesError> {
        let idx = self
            .graph
            .add_atom(atom)
            .map_err(|e| graph_to_smiles(e, offset))?;
        self.atom_offsets.push(offset);
        if let Some(prev) = self.prev {
            let order = match self.pending_bond.take() {
                Some((o, _)) => o,
                None => default_bond(&self.graph, prev, idx),
            };
            self.graph
                .add_bond(prev, idx, order)
                .map_err(|e| graph_to_smiles(e, offset))?;
        } else if let Some((_, bond_at)) = self.pending_bond.take() {
            return Err(syntax(bond_at, "bond symbol before any atom"));
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn ring_digit(&mut self, digit: u16, offset: usize) -> Result<(), SmilesError> {
        let Some(here) = self.prev else {
            return Err(syntax(offset, "ring closure digit before any atom"));
        };
        let pending = self.pending_bond.take();
        match self.rings.remove(&digit) {
            Some(open) => {
                if open.atom == here {
                    return Err(SmilesError::new(
                        offset,
                        SmilesErrorKind::RingClosure(format!(
                            "ring closure {digit} bonds atom to itself"
                        )),
                    ));
                }
                let order = match (open.order, pending.map(|(o, _)| o)) {
                    (None, None) => default_bond(&self.graph, open.atom, here),
                    (Some(o), None) | (None, Some(o)) => o,
                    (Some(a), Some(b)) if a == b => a,
                    (Some(_), Some(_)) => {
                        return Err(syntax(
                            offset,
                            format!("ring closure {digit} has conflicting bond symbols"),
                        ))
                    }
                };
                self.graph
                    .add_bond(open.atom, here, order)
                    .map_err(|e| match e {
                        GraphError::DuplicateBond(a, b) => SmilesError::new(
                            offset,
                            SmilesErrorKind::RingClosure(format!(
                                "ring closure {digit} duplicates the bond between atoms {a} and {b}"
                            )),
                        ),
                        other => graph_to_smiles(other, offset),
                    })?;
            }
            None => {
                self.rings.insert(
                    digit,
                    RingOpen {
                        atom: here,
                        order: pending.map(|(o, _)| o),
                        offset,
                    },
                );
            }
        }
        Ok(())
    }
}

fn default_bond(g: &MolGraph, a: usize, b: usize) -> BondOrder {
    if g.atom(a).aromatic && g.atom(b).aromatic {
        BondOrder::Aromatic
    } else {
        BondOrder::Single
    }
}

fn graph_to_smiles(e: GraphError, offset: usize) -> SmilesError {
    match e {
        GraphError::Valence { symbol, total, max, .. } => SmilesError::new(
            offset,
            SmilesErrorKind::Valence(format!(
                "{symbol} carries bond order sum {total} over maximum {max}"
            )),
        ),
        GraphError::AromaticElement(sym) => SmilesError::new(
            offset,
            SmilesErrorKind::Unsupported(format!("aromatic flag on element {sym}")),
        ),
        GraphError::AromaticBond(..) => SmilesError::new(
            offset,
            SmilesErrorKind::Syntax("aromatic bond between non-aromatic atoms".into()),
        ),
        other => SmilesError::new(offset, SmilesErrorKind::Syntax(other.to_string())),
    }
}

/// Parses a single-molecule SMILES string into a hydrogen-suppressed graph.
/// Atom indices follow first appearance in the text.
pub fn parse_smiles(text: &str) -> Result<MolGraph, SmilesError> {
    let bytes = text.as_bytes();
    if bytes.is_empty() {
        return Err(syntax(0, "empty input"));
    }
    let mut b = Builder {
        graph: MolGraph::new(),
        atom_offsets: Vec::new(),
        prev: None,
        branch_stack: Vec::new(),
        pending_bond: None,
        rings: HashMap::new(),
    };
    let mut pos = 0usize;
    while pos < bytes.len() {
        let c = bytes[pos];
        match c {
            b'[' => {
                let (atom, next) = parse_bracket(bytes, pos)?;
                b.place_atom(atom, pos)?;
                pos = next;
            }
            b'A'..=b'Z' => {
                let two = if pos + 1 < bytes.len() {
                    &text[pos..pos + 2]
                } else {
                    ""
                };
                let (sym, width) = match two {
                    "Cl" | "Br" => (two, 2),
                    _ => (&text[pos..pos + 1], 1),
                };
                let el = Element::from_symbol(sym)
                    .filter(|e| e.in_organic_subset())
                    .ok_or_else(|| {
                        syntax(pos, format!("element {sym} requires bracket notation"))
                    })?;
                b.place_atom(Atom::new(el), pos)?;
                pos += width;
            }
            b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                let sym = text[pos..pos + 1].to_uppercase();
                let el = Element::from_symbol(&sym).expect("aromatic subset symbol");
                b.place_atom(Atom::aromatic(el), pos)?;
                pos += 1;
            }
            b'-' | b'=' | b'#' | b':' => {
                if b.pending_bond.is_some() {
                    return Err(syntax(pos, "two bond symbols in a row"));
                }
                let order = match c {
                    b'-' => BondOrder::Single,
                    b'=' => BondOrder::Double,
                    b'#' => BondOrder::Triple,
                    _ => BondOrder::Aromatic,
                };
                b.pending_bond = Some((order, pos));
                pos += 1;
            }
            b'0'..=b'9' => {
                b.ring_digit((c - b'0') as u16, pos)?;
                pos += 1;
            }
            b'%' => {
                if pos + 2 >= bytes.len()
                    || !bytes[pos + 1].is_ascii_digit()
                    || !bytes[pos + 2].is_ascii_digit()
                {
                    return Err(syntax(pos, "% must be followed by two digits"));
                }
                let digit = (bytes[pos + 1] - b'0') as u16 * 10 + (bytes[pos + 2] - b'0') as u16;
                b.ring_digit(digit, pos)?;
                pos += 3;
            }
            b'(' => {
                let Some(prev) = b.prev else {
                    return Err(syntax(pos, "branch opened before any atom"));
                };
                if b.pending_bond.is_some() {
                    return Err(syntax(pos, "bond symbol before branch open"));
                }
                b.branch_stack.push(prev);
                pos += 1;
            }
            b')' => {
                if b.pending_bond.is_some() {
                    return Err(syntax(pos, "dangling bond symbol before branch close"));
                }
                let Some(back) = b.branch_stack.pop() else {
                    return Err(syntax(pos, "unmatched branch close"));
                };
                b.prev = Some(back);
                pos += 1;
            }
            b'/' | b'\\' => return Err(unsupported(pos, "stereo bond marker")),
            b'*' => return Err(unsupported(pos, "wildcard atom")),
            b'.' => return Err(unsupported(pos, "dot-disconnected input")),
            _ => {
                return Err(syntax(
                    pos,
                    format!("unexpected character {:?}", text[pos..].chars().next().unwrap()),
                ))
            }
        }
    }
    if let Some((_, at)) = b.pending_bond {
        return Err(syntax(at, "dangling bond symbol at end of input"));
    }
    if !b.branch_stack.is_empty() {
        return Err(syntax(bytes.len(), "unclosed branch"));
    }
    if let Some((&digit, open)) = b.rings.iter().min_by_key(|(d, _)| **d) {
        return Err(SmilesError::new(
            open.offset,
            SmilesErrorKind::RingClosure(format!("ring closure {digit} never closed")),
        ));
    }
    if b.graph.atom_count() == 0 {
        return Err(syntax(0, "no atoms in input"));
    }
    debug_assert!(b.graph.is_connected());
    if let Err(err) = b.graph.validate_valences() {
        let offset = match &err {
            GraphError::Valence { index, .. } => b.atom_offsets[*index],
            _ => 0,
        };
        return Err(graph_to_smiles(err, offset));
    }
    Ok(b.graph)
}

/// Parses one bracket atom starting at `start` (which points at `[`).
/// Returns the atom and the offset just past `]`.
fn parse_bracket(bytes: &[u8], start: usize) -> Result<(Atom, usize), SmilesError> {
    let mut pos = start + 1;
    let end = bytes.len();
    let mut isotope: Option<u16> = None;
    let mut digits = 0usize;
    while pos < end && bytes[pos].is_ascii_digit() && digits < 4 {
        let d = (bytes[pos] - b'0') as u32;
        isotope = Some((isotope.unwrap_or(0) as u32 * 10 + d).min(u16::MAX as u32) as u16);
        digits += 1;
        pos += 1;
    }
    if pos >= end {
        return Err(syntax(start, "unterminated bracket atom"));
    }

    let (element, aromatic) = match bytes[pos] {
        b'*' => return Err(unsupported(pos, "wildcard atom")),
        b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
            // Lowercase two-letter aromatic symbols (se, as) fall outside the
            // aromatizable set and are rejected below via the element check.
            if pos + 1 < end && bytes[pos + 1].is_ascii_lowercase() {
                let sym = std::str::from_utf8(&bytes[pos..pos + 2]).unwrap();
                return Err(unsupported(pos, format!("aromatic element {sym}")));
            }
            let sym = (bytes[pos] as char).to_uppercase().to_string();
            pos += 1;
            (Element::from_symbol(&sym).unwrap(), true)
        }
        b'A'..=b'Z' => {
            let mut sym = String::new();
            sym.push(bytes[pos] as char);
            pos += 1;
            // A following lowercase letter extends the symbol unless it is
            // the hydrogen-count marker position for a one-letter element.
            if pos < end && bytes[pos].is_ascii_lowercase() {
                let mut two = sym.clone();
                two.push(bytes[pos] as char);
                if Element::from_symbol(&two).is_some() {
                    sym = two;
                    pos += 1;
                }
            }
            match Element::from_symbol(&sym) {
                Some(el) if el.symbol() == "H" => {
                    return Err(unsupported(start + 1, "explicit hydrogen atom"))
                }
                Some(el) => (el, false),
                None => return Err(syntax(start + 1, format!("unknown element {sym}"))),
            }
        }
        b'@' => return Err(unsupported(pos, "chirality marker")),
        _ => {
            return Err(syntax(
                pos,
                format!("unexpected character {:?} in bracket atom", bytes[pos] as char),
            ))
        }
    };

    if pos < end && bytes[pos] == b'@' {
        return Err(unsupported(pos, "chirality marker"));
    }

    let mut explicit_h: u8 = 0;
    if pos < end && bytes[pos] == b'H' {
        pos += 1;
        let mut count: u32 = 1;
        if pos < end && bytes[pos].is_ascii_digit() {
            count = 0;
            while pos < end && bytes[pos].is_ascii_digit() {
                count = count * 10 + (bytes[pos] - b'0') as u32;
                if count > 99 {
                    return Err(syntax(pos, "hydrogen count out of range"));
                }
                pos += 1;
            }
        }
        explicit_h = count as u8;
    }

    let mut charge: i32 = 0;
    if pos < end && (bytes[pos] == b'+' || bytes[pos] == b'-') {
        let sign: i32 = if bytes[pos] == b'+' { 1 } else { -1 };
        let mark = bytes[pos];
        pos += 1;
        if pos < end && bytes[pos].is_ascii_digit() {
            let mut mag = 0i32;
            while pos < end && bytes[pos].is_ascii_digit() {
                mag = mag * 10 + (bytes[pos] - b'0') as i32;
                if mag > 15 {
                    return Err(syntax(pos, "charge out of range"));
                }
                pos += 1;
            }
            charge = sign * mag;
        } else {
            charge = sign;
            while pos < end && bytes[pos] == mark {
                charge += sign;
                pos += 1;
                if charge.abs() > 15 {
                    return Err(syntax(pos, "charge out of range"));
                }
            }
        }
    }

    if pos < end && bytes[pos] == b':' {
        return Err(unsupported(pos, "atom class"));
    }
    if pos >= end || bytes[pos] != b']' {
        return Err(syntax(pos.min(end - 1), "expected ] to close bracket atom"));
    }
    if aromatic && !element.aromatizable() {
        return Err(unsupported(
            start + 1,
            format!("aromatic flag on element {}", element.symbol()),
        ));
    }
    Ok((
        Atom {
            element,
            charge,
            aromatic,
            isotope,
            explicit_h: Some(explicit_h),
        },
        pos + 1,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::SmilesErrorKind as K;
    use rand::SeedableRng;

    fn kind(text: &str) -> (usize, K) {
        let e = parse_smiles(text).unwrap_err();
        (e.offset, e.kind)
    }

    #[test]
    fn linear_and_branched_molecules() {
        let g = parse_smiles("CCO").unwrap();
        assert_eq!(g.atom_count(), 3);
        assert_eq!(g.hydrogen_count(2), 1);

        let g = parse_smiles("CC(C)(C)C").unwrap();
        assert_eq!(g.degree(1), 4);
        assert_eq!(g.hydrogen_count(1), 0);

        let g = parse_smiles("C#N").unwrap();
        assert_eq!(g.bond_between(0, 1), Some(BondOrder::Triple));
    }

    #[test]
    fn aromatic_ring_kept_as_written() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(g.atom_count(), 6);
        for i in 0..6 {
            assert!(g.atom(i).aromatic);
            assert_eq!(g.hydrogen_count(i), 1);
        }
        assert_eq!(g.bond_between(0, 5), Some(BondOrder::Aromatic));
        // Biphenyl-style single bond between aromatic atoms must be explicit.
        let g = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        assert_eq!(g.bond_between(5, 6), Some(BondOrder::Single));
    }

    #[test]
    fn bracket_atoms() {
        let g = parse_smiles("[NH4+]").unwrap();
        let a = g.atom(0);
        assert_eq!(a.charge, 1);
        assert_eq!(a.explicit_h, Some(4));

        let g = parse_smiles("[13CH4]").unwrap();
        assert_eq!(g.atom(0).isotope, Some(13));

        let g = parse_smiles("C[O-]").unwrap();
        assert_eq!(g.atom(1).charge, -1);
        assert_eq!(g.hydrogen_count(1), 0);

        let g = parse_smiles("[Fe]").unwrap();
        assert_eq!(g.atom(0).element.symbol(), "Fe");

        let g = parse_smiles("c1cc[nH]c1").unwrap();
        assert_eq!(g.hydrogen_count(3), 1);
    }

    #[test]
    fn ring_closures_including_percent() {
        let g = parse_smiles("C1CCCCC1").unwrap();
        assert_eq!(g.bond_count(), 6);
        let g = parse_smiles("C%10CCCCC%10").unwrap();
        assert_eq!(g.bond_count(), 6);
        let g = parse_smiles("C=1CCCCC=1").unwrap();
        assert_eq!(g.bond_between(0, 5), Some(BondOrder::Double));
    }

    #[test]
    fn rejected_features_carry_positions() {
        assert_eq!(kind("C/C=C/C").0, 1);
        assert!(matches!(kind("C/C=C/C").1, K::Unsupported(_)));
        assert!(matches!(kind("C[C@H](N)O").1, K::Unsupported(_)));
        assert!(matches!(kind("C.C").1, K::Unsupported(_)));
        assert!(matches!(kind("*CC").1, K::Unsupported(_)));
        assert!(matches!(kind("[H][H]").1, K::Unsupported(_)));
        assert!(matches!(kind("C[CH3:1]O").1, K::Unsupported(_)));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert_eq!(kind(""), (0, K::Syntax("empty input".into())));
        let (off, k) = kind("C1CC");
        assert_eq!(off, 1);
        assert!(matches!(k, K::RingClosure(_)));
        let (off, k) = kind("C(C");
        assert_eq!(off, 3);
        assert!(matches!(k, K::Syntax(_)));
        let (off, k) = kind("CC)C");
        assert_eq!(off, 2);
        assert!(matches!(k, K::Syntax(_)));
        let (_, k) = kind("C==C");
        assert!(matches!(k, K::Syntax(_)));
        let (_, k) = kind("C-");
        assert!(matches!(k, K::Syntax(_)));
        let (_, k) = kind("C11C");
        assert!(matches!(k, K::RingClosure(_)));
    }

    #[test]
    fn valence_errors_point_at_the_atom() {
        let (off, k) = kind("O(C)(C)C");
        assert_eq!(off, 0);
        assert!(matches!(k, K::Valence(_)));
        let (_, k) = kind("C$C");
        assert!(matches!(k, K::Syntax(_)));
    }

    #[test]
    fn fuzzed_ascii_never_panics() {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let alphabet: &[u8] = b"CNOScnos()[]=#-+123456789%@/\\.*Hh ";
        for _ in 0..20_000 {
            let len = rng.random_range(0..24);
            let s: String = (0..len)
                .map(|_| alphabet[rng.random_range(0..alphabet.len())] as char)
                .collect();
            let _ = parse_smiles(&s);
        }
    }
}
