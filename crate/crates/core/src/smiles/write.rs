//! Canonical SMILES writer.
//!
//! Emission is a depth-first walk that starts at the atom with canonical
//! rank 0 and always takes the lowest-ranked unvisited neighbor next, so the
//! output string depends only on the abstract graph. Atoms are normalized on
//! the way out: bracket notation appears exactly when the resolved state
//! (charge, isotope, hydrogen count, element) cannot be expressed bare.

use crate::graph::{BondOrder, MolGraph};
use crate::smiles::canon::canonical_rank;

/// Writes the canonical form of a connected molecule. For any atom
/// permutation of the input the output is byte-identical.
pub fn write_smiles(g: &MolGraph) -> String {
    assert!(g.atom_count() > 0, "cannot serialize an empty molecule");
    let ranks = canonical_rank(g);
    write_with_ranks(g, &ranks)
}

struct Closure {
    open: usize,
    close: usize,
    order: BondOrder,
    digit: u16,
}

struct Writer<'g> {
    g: &'g MolGraph,
    ranks: &'g [usize],
    children: Vec<Vec<usize>>,
    closures: Vec<Closure>,
    out: String,
    digit_in_use: [bool; 100],
}

pub(crate) fn write_with_ranks(g: &MolGraph, ranks: &[usize]) -> String {
    let n = g.atom_count();
    let start = (0..n).find(|&i| ranks[i] == 0).expect("rank 0 exists");

    let mut w = Writer {
        g,
        ranks,
        children: vec![Vec::new(); n],
        closures: Vec::new(),
        out: String::new(),
        digit_in_use: [false; 100],
    };
    let mut visited = vec![false; n];
    visited[start] = true;
    w.classify(start, usize::MAX, &mut visited);
    w.emit(start, None);
    w.out
}

impl Writer<'_> {
    /// First pass: split edges into a DFS spanning tree and ring closures.
    /// Proper depth-first exploration guarantees every closure's `open` atom
    /// is an ancestor of its `close` atom, i.e. emitted earlier.
    fn classify(&mut self, u: usize, parent: usize, visited: &mut Vec<bool>) {
        let mut nbrs: Vec<usize> = self.g.neighbors(u).map(|(v, _)| v).collect();
        nbrs.sort_by_key(|&v| self.ranks[v]);
        for v in nbrs {
            if v == parent {
                continue;
            }
            if visited[v] {
                let already = self
                    .closures
                    .iter()
                    .any(|c| (c.open == v && c.close == u) || (c.open == u && c.close == v));
                if !already {
                    self.closures.push(Closure {
                        open: v,
                        close: u,
                        order: self.g.bond_between(u, v).expect("edge exists"),
                        digit: 0,
                    });
                }
            } else {
                visited[v] = true;
                self.children[u].push(v);
                self.classify(v, u, visited);
            }
        }
    }

    fn next_digit(&mut self) -> u16 {
        let d = (1..100)
            .find(|&d| !self.digit_in_use[d as usize])
            .expect("fewer than 99 simultaneously open ring closures");
        self.digit_in_use[d as usize] = true;
        d as u16
    }

    fn bond_symbol(&self, a: usize, b: usize, order: BondOrder) -> &'static str {
        let both_aromatic = self.g.atom(a).aromatic && self.g.atom(b).aromatic;
        match order {
            BondOrder::Single => {
                if both_aromatic {
                    "-"
                } else {
                    ""
                }
            }
            BondOrder::Aromatic => {
                if both_aromatic {
                    ""
                } else {
                    ":"
                }
            }
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
        }
    }

    fn emit(&mut self, u: usize, parent: Option<usize>) {
        if let Some(p) = parent {
            let order = self.g.bond_between(p, u).expect("tree edge");
            self.out.push_str(self.bond_symbol(p, u, order));
        }
        self.out.push_str(&atom_token(self.g, u));

        // Closing digits first (their numbers were fixed at the opening),
        // then fresh openings ordered by the rank of the closing partner.
        let closing: Vec<usize> = (0..self.closures.len())
            .filter(|&i| self.closures[i].close == u)
            .collect();
        for i in closing {
            let digit = self.closures[i].digit;
            debug_assert_ne!(digit, 0, "closure digit assigned at opening");
            push_digit(&mut self.out, digit);
            self.digit_in_use[digit as usize] = false;
        }
        let mut opening: Vec<usize> = (0..self.closures.len())
            .filter(|&i| self.closures[i].open == u)
            .collect();
        opening.sort_by_key(|&i| self.ranks[self.closures[i].close]);
        for i in opening {
            let digit = self.next_digit();
            self.closures[i].digit = digit;
            let (a, b, order) = (self.closures[i].open, self.closures[i].close, self.closures[i].order);
            self.out.push_str(self.bond_symbol(a, b, order));
            push_digit(&mut self.out, digit);
        }

        let kids = self.children[u].clone();
        for (pos, &child) in kids.iter().enumerate() {
            let last = pos + 1 == kids.len();
            if !last {
                self.out.push('(');
            }
            self.emit(child, Some(u));
            if !last {
                self.out.push(')');
            }
        }
    }
}

fn push_digit(out: &mut String, digit: u16) {
    if digit < 10 {
        out.push((b'0' + digit as u8) as char);
    } else {
        out.push('%');
        out.push((b'0' + (digit / 10) as u8) as char);
        out.push((b'0' + (digit % 10) as u8) as char);
    }
}

/// Hydrogen count a bare (bracket-free) atom token would imply, or `None`
/// when the atom cannot be written bare at all.
fn bare_hydrogens(g: &MolGraph, i: usize) -> Option<u8> {
    let atom = g.atom(i);
    if !atom.element.in_organic_subset() {
        return None;
    }
    let valences = atom.element.standard_valences()?;
    let ceil_sum = (g.bond_order_sum_twice(i) + 1) / 2;
    valences
        .iter()
        .copied()
        .filter(|&v| v >= ceil_sum)
        .min()
        .map(|v| (v - ceil_sum) as u8)
}

fn atom_token(g: &MolGraph, i: usize) -> String {
    let atom = g.atom(i);
    if atom.element.is_wildcard() {
        return "*".into();
    }
    let resolved_h = g.hydrogen_count(i);
    let plain = atom.charge == 0 && atom.isotope.is_none();
    if plain && bare_hydrogens(g, i) == Some(resolved_h) {
        let sym = atom.element.symbol();
        return if atom.aromatic {
            sym.to_lowercase()
        } else {
            sym.to_string()
        };
    }
    let mut t = String::from("[");
    if let Some(iso) = atom.isotope {
        t.push_str(&iso.to_string());
    }
    if atom.aromatic {
        t.push_str(&atom.element.symbol().to_lowercase());
    } else {
        t.push_str(atom.element.symbol());
    }
    match resolved_h {
        0 => {}
        1 => t.push('H'),
        k => {
            t.push('H');
            t.push_str(&k.to_string());
        }
    }
    match atom.charge {
        0 => {}
        1 => t.push('+'),
        -1 => t.push('-'),
        c if c > 0 => t.push_str(&format!("+{c}")),
        c => t.push_str(&format!("{c}")),
    }
    t.push(']');
    t
}
