//! Circular (Morgan-style) fingerprints and Tanimoto similarity.

use crate::error::FingerprintError;
use crate::graph::MolGraph;

pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_WIDTH: usize = 2048;

/// Fixed-width bitset produced by iterated neighborhood hashing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    bits: Vec<u64>,
    width: usize,
    radius: u32,
}

impl Fingerprint {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.iter().map(|w| w.count_ones()).sum()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn set_bit(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    /// Hex encoding, width/4 characters: the first character carries bits
    /// 0..4 with bit 0 in the most significant position.
    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(self.width / 4);
        for group in 0..self.width / 4 {
            let mut nibble = 0u8;
            for k in 0..4 {
                if self.bit(group * 4 + k) {
                    nibble |= 8 >> k;
                }
            }
            out.push(char::from_digit(u32::from(nibble), 16).expect("nibble < 16"));
        }
        out
    }
}

/// Stable 64-bit mixer (splitmix64 finalizer); the fingerprint must not
/// depend on the platform or the standard library's hasher seed.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn combine(seed: u64, value: u64) -> u64 {
    mix(seed ^ mix(value))
}

/// Iterated neighborhood hashing: every atom contributes one identifier per
/// round (round 0 = the atom's own invariant), and every identifier sets one
/// bit. Widening the radius therefore never clears bits, so the bit count is
/// non-decreasing in the radius.
pub fn morgan_fingerprint(g: &MolGraph, radius: u32, width: usize) -> Fingerprint {
    assert!(width.is_power_of_two() && width >= 64, "width must be a power of two ≥ 64");
    let mut fp = Fingerprint {
        bits: vec![0; width / 64],
        width,
        radius,
    };
    let n = g.atom_count();
    if n == 0 {
        return fp;
    }
    let in_ring = g.ring_membership();
    let mut ids: Vec<u64> = (0..n)
        .map(|i| {
            let a = g.atom(i);
            let mut h = mix(0x6d6f7267616e00);
            h = combine(h, u64::from(a.element.0));
            h = combine(h, a.charge as u64);
            h = combine(h, g.degree(i) as u64);
            h = combine(h, u64::from(g.hydrogen_count(i)));
            h = combine(h, u64::from(a.aromatic));
            h = combine(h, u64::from(in_ring[i]));
            h
        })
        .collect();
    for id in &ids {
        fp.set_bit((id & (width as u64 - 1)) as usize);
    }
    for round in 1..=radius {
        let mut next = ids.clone();
        for i in 0..n {
            let mut env: Vec<u64> = g
                .neighbors(i)
                .map(|(j, order)| combine(u64::from(order.code()), ids[j]))
                .collect();
            env.sort_unstable();
            let mut h = combine(u64::from(round), ids[i]);
            for e in env {
                h = combine(h, e);
            }
            next[i] = h;
            fp.set_bit((h & (width as u64 - 1)) as usize);
        }
        ids = next;
    }
    fp
}

/// |a ∧ b| / |a ∨ b|, with two empty fingerprints counting as identical.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.width != b.width {
        return Err(FingerprintError::WidthMismatch(a.width, b.width));
    }
    if a.radius != b.radius {
        return Err(FingerprintError::RadiusMismatch(a.radius, b.radius));
    }
    let mut inter = 0u32;
    let mut union = 0u32;
    for (x, y) in a.bits.iter().zip(&b.bits) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(f64::from(inter) / f64::from(union))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse::parse_smiles;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn invariant_under_atom_reordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for smiles in ["CC(C)(C)CO", "c1ccc(O)cc1", "CC(N)C(=O)O", "C1CC1CBr"] {
            let g = parse_smiles(smiles).unwrap();
            let reference = morgan_fingerprint(&g, DEFAULT_RADIUS, DEFAULT_WIDTH);
            for _ in 0..10 {
                let mut perm: Vec<usize> = (0..g.atom_count()).collect();
                perm.shuffle(&mut rng);
                let shuffled = morgan_fingerprint(&g.permuted(&perm), DEFAULT_RADIUS, DEFAULT_WIDTH);
                assert_eq!(reference, shuffled, "{smiles}");
            }
        }
    }

    #[test]
    fn different_molecules_differ_at_radius_zero() {
        let a = morgan_fingerprint(&parse_smiles("CCO").unwrap(), 0, DEFAULT_WIDTH);
        let b = morgan_fingerprint(&parse_smiles("CCN").unwrap(), 0, DEFAULT_WIDTH);
        assert_ne!(a, b);
    }

    #[test]
    fn bit_count_is_monotone_in_radius() {
        for smiles in ["CC(C)(C)CO", "c1ccc(O)cc1", "CC(N)C(=O)O", "CCCCCCCC"] {
            let g = parse_smiles(smiles).unwrap();
            let counts: Vec<u32> = (0..=2)
                .map(|r| morgan_fingerprint(&g, r, DEFAULT_WIDTH).count_ones())
                .collect();
            assert!(counts[0] <= counts[1] && counts[1] <= counts[2], "{smiles}: {counts:?}");
        }
    }

    #[test]
    fn tanimoto_basics() {
        let f = morgan_fingerprint(&parse_smiles("CCO").unwrap(), 2, DEFAULT_WIDTH);
        assert_eq!(tanimoto(&f, &f).unwrap(), 1.0);

        let empty_a = morgan_fingerprint(&MolGraph::new(), 2, DEFAULT_WIDTH);
        let empty_b = morgan_fingerprint(&MolGraph::new(), 2, DEFAULT_WIDTH);
        assert_eq!(tanimoto(&empty_a, &empty_b).unwrap(), 1.0);

        let mut a = Fingerprint { bits: vec![0; DEFAULT_WIDTH / 64], width: DEFAULT_WIDTH, radius: 2 };
        let mut b = a.clone();
        a.set_bit(0);
        a.set_bit(1);
        b.set_bit(0);
        b.set_bit(2);
        // a = 1100…, b = 1010…: one shared bit of three set overall.
        assert!((tanimoto(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-12);

        let mut c = Fingerprint { bits: vec![0; DEFAULT_WIDTH / 64], width: DEFAULT_WIDTH, radius: 2 };
        c.set_bit(7);
        let mut d = c.clone();
        d.bits[0] = 0;
        d.set_bit(9);
        assert_eq!(tanimoto(&c, &d).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_parameters_are_errors() {
        let g = parse_smiles("CCO").unwrap();
        let a = morgan_fingerprint(&g, 2, 2048);
        let b = morgan_fingerprint(&g, 2, 1024);
        let c = morgan_fingerprint(&g, 1, 2048);
        assert!(matches!(tanimoto(&a, &b), Err(FingerprintError::WidthMismatch(..))));
        assert!(matches!(tanimoto(&a, &c), Err(FingerprintError::RadiusMismatch(..))));
    }

    #[test]
    fn hex_puts_bit_zero_first() {
        let mut f = Fingerprint { bits: vec![0; 2], width: 128, radius: 0 };
        f.set_bit(0);
        f.set_bit(5);
        let hex = f.to_hex();
        assert_eq!(hex.len(), 32);
        // Bit 0 → first nibble's MSB (8); bit 5 → second nibble's value 4.
        assert!(hex.starts_with("84"));
        assert!(hex[2..].chars().all(|c| c == '0'));
    }

    #[test]
    fn similar_molecules_score_higher_than_dissimilar() {
        let base = morgan_fingerprint(&parse_smiles("CCCCCO").unwrap(), 2, DEFAULT_WIDTH);
        let close = morgan_fingerprint(&parse_smiles("CCCCCN").unwrap(), 2, DEFAULT_WIDTH);
        let far = morgan_fingerprint(&parse_smiles("c1ccccc1Br").unwrap(), 2, DEFAULT_WIDTH);
        let s_close = tanimoto(&base, &close).unwrap();
        let s_far = tanimoto(&base, &far).unwrap();
        assert!(s_close > s_far, "close {s_close} vs far {s_far}");
    }
}
