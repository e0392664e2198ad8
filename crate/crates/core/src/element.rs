//! Periodic-table symbols and the valence model used for implicit hydrogens.

/// Chemical element, stored by atomic number. Atomic number 0 is the
/// attachment wildcard used when serializing branch fragments; it is never
/// produced by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct Element(pub u8);

pub const WILDCARD: Element = Element(0);

const SYMBOLS: [&str; 119] = [
    "*", "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S",
    "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge",
    "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd",
    "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg",
    "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
];

impl Element {
    pub fn from_symbol(sym: &str) -> Option<Element> {
        SYMBOLS
            .iter()
            .position(|s| *s == sym)
            .map(|n| Element(n as u8))
    }

    pub fn symbol(self) -> &'static str {
        SYMBOLS.get(self.0 as usize).copied().unwrap_or("?")
    }

    pub fn is_wildcard(self) -> bool {
        self.0 == 0
    }

    /// Elements writable without brackets when uncharged and isotope-free.
    pub fn in_organic_subset(self) -> bool {
        matches!(self.symbol(), "B" | "C" | "N" | "O" | "P" | "S" | "F" | "Cl" | "Br" | "I")
    }

    /// Elements that may carry the aromatic flag.
    pub fn aromatizable(self) -> bool {
        matches!(self.symbol(), "B" | "C" | "N" | "O" | "P" | "S")
    }

    /// Standard valence alternatives for the implicit-hydrogen model, in
    /// ascending order. `None` means the element has no fixed valence here
    /// and is exempt from valence checking.
    pub fn standard_valences(self) -> Option<&'static [i32]> {
        match self.symbol() {
            "B" => Some(&[3]),
            "C" => Some(&[4]),
            "N" => Some(&[3]),
            "O" => Some(&[2]),
            "P" => Some(&[3, 5]),
            "S" => Some(&[2, 4, 6]),
            "F" | "Cl" | "Br" | "I" => Some(&[1]),
            _ => None,
        }
    }

    /// Valence alternatives adjusted for formal charge. Boron gains capacity
    /// with negative charge, carbon loses capacity with either sign, and the
    /// electronegative block shifts with the charge sign.
    pub fn effective_valences(self, charge: i32) -> Option<Vec<i32>> {
        let base = self.standard_valences()?;
        let adjusted: Vec<i32> = base
            .iter()
            .map(|&v| match self.symbol() {
                "B" => v - charge,
                "C" => v - charge.abs(),
                _ => v + charge,
            })
            .map(|v| v.max(0))
            .collect();
        Some(adjusted)
    }
}
