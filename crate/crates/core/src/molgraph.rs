//! Molecular graph model and the fixed atom-feature encoding.
//!
//! Compounds and binding pockets share one representation: an undirected,
//! labeled atom graph with at most five neighbors per atom. Coordinates are
//! never stored, so everything downstream is invariant to rigid motions.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use thiserror::Error;

/// Largest number of neighbors an atom may have.
pub const MAX_DEGREE: usize = 5;

/// Width of the default feature encoding: element (11) + degree 1..5 (5)
/// + clipped charge -2..2 (5) + aromatic flag (1).
pub const FEATURE_WIDTH: usize = 22;

const ELEMENT_BLOCK: usize = 0;
const DEGREE_BLOCK: usize = 11;
const CHARGE_BLOCK: usize = 16;
const AROMATIC_SLOT: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    C,
    N,
    O,
    S,
    P,
    F,
    Cl,
    Br,
    I,
    H,
    /// Anything outside the vocabulary.
    X,
}

impl Element {
    pub const ALL: [Element; 11] = [
        Element::C,
        Element::N,
        Element::O,
        Element::S,
        Element::P,
        Element::F,
        Element::Cl,
        Element::Br,
        Element::I,
        Element::H,
        Element::X,
    ];

    /// Maps a symbol onto the vocabulary. Unknown symbols become `X`.
    /// Matching is case-insensitive so that SDF-style `CL`/`BR` also resolve.
    pub fn from_symbol(symbol: &str) -> Element {
        match symbol.trim().to_ascii_lowercase().as_str() {
            "c" => Element::C,
            "n" => Element::N,
            "o" => Element::O,
            "s" => Element::S,
            "p" => Element::P,
            "f" => Element::F,
            "cl" => Element::Cl,
            "br" => Element::Br,
            "i" => Element::I,
            "h" | "d" | "t" => Element::H,
            _ => Element::X,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::S => "S",
            Element::P => "P",
            Element::F => "F",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
            Element::H => "H",
            Element::X => "X",
        }
    }

    /// Position in the one-hot element block.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Atomic number, with 0 standing in for `X`.
    pub fn atomic_number(self) -> u8 {
        match self {
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::S => 16,
            Element::P => 15,
            Element::F => 9,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
            Element::H => 1,
            Element::X => 0,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AtomRecord {
    pub element: Element,
    /// In `[-4, 4]`.
    pub formal_charge: i8,
    pub aromatic: bool,
    /// Attached hydrogens (explicit count).
    pub h_count: u32,
}

impl AtomRecord {
    pub fn new(element: Element) -> Self {
        AtomRecord {
            element,
            formal_charge: 0,
            aromatic: false,
            h_count: 0,
        }
    }

    pub fn with_charge(mut self, charge: i8) -> Self {
        self.formal_charge = charge;
        self
    }

    pub fn with_aromatic(mut self, aromatic: bool) -> Self {
        self.aromatic = aromatic;
        self
    }

    pub fn with_h_count(mut self, h: u32) -> Self {
        self.h_count = h;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Code used in hash serialization and by the MDL bond block.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<BondOrder> {
        match code {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            4 => Some(BondOrder::Aromatic),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BondOrder::Single => "single",
            BondOrder::Double => "double",
            BondOrder::Triple => "triple",
            BondOrder::Aromatic => "aromatic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        Bond { a, b, order }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MolKind {
    Compound,
    Pocket,
}

impl MolKind {
    pub fn name(self) -> &'static str {
        match self {
            MolKind::Compound => "compound",
            MolKind::Pocket => "pocket",
        }
    }
}

impl fmt::Display for MolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph has no atoms")]
    Empty,
    #[error("bond {bond} references atom {atom}, but the graph has {n_atoms} atoms")]
    DanglingBond {
        bond: usize,
        atom: usize,
        n_atoms: usize,
    },
    #[error("bond {bond} connects atom {atom} to itself")]
    SelfBond { bond: usize, atom: usize },
    #[error("bond {bond} duplicates an earlier bond between atoms {a} and {b}")]
    DuplicateBond { bond: usize, a: usize, b: usize },
    #[error("atom {atom} has degree {degree}, more than {max}", max = MAX_DEGREE)]
    DegreeExceeded { atom: usize, degree: usize },
    #[error("atom {atom} has formal charge {charge}, outside [-4, 4]")]
    ChargeOutOfRange { atom: usize, charge: i8 },
}

/// An immutable, validated molecular graph.
///
/// Construction checks every invariant, so any `MolGraph` in hand has a
/// non-empty atom list, in-range bonds, no self or duplicate bonds, and
/// degrees of at most [`MAX_DEGREE`].
#[derive(Debug, Clone, PartialEq)]
pub struct MolGraph {
    id: String,
    kind: MolKind,
    atoms: Vec<AtomRecord>,
    bonds: Vec<Bond>,
    neighbors: Vec<Vec<usize>>,
}

impl MolGraph {
    pub fn new(
        id: impl Into<String>,
        kind: MolKind,
        atoms: Vec<AtomRecord>,
        bonds: Vec<Bond>,
    ) -> Result<Self, GraphError> {
        if atoms.is_empty() {
            return Err(GraphError::Empty);
        }
        for (i, atom) in atoms.iter().enumerate() {
            if !(-4..=4).contains(&atom.formal_charge) {
                return Err(GraphError::ChargeOutOfRange {
                    atom: i,
                    charge: atom.formal_charge,
                });
            }
        }
        let n = atoms.len();
        let mut seen = HashSet::with_capacity(bonds.len());
        let mut neighbors = vec![Vec::new(); n];
        for (k, bond) in bonds.iter().enumerate() {
            for atom in [bond.a, bond.b] {
                if atom >= n {
                    return Err(GraphError::DanglingBond {
                        bond: k,
                        atom,
                        n_atoms: n,
                    });
                }
            }
            if bond.a == bond.b {
                return Err(GraphError::SelfBond {
                    bond: k,
                    atom: bond.a,
                });
            }
            let key = (bond.a.min(bond.b), bond.a.max(bond.b));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateBond {
                    bond: k,
                    a: key.0,
                    b: key.1,
                });
            }
            neighbors[bond.a].push(bond.b);
            neighbors[bond.b].push(bond.a);
        }
        for (atom, list) in neighbors.iter_mut().enumerate() {
            if list.len() > MAX_DEGREE {
                return Err(GraphError::DegreeExceeded {
                    atom,
                    degree: list.len(),
                });
            }
            list.sort_unstable();
        }
        Ok(MolGraph {
            id: id.into(),
            kind,
            atoms,
            bonds,
            neighbors,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> MolKind {
        self.kind
    }

    pub fn atoms(&self) -> &[AtomRecord] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.neighbors[atom].len()
    }

    /// Sorted neighbor lists, one per atom.
    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    /// Order of the bond between `a` and `b`, if bonded.
    pub fn bond_order(&self, a: usize, b: usize) -> Option<BondOrder> {
        self.bonds
            .iter()
            .find(|bd| (bd.a == a && bd.b == b) || (bd.a == b && bd.b == a))
            .map(|bd| bd.order)
    }

    /// Relabels atoms so that old atom `i` becomes atom `perm[i]`.
    ///
    /// Panics if `perm` is not a permutation of `0..atom_count()`.
    pub fn permuted(&self, perm: &[usize]) -> MolGraph {
        assert_eq!(perm.len(), self.atoms.len(), "permutation length");
        let mut atoms = vec![None; self.atoms.len()];
        for (old, &new) in perm.iter().enumerate() {
            assert!(atoms[new].is_none(), "not a permutation");
            atoms[new] = Some(self.atoms[old]);
        }
        let atoms: Vec<AtomRecord> = atoms.into_iter().map(|a| a.unwrap()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond::new(perm[b.a], perm[b.b], b.order))
            .collect();
        MolGraph::new(self.id.clone(), self.kind, atoms, bonds)
            .expect("permutation preserves graph invariants")
    }
}

/// Atom feature rows, one per atom, each exactly `width` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    width: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows(width: usize, rows: &[Vec<f64>]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * width);
        for row in rows {
            assert_eq!(row.len(), width, "feature row width");
            data.extend_from_slice(row);
        }
        FeatureMatrix { width, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.data[m * self.width..(m + 1) * self.width]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// One-hot atom features. Row `m` depends only on atom `m` and its degree.
pub fn encode_features(g: &MolGraph) -> FeatureMatrix {
    let mut data = vec![0.0; g.atom_count() * FEATURE_WIDTH];
    for (m, atom) in g.atoms().iter().enumerate() {
        let row = &mut data[m * FEATURE_WIDTH..(m + 1) * FEATURE_WIDTH];
        row[ELEMENT_BLOCK + atom.element.index()] = 1.0;
        let degree = g.degree(m);
        // degree 0 has no slot
        if degree > 0 {
            row[DEGREE_BLOCK + degree - 1] = 1.0;
        }
        let charge = atom.formal_charge.clamp(-2, 2);
        row[CHARGE_BLOCK + (charge + 2) as usize] = 1.0;
        if atom.aromatic {
            row[AROMATIC_SLOT] = 1.0;
        }
    }
    FeatureMatrix {
        width: FEATURE_WIDTH,
        data,
    }
}

/// Sorted neighbor index lists for every atom.
pub fn adjacency(g: &MolGraph) -> Vec<Vec<usize>> {
    g.adjacency().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn carbon() -> AtomRecord {
        AtomRecord::new(Element::C)
    }

    fn methane() -> MolGraph {
        let mut atoms = vec![carbon()];
        atoms.extend(std::iter::repeat_n(AtomRecord::new(Element::H), 4));
        let bonds = (1..=4)
            .map(|h| Bond::new(0, h, BondOrder::Single))
            .collect();
        MolGraph::new("methane", MolKind::Compound, atoms, bonds).unwrap()
    }

    #[test]
    fn carbon_degree_four_row() {
        let g = methane();
        let f = encode_features(&g);
        let mut expected = vec![0.0; FEATURE_WIDTH];
        expected[0] = 1.0; // C
        expected[DEGREE_BLOCK + 3] = 1.0; // degree 4
        expected[CHARGE_BLOCK + 2] = 1.0; // charge 0
        assert_eq!(f.row(0), expected.as_slice());
    }

    #[test]
    fn methane_hydrogens_have_degree_one() {
        let g = methane();
        let f = encode_features(&g);
        for h in 1..=4 {
            let row = f.row(h);
            assert_eq!(row[Element::H.index()], 1.0);
            assert_eq!(row[DEGREE_BLOCK], 1.0);
            assert_eq!(row[DEGREE_BLOCK + 1..CHARGE_BLOCK].iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn isolated_atom_has_empty_degree_block() {
        let g = MolGraph::new("ion", MolKind::Pocket, vec![carbon()], vec![]).unwrap();
        let f = encode_features(&g);
        assert!(f.row(0)[DEGREE_BLOCK..CHARGE_BLOCK]
            .iter()
            .all(|&x| x == 0.0));
        assert_eq!(f.row(0).iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn charge_is_clipped() {
        let atoms = vec![
            AtomRecord::new(Element::N).with_charge(4),
            AtomRecord::new(Element::O).with_charge(-3),
        ];
        let g = MolGraph::new("q", MolKind::Compound, atoms, vec![]).unwrap();
        let f = encode_features(&g);
        assert_eq!(f.row(0)[CHARGE_BLOCK + 4], 1.0);
        assert_eq!(f.row(1)[CHARGE_BLOCK], 1.0);
    }

    #[test]
    fn adjacency_examples() {
        let g = MolGraph::new(
            "pair",
            MolKind::Compound,
            vec![carbon(), carbon()],
            vec![Bond::new(0, 1, BondOrder::Single)],
        )
        .unwrap();
        assert_eq!(adjacency(&g), vec![vec![1], vec![0]]);

        let tri = MolGraph::new(
            "tri",
            MolKind::Compound,
            vec![carbon(); 3],
            vec![
                Bond::new(1, 2, BondOrder::Single),
                Bond::new(0, 2, BondOrder::Single),
                Bond::new(0, 1, BondOrder::Single),
            ],
        )
        .unwrap();
        assert_eq!(adjacency(&tri), vec![vec![1, 2], vec![0, 2], vec![0, 1]]);
    }

    #[test]
    fn star_with_six_leaves_is_rejected() {
        let atoms = vec![carbon(); 7];
        let bonds = (1..=6)
            .map(|i| Bond::new(0, i, BondOrder::Single))
            .collect();
        let err = MolGraph::new("star", MolKind::Compound, atoms, bonds).unwrap_err();
        assert_eq!(err, GraphError::DegreeExceeded { atom: 0, degree: 6 });
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            MolGraph::new("e", MolKind::Compound, vec![], vec![]).unwrap_err(),
            GraphError::Empty
        );
        let two = vec![carbon(); 2];
        assert!(matches!(
            MolGraph::new(
                "d",
                MolKind::Compound,
                two.clone(),
                vec![Bond::new(0, 5, BondOrder::Single)]
            ),
            Err(GraphError::DanglingBond { atom: 5, .. })
        ));
        assert!(matches!(
            MolGraph::new(
                "s",
                MolKind::Compound,
                two.clone(),
                vec![Bond::new(1, 1, BondOrder::Single)]
            ),
            Err(GraphError::SelfBond { .. })
        ));
        assert!(matches!(
            MolGraph::new(
                "dup",
                MolKind::Compound,
                two,
                vec![
                    Bond::new(0, 1, BondOrder::Single),
                    Bond::new(1, 0, BondOrder::Double)
                ]
            ),
            Err(GraphError::DuplicateBond { .. })
        ));
        assert!(matches!(
            MolGraph::new(
                "c",
                MolKind::Compound,
                vec![carbon().with_charge(5)],
                vec![]
            ),
            Err(GraphError::ChargeOutOfRange { .. })
        ));
    }

    #[test]
    fn unknown_symbols_map_to_x() {
        assert_eq!(Element::from_symbol("Fe"), Element::X);
        assert_eq!(Element::from_symbol("CL"), Element::Cl);
        assert_eq!(Element::from_symbol(" Br"), Element::Br);
    }
}
