//! Extended-connectivity fingerprints.
//!
//! Every atom starts from a hash of its local invariants and is then
//! rehashed `radius` times together with its neighbors' previous
//! identifiers. All identifiers from all iterations are deduplicated and
//! folded into a fixed-width vector by `id mod width`.
//!
//! Hash serialization (bit-exact, all multi-byte values little-endian):
//!
//! * iteration 0: `[atomic number u8][degree u8][formal charge i8][aromatic u8][h_count u32]`
//! * iteration r: `[r u8][previous id u64]` followed, for each neighbor in
//!   ascending `(bond code, neighbor previous id)` order, by
//!   `[bond code u8][neighbor previous id u64]`
//!
//! The hash is 64-bit FNV-1a.

use crate::molgraph::MolGraph;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub const DEFAULT_WIDTH: usize = 4096;
pub const DEFAULT_RADIUS: u32 = 2;
pub const MAX_RADIUS: u32 = 8;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EcfpError {
    #[error("ECFP width must be at least 2, got {0}")]
    WidthTooSmall(usize),
    #[error("ECFP radius must be at most {max}, got {0}", max = MAX_RADIUS)]
    RadiusTooLarge(u32),
    #[error("fingerprint widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("tanimoto similarity is defined on bit vectors, not counts")]
    CountedInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EcfpConfig {
    pub radius: u32,
    pub width: usize,
    #[serde(default)]
    pub counted: bool,
}

impl Default for EcfpConfig {
    fn default() -> Self {
        EcfpConfig {
            radius: DEFAULT_RADIUS,
            width: DEFAULT_WIDTH,
            counted: false,
        }
    }
}

impl EcfpConfig {
    pub fn new(radius: u32, width: usize) -> Result<Self, EcfpError> {
        let cfg = EcfpConfig {
            radius,
            width,
            counted: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn counted(mut self, counted: bool) -> Self {
        self.counted = counted;
        self
    }

    pub fn validate(&self) -> Result<(), EcfpError> {
        if self.width < 2 {
            return Err(EcfpError::WidthTooSmall(self.width));
        }
        if self.radius > MAX_RADIUS {
            return Err(EcfpError::RadiusTooLarge(self.radius));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcfpFingerprint {
    values: Vec<u32>,
    config: EcfpConfig,
}

impl EcfpFingerprint {
    pub fn config(&self) -> EcfpConfig {
        self.config
    }

    pub fn width(&self) -> usize {
        self.values.len()
    }

    /// Bits (0/1) or counts, depending on the config.
    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn set_bits(&self) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, _)| i)
    }

    pub fn count_ones(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from(v)).collect()
    }

    /// Lowercase hex of the bit vector. Bit `i` lives in byte `i / 8` at
    /// position `i % 8` (least significant first).
    pub fn to_hex(&self) -> String {
        let mut bytes = vec![0u8; self.values.len().div_ceil(8)];
        for i in self.set_bits() {
            bytes[i / 8] |= 1 << (i % 8);
        }
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn hamming(&self, other: &EcfpFingerprint) -> Result<usize, EcfpError> {
        if self.width() != other.width() {
            return Err(EcfpError::WidthMismatch(self.width(), other.width()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| (**a != 0) != (**b != 0))
            .count())
    }

    /// Builds a bit vector directly from set indices.
    pub fn from_bits(width: usize, bits: &[usize]) -> Self {
        let mut values = vec![0; width];
        for &b in bits {
            values[b] = 1;
        }
        EcfpFingerprint {
            values,
            config: EcfpConfig {
                radius: 0,
                width,
                counted: false,
            },
        }
    }
}

fn initial_identifier(g: &MolGraph, m: usize) -> u64 {
    let atom = &g.atoms()[m];
    let mut bytes = [0u8; 8];
    bytes[0] = atom.element.atomic_number();
    bytes[1] = g.degree(m) as u8;
    bytes[2] = atom.formal_charge as u8;
    bytes[3] = u8::from(atom.aromatic);
    bytes[4..8].copy_from_slice(&atom.h_count.to_le_bytes());
    fnv1a64(&bytes)
}

/// Per-iteration identifier lists: `result[r][m]` is `id_r(m)`.
pub fn atom_identifiers(g: &MolGraph, radius: u32) -> Vec<Vec<u64>> {
    let n = g.atom_count();
    let mut bond_code = vec![Vec::new(); n];
    for bond in g.bonds() {
        bond_code[bond.a].push((bond.b, bond.order.code()));
        bond_code[bond.b].push((bond.a, bond.order.code()));
    }

    let mut layers = Vec::with_capacity(radius as usize + 1);
    layers.push((0..n).map(|m| initial_identifier(g, m)).collect::<Vec<_>>());
    let mut buf = Vec::with_capacity(9 * 6);
    let mut env: Vec<(u8, u64)> = Vec::with_capacity(5);
    for r in 1..=radius {
        let prev = layers.last().unwrap();
        let next = (0..n)
            .map(|m| {
                env.clear();
                env.extend(bond_code[m].iter().map(|&(nb, code)| (code, prev[nb])));
                env.sort_unstable();
                buf.clear();
                buf.push(r as u8);
                buf.extend_from_slice(&prev[m].to_le_bytes());
                for &(code, id) in &env {
                    buf.push(code);
                    buf.extend_from_slice(&id.to_le_bytes());
                }
                fnv1a64(&buf)
            })
            .collect();
        layers.push(next);
    }
    layers
}

/// Distinct identifiers over iterations `0..=radius`, before folding.
pub fn identifier_set(g: &MolGraph, radius: u32) -> BTreeSet<u64> {
    atom_identifiers(g, radius).into_iter().flatten().collect()
}

pub fn ecfp(g: &MolGraph, cfg: &EcfpConfig) -> EcfpFingerprint {
    debug_assert!(cfg.validate().is_ok());
    let mut values = vec![0u32; cfg.width];
    for id in identifier_set(g, cfg.radius) {
        let slot = (id % cfg.width as u64) as usize;
        if cfg.counted {
            values[slot] += 1;
        } else {
            values[slot] = 1;
        }
    }
    EcfpFingerprint {
        values,
        config: *cfg,
    }
}

/// `|a ∧ b| / |a ∨ b|`, with two empty vectors counting as identical.
pub fn tanimoto(a: &EcfpFingerprint, b: &EcfpFingerprint) -> Result<f64, EcfpError> {
    if a.width() != b.width() {
        return Err(EcfpError::WidthMismatch(a.width(), b.width()));
    }
    if a.config.counted || b.config.counted {
        return Err(EcfpError::CountedInput);
    }
    let (mut both, mut either) = (0usize, 0usize);
    for (&x, &y) in a.values.iter().zip(&b.values) {
        let (x, y) = (x != 0, y != 0);
        both += usize::from(x && y);
        either += usize::from(x || y);
    }
    if either == 0 {
        return Ok(1.0);
    }
    Ok(both as f64 / either as f64)
}
