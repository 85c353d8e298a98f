//! Seeded synthetic screening benchmarks with a planted binding rule.
//!
//! Every pocket carries a motif: a short path of distinct "signal" atoms
//! (N, O, S, P, F, Cl, Br, I) hung off a carbon scaffold. A compound binds a
//! pocket iff it contains the pocket's *complementary* motif as a path,
//! where the complement swaps N↔S, O↔P, F↔Br and Cl↔I element-wise. The
//! motif elements are kept in sorted order, so complementarity is a
//! property of the pair, never of the compound alone.
//!
//! Two decoy regimes are available:
//!
//! * `PerTarget`: decoys for one target are ordinary library compounds,
//!   including actives of other targets. A compound-only classifier has
//!   nothing to learn that transfers to new targets.
//! * `SharedPool`: all decoys come from one pool whose compounds carry no
//!   signal atoms at all, so actives are separable by composition alone.

use crate::ingest::{DatasetManifest, PairSample};
use crate::molgraph::{AtomRecord, Bond, BondOrder, Element, MolGraph, MolKind, MAX_DEGREE};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

pub const SIGNAL_ELEMENTS: [Element; 8] = [
    Element::N,
    Element::O,
    Element::S,
    Element::P,
    Element::F,
    Element::Cl,
    Element::Br,
    Element::I,
];

/// Scaffold atoms keep one free valence slot for attachments.
const SCAFFOLD_MAX_DEGREE: usize = 4;

/// Pocket scaffold atoms per motif copy.
const POCKET_ATOMS_PER_SITE: usize = 2;

pub fn complement(e: Element) -> Element {
    match e {
        Element::N => Element::S,
        Element::S => Element::N,
        Element::O => Element::P,
        Element::P => Element::O,
        Element::F => Element::Br,
        Element::Br => Element::F,
        Element::Cl => Element::I,
        Element::I => Element::Cl,
        other => other,
    }
}

/// Sorted complement of a motif.
pub fn complement_motif(motif: &[Element]) -> Vec<Element> {
    let mut m: Vec<Element> = motif.iter().map(|&e| complement(e)).collect();
    m.sort();
    m
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible synthetic spec: {0}")]
    SpecInfeasible(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoySharing {
    PerTarget,
    SharedPool,
}

impl FromStr for DecoySharing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-target" => Ok(DecoySharing::PerTarget),
            "shared-pool" => Ok(DecoySharing::SharedPool),
            other => Err(format!("unknown decoy sharing mode '{other}'")),
        }
    }
}

impl fmt::Display for DecoySharing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoySharing::PerTarget => "per-target",
            DecoySharing::SharedPool => "shared-pool",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_targets: usize,
    /// Total library size, actives included.
    pub n_compounds: usize,
    pub actives_per_target: usize,
    /// Decoys in each target's evaluation set; `None` takes up to 950.
    pub decoys_per_target: Option<usize>,
    pub motif_length: usize,
    pub decoy_sharing: DecoySharing,
    /// The last `heldout_targets` targets reuse motifs of the others, so a
    /// model trained on the rest has seen their binding type but not their
    /// pockets.
    pub heldout_targets: usize,
    /// Distinct binding motifs shared out round-robin over the targets;
    /// `None` gives every training target its own motif where possible.
    pub motif_types: Option<usize>,
    /// Inclusive atom-count range for compounds (motif included).
    pub compound_atoms: (usize, usize),
    /// Inclusive atom-count range for pocket scaffolds.
    pub pocket_atoms: (usize, usize),
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_targets: 12,
            n_compounds: 2000,
            actives_per_target: 50,
            decoys_per_target: None,
            motif_length: 1,
            decoy_sharing: DecoySharing::PerTarget,
            heldout_targets: 0,
            motif_types: None,
            compound_atoms: (12, 24),
            pocket_atoms: (24, 36),
            seed: 0,
        }
    }
}

const DEFAULT_DECOYS: usize = 950;

impl SynthSpec {
    fn check(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::SpecInfeasible(m));
        if self.n_targets == 0 || self.actives_per_target == 0 || self.motif_length == 0 {
            return fail("targets, actives per target and motif length must be positive".into());
        }
        if self.motif_length > SIGNAL_ELEMENTS.len() {
            return fail(format!(
                "motif length {} exceeds the {} distinct signal elements",
                self.motif_length,
                SIGNAL_ELEMENTS.len()
            ));
        }
        let (lo, hi) = self.compound_atoms;
        if lo > hi || self.pocket_atoms.0 > self.pocket_atoms.1 || self.pocket_atoms.0 == 0 {
            return fail("atom-count ranges must be non-empty".into());
        }
        if self.motif_length >= lo {
            return fail(format!(
                "motif length {} does not fit in compounds of {lo} atoms",
                self.motif_length
            ));
        }
        if self.motif_types == Some(0) {
            return fail("motif_types must be positive".into());
        }
        if self.heldout_targets >= self.n_targets {
            return fail(format!(
                "{} held-out targets leave none of {} for training",
                self.heldout_targets, self.n_targets
            ));
        }
        Ok(())
    }

    /// Designated held-out target ids.
    pub fn heldout_ids(&self) -> Vec<String> {
        (self.n_targets - self.heldout_targets..self.n_targets)
            .map(target_id)
            .collect()
    }
}

pub fn target_id(t: usize) -> String {
    format!("tgt{t:03}")
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub compounds: Vec<MolGraph>,
    pub pockets: Vec<MolGraph>,
    /// Pocket motif per target (sorted elements).
    pub motifs: Vec<Vec<Element>>,
    pub positives: Vec<(String, String)>,
    pub eval_pairs: Vec<PairSample>,
}

impl SynthDataset {
    pub fn manifest(&self, compounds: &str, pockets: &str) -> DatasetManifest {
        DatasetManifest {
            compounds: compounds.into(),
            pockets: pockets.into(),
            positives: self.positives.clone(),
            eval_pairs: Some(self.eval_pairs.clone()),
        }
    }

    pub fn graphs(&self) -> Vec<MolGraph> {
        self.compounds
            .iter()
            .chain(&self.pockets)
            .cloned()
            .collect()
    }

    /// Writes `compounds.jsonl`, `pockets.jsonl` and `manifest.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), SynthError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| SynthError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        for (name, graphs) in [
            ("compounds.jsonl", &self.compounds),
            ("pockets.jsonl", &self.pockets),
        ] {
            let path = dir.join(name);
            let mut buf = Vec::new();
            crate::ingest::write_graph_jsonl(&mut buf, graphs.iter()).map_err(io(&path))?;
            std::fs::write(&path, buf).map_err(io(&path))?;
        }
        let manifest = self.manifest("compounds.jsonl", "pockets.jsonl");
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string(&manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(io(&path))?;
        Ok(())
    }
}

/// What a library compound carries on its scaffold.
#[derive(Debug, Clone, PartialEq)]
enum Decoration {
    Motif(Vec<Element>),
    /// Signal-free chain used by the shared decoy pool.
    Inert,
}

fn all_motifs(length: usize) -> Vec<Vec<Element>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(length);
    fn rec(start: usize, length: usize, current: &mut Vec<Element>, out: &mut Vec<Vec<Element>>) {
        if current.len() == length {
            let mut m = current.clone();
            m.sort();
            out.push(m);
            return;
        }
        for (i, &e) in SIGNAL_ELEMENTS.iter().enumerate().skip(start) {
            current.push(e);
            rec(i + 1, length, current, out);
            current.pop();
        }
    }
    rec(0, length, &mut current, &mut out);
    out
}

/// Random carbon scaffold: a random tree plus occasional ring closures.
fn scaffold<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    atoms: &mut Vec<AtomRecord>,
    bonds: &mut Vec<Bond>,
) {
    let base = atoms.len();
    let mut degree = vec![0usize; n];
    for i in 0..n {
        atoms.push(
            AtomRecord::new(Element::C)
                .with_h_count(rng.gen_range(0..=2))
                .with_aromatic(rng.gen_bool(0.2)),
        );
        if i == 0 {
            continue;
        }
        let open: Vec<usize> = (0..i)
            .filter(|&j| degree[j] < SCAFFOLD_MAX_DEGREE - 1)
            .collect();
        let parent = *open.choose(rng).unwrap_or(&(i - 1));
        let order = if rng.gen_bool(0.15) {
            BondOrder::Double
        } else {
            BondOrder::Single
        };
        bonds.push(Bond::new(base + parent, base + i, order));
        degree[parent] += 1;
        degree[i] += 1;
    }
    let closures = if n >= 6 { rng.gen_range(0..=2) } else { 0 };
    for _ in 0..closures {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let exists = bonds.iter().any(|bd| {
            (bd.a == base + a && bd.b == base + b) || (bd.a == base + b && bd.b == base + a)
        });
        if a != b
            && !exists
            && degree[a] < SCAFFOLD_MAX_DEGREE - 1
            && degree[b] < SCAFFOLD_MAX_DEGREE - 1
        {
            bonds.push(Bond::new(base + a, base + b, BondOrder::Single));
            degree[a] += 1;
            degree[b] += 1;
        }
    }
}

/// Attaches a chain of `elements` to a random scaffold atom with free valence.
fn attach_chain<R: Rng + ?Sized>(
    rng: &mut R,
    scaffold_atoms: usize,
    chain: &[AtomRecord],
    atoms: &mut Vec<AtomRecord>,
    bonds: &mut Vec<Bond>,
) {
    let mut degree = vec![0usize; atoms.len()];
    for b in bonds.iter() {
        degree[b.a] += 1;
        degree[b.b] += 1;
    }
    let open: Vec<usize> = (0..scaffold_atoms)
        .filter(|&i| degree[i] < SCAFFOLD_MAX_DEGREE)
        .collect();
    let anchor = *open.choose(rng).expect("scaffold atoms keep free valence");
    let mut prev = anchor;
    for atom in chain {
        atoms.push(*atom);
        let idx = atoms.len() - 1;
        bonds.push(Bond::new(prev, idx, BondOrder::Single));
        prev = idx;
    }
}

fn build_compound<R: Rng + ?Sized>(
    rng: &mut R,
    id: String,
    size: usize,
    decoration: &Decoration,
) -> MolGraph {
    let chain: Vec<AtomRecord> = match decoration {
        Decoration::Motif(m) => m.iter().map(|&e| AtomRecord::new(e)).collect(),
        Decoration::Inert => (0..rng.gen_range(1..=3))
            .map(|_| AtomRecord::new(Element::X))
            .collect(),
    };
    let mut atoms = Vec::with_capacity(size);
    let mut bonds = Vec::with_capacity(size + 2);
    let scaffold_atoms = size.saturating_sub(chain.len()).max(1);
    scaffold(rng, scaffold_atoms, &mut atoms, &mut bonds);
    attach_chain(rng, scaffold_atoms, &chain, &mut atoms, &mut bonds);
    MolGraph::new(id, MolKind::Compound, atoms, bonds).expect("generator respects graph invariants")
}

fn build_pocket<R: Rng + ?Sized>(
    rng: &mut R,
    id: String,
    size: usize,
    motif: &[Element],
) -> MolGraph {
    let mut atoms = Vec::with_capacity(size + motif.len() + 1);
    let mut bonds = Vec::new();
    scaffold(rng, size, &mut atoms, &mut bonds);
    let chain: Vec<AtomRecord> = motif.iter().map(|&e| AtomRecord::new(e)).collect();
    // a pocket presents its motif at several sites
    for _ in 0..(size / POCKET_ATOMS_PER_SITE).max(1) {
        attach_chain(rng, size, &chain, &mut atoms, &mut bonds);
    }
    if rng.gen_bool(0.5) {
        // isolated ion
        atoms.push(AtomRecord::new(Element::X).with_charge(2));
    }
    MolGraph::new(id, MolKind::Pocket, atoms, bonds).expect("generator respects graph invariants")
}

/// Motif per target. Targets take motif types round-robin, so every type
/// used by a held-out target is also carried by a training target.
fn assign_motifs(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<Element>> {
    let mut pool = all_motifs(spec.motif_length);
    pool.shuffle(rng);
    let n_train = spec.n_targets - spec.heldout_targets;
    let types = spec
        .motif_types
        .unwrap_or(n_train)
        .min(n_train)
        .min(pool.len());
    (0..spec.n_targets)
        .map(|t| pool[t % types].clone())
        .collect()
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<SynthDataset, SynthError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let target_motifs = assign_motifs(spec, &mut rng);
    let mut active_classes: Vec<Vec<Element>> =
        target_motifs.iter().map(|m| complement_motif(m)).collect();
    active_classes.sort();
    active_classes.dedup();

    // every active class gets enough members; the rest of the library is
    // uniform over the active classes (or inert in the shared-pool regime),
    // so no class is active more often than another
    let seeded = active_classes.len() * spec.actives_per_target;
    if spec.n_compounds < seeded {
        return Err(SynthError::SpecInfeasible(format!(
            "{} compounds cannot hold {} actives for {} binding types",
            spec.n_compounds,
            seeded,
            active_classes.len()
        )));
    }
    let mut library: Vec<Decoration> = Vec::with_capacity(spec.n_compounds);
    for class in &active_classes {
        library.extend((0..spec.actives_per_target).map(|_| Decoration::Motif(class.clone())));
    }
    while library.len() < spec.n_compounds {
        library.push(match spec.decoy_sharing {
            DecoySharing::PerTarget => {
                Decoration::Motif(active_classes.choose(&mut rng).unwrap().clone())
            }
            DecoySharing::SharedPool => Decoration::Inert,
        });
    }
    library.shuffle(&mut rng);

    let width = spec.n_compounds.saturating_sub(1).to_string().len().max(4);
    let compounds: Vec<MolGraph> = library
        .iter()
        .enumerate()
        .map(|(i, deco)| {
            let size = rng.gen_range(spec.compound_atoms.0..=spec.compound_atoms.1);
            build_compound(&mut rng, format!("cmp{i:0width$}"), size, deco)
        })
        .collect();
    let pockets: Vec<MolGraph> = target_motifs
        .iter()
        .enumerate()
        .map(|(t, m)| {
            let size = rng.gen_range(spec.pocket_atoms.0..=spec.pocket_atoms.1);
            build_pocket(&mut rng, target_id(t), size, m)
        })
        .collect();

    let mut positives = Vec::new();
    let mut eval_pairs = Vec::new();
    for (t, pocket) in pockets.iter().enumerate() {
        let binds = Decoration::Motif(complement_motif(&target_motifs[t]));
        let mut actives: Vec<usize> = (0..library.len())
            .filter(|&i| library[i] == binds)
            .collect();
        let mut decoys: Vec<usize> = (0..library.len())
            .filter(|&i| match spec.decoy_sharing {
                DecoySharing::PerTarget => library[i] != binds,
                DecoySharing::SharedPool => library[i] == Decoration::Inert,
            })
            .collect();
        let n_decoys = spec
            .decoys_per_target
            .unwrap_or(DEFAULT_DECOYS.min(decoys.len()));
        if n_decoys > decoys.len() {
            return Err(SynthError::SpecInfeasible(format!(
                "{n_decoys} decoys per target requested, {} available for {}",
                decoys.len(),
                pocket.id()
            )));
        }
        actives.shuffle(&mut rng);
        actives.truncate(spec.actives_per_target);
        decoys.shuffle(&mut rng);
        decoys.truncate(n_decoys);
        let mut labeled: Vec<(usize, u8)> = actives
            .iter()
            .map(|&i| (i, 1))
            .chain(decoys.iter().map(|&i| (i, 0)))
            .collect();
        labeled.sort_unstable();
        for &(i, label) in &labeled {
            if label == 1 {
                positives.push((compounds[i].id().to_string(), pocket.id().to_string()));
            }
            eval_pairs.push(PairSample {
                ligand_id: compounds[i].id().to_string(),
                pocket_id: pocket.id().to_string(),
                label,
            });
        }
    }

    Ok(SynthDataset {
        compounds,
        pockets,
        motifs: target_motifs,
        positives,
        eval_pairs,
    })
}

/// True iff `g` has a simple path whose elements read `motif` in either direction.
pub fn contains_motif(g: &MolGraph, motif: &[Element]) -> bool {
    if motif.is_empty() {
        return true;
    }
    let reversed: Vec<Element> = motif.iter().rev().copied().collect();
    fn extend(g: &MolGraph, path: &mut Vec<usize>, motif: &[Element]) -> bool {
        if path.len() == motif.len() {
            return true;
        }
        let last = *path.last().unwrap();
        for &nb in &g.adjacency()[last] {
            if !path.contains(&nb) && g.atoms()[nb].element == motif[path.len()] {
                path.push(nb);
                if extend(g, path, motif) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    [motif, reversed.as_slice()].iter().any(|m| {
        (0..g.atom_count())
            .any(|start| g.atoms()[start].element == m[0] && extend(g, &mut vec![start], m))
    })
}

/// Arbitrary valid graph over the whole element vocabulary, for property
/// tests and gradient checks.
pub fn random_molecule<R: Rng + ?Sized>(
    rng: &mut R,
    id: impl Into<String>,
    n_atoms: usize,
    kind: MolKind,
) -> MolGraph {
    let n = n_atoms.max(1);
    let mut atoms = Vec::with_capacity(n);
    let mut bonds = Vec::new();
    let mut degree = vec![0usize; n];
    let orders = [
        BondOrder::Single,
        BondOrder::Double,
        BondOrder::Triple,
        BondOrder::Aromatic,
    ];
    for i in 0..n {
        atoms.push(AtomRecord {
            element: *Element::ALL.choose(rng).unwrap(),
            formal_charge: rng.gen_range(-2..=2),
            aromatic: rng.gen_bool(0.3),
            h_count: rng.gen_range(0..=3),
        });
        if i == 0 {
            continue;
        }
        let open: Vec<usize> = (0..i).filter(|&j| degree[j] < MAX_DEGREE).collect();
        if let Some(&parent) = open.choose(rng) {
            bonds.push(Bond::new(parent, i, *orders.choose(rng).unwrap()));
            degree[parent] += 1;
            degree[i] += 1;
        }
    }
    for _ in 0..rng.gen_range(0..=n / 3) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let exists = bonds
            .iter()
            .any(|bd| (bd.a == a && bd.b == b) || (bd.a == b && bd.b == a));
        if a != b && !exists && degree[a] < MAX_DEGREE && degree[b] < MAX_DEGREE {
            bonds.push(Bond::new(a, b, *orders.choose(rng).unwrap()));
            degree[a] += 1;
            degree[b] += 1;
        }
    }
    MolGraph::new(id, kind, atoms, bonds).expect("random molecule respects invariants")
}
