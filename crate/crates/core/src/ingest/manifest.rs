//! Dataset manifests.
//!
//! ```text
//! {"compounds": "compounds.jsonl", "pockets": "pockets.jsonl",
//!  "positives": [["lig1", "poc1"]],
//!  "eval_pairs": [["lig1", "poc1", 1], ["lig2", "poc1", 0]]}
//! ```
//!
//! Relative paths resolve against the manifest's directory. Only observed
//! positives are listed for training; negatives are drawn at training time.

use super::{read_file, read_graphs, IngestError};
use crate::molgraph::{MolGraph, MolKind};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(String, String, u8)", into = "(String, String, u8)")]
pub struct PairSample {
    pub ligand_id: String,
    pub pocket_id: String,
    pub label: u8,
}

impl From<(String, String, u8)> for PairSample {
    fn from((ligand_id, pocket_id, label): (String, String, u8)) -> Self {
        PairSample {
            ligand_id,
            pocket_id,
            label,
        }
    }
}

impl From<PairSample> for (String, String, u8) {
    fn from(p: PairSample) -> Self {
        (p.ligand_id, p.pocket_id, p.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub compounds: PathBuf,
    pub pockets: PathBuf,
    pub positives: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_pairs: Option<Vec<PairSample>>,
}

/// Indices into [`Dataset::compounds`] and [`Dataset::pockets`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairIdx {
    pub ligand: usize,
    pub pocket: usize,
}

/// Fully resolved, validated dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub compounds: Vec<MolGraph>,
    pub pockets: Vec<MolGraph>,
    pub positives: Vec<PairIdx>,
    /// Labeled evaluation pairs, possibly empty.
    pub eval_pairs: Vec<(PairIdx, bool)>,
    compound_index: HashMap<String, usize>,
    pocket_index: HashMap<String, usize>,
}

impl Dataset {
    /// Resolves ids against the graph lists and validates every reference.
    pub fn new(
        graphs: Vec<MolGraph>,
        positives: &[(String, String)],
        eval_pairs: &[PairSample],
    ) -> Result<Self, IngestError> {
        let mut seen = HashSet::new();
        let mut compounds = Vec::new();
        let mut pockets = Vec::new();
        for g in graphs {
            if !seen.insert(g.id().to_string()) {
                return Err(IngestError::DuplicateId(g.id().to_string()));
            }
            match g.kind() {
                MolKind::Compound => compounds.push(g),
                MolKind::Pocket => pockets.push(g),
            }
        }
        let index = |list: &[MolGraph]| {
            list.iter()
                .enumerate()
                .map(|(i, g)| (g.id().to_string(), i))
                .collect::<HashMap<_, _>>()
        };
        let mut ds = Dataset {
            compound_index: index(&compounds),
            pocket_index: index(&pockets),
            compounds,
            pockets,
            positives: Vec::new(),
            eval_pairs: Vec::new(),
        };
        let mut unique = HashSet::new();
        for (l, p) in positives {
            let pair = ds.resolve_pair(l, p)?;
            if !unique.insert(pair) {
                return Err(IngestError::DuplicatePositive(l.clone(), p.clone()));
            }
            ds.positives.push(pair);
        }
        for sample in eval_pairs {
            if sample.label > 1 {
                return Err(IngestError::Manifest {
                    path: String::new(),
                    message: format!(
                        "label {} for ('{}', '{}') is not 0 or 1",
                        sample.label, sample.ligand_id, sample.pocket_id
                    ),
                });
            }
            let pair = ds.resolve_pair(&sample.ligand_id, &sample.pocket_id)?;
            ds.eval_pairs.push((pair, sample.label == 1));
        }
        Ok(ds)
    }

    fn resolve(&self, id: &str, expected: MolKind) -> Result<usize, IngestError> {
        let (own, other, other_kind) = match expected {
            MolKind::Compound => (&self.compound_index, &self.pocket_index, MolKind::Pocket),
            MolKind::Pocket => (&self.pocket_index, &self.compound_index, MolKind::Compound),
        };
        if let Some(&i) = own.get(id) {
            return Ok(i);
        }
        if other.contains_key(id) {
            return Err(IngestError::KindMismatch {
                id: id.to_string(),
                expected,
                found: other_kind,
            });
        }
        Err(IngestError::UnresolvedId(id.to_string()))
    }

    pub fn resolve_pair(&self, ligand: &str, pocket: &str) -> Result<PairIdx, IngestError> {
        Ok(PairIdx {
            ligand: self.resolve(ligand, MolKind::Compound)?,
            pocket: self.resolve(pocket, MolKind::Pocket)?,
        })
    }

    pub fn compound_id(&self, i: usize) -> &str {
        self.compounds[i].id()
    }

    pub fn pocket_id(&self, i: usize) -> &str {
        self.pockets[i].id()
    }

    pub fn pocket_index(&self, id: &str) -> Option<usize> {
        self.pocket_index.get(id).copied()
    }

    pub fn compound_index(&self, id: &str) -> Option<usize> {
        self.compound_index.get(id).copied()
    }

    /// `(compounds, pockets, positives)`.
    pub fn sizes(&self) -> (usize, usize, usize) {
        (
            self.compounds.len(),
            self.pockets.len(),
            self.positives.len(),
        )
    }

    pub fn pair(&self, p: PairIdx) -> (&MolGraph, &MolGraph) {
        (&self.compounds[p.ligand], &self.pockets[p.pocket])
    }

    /// Keeps the pockets whose index passes `keep`, with their positives and
    /// evaluation pairs. Dropped pockets leave the dataset entirely, so they
    /// cannot be drawn as negatives either. All compounds are kept.
    pub fn filter_pockets(&self, keep: impl Fn(usize) -> bool) -> Dataset {
        let remap: Vec<Option<usize>> = {
            let mut next = 0;
            (0..self.pockets.len())
                .map(|i| {
                    keep(i).then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect()
        };
        let move_pair = |p: PairIdx| {
            remap[p.pocket].map(|pocket| PairIdx {
                ligand: p.ligand,
                pocket,
            })
        };
        let pockets: Vec<MolGraph> = self
            .pockets
            .iter()
            .enumerate()
            .filter(|(i, _)| remap[*i].is_some())
            .map(|(_, g)| g.clone())
            .collect();
        Dataset {
            compound_index: self.compound_index.clone(),
            pocket_index: pockets
                .iter()
                .enumerate()
                .map(|(i, g)| (g.id().to_string(), i))
                .collect(),
            compounds: self.compounds.clone(),
            pockets,
            positives: self
                .positives
                .iter()
                .filter_map(|&p| move_pair(p))
                .collect(),
            eval_pairs: self
                .eval_pairs
                .iter()
                .filter_map(|&(p, label)| move_pair(p).map(|q| (q, label)))
                .collect(),
        }
    }

    pub fn eval_samples(&self) -> Vec<PairSample> {
        self.eval_pairs
            .iter()
            .map(|&(p, label)| PairSample {
                ligand_id: self.compound_id(p.ligand).to_string(),
                pocket_id: self.pocket_id(p.pocket).to_string(),
                label: u8::from(label),
            })
            .collect()
    }
}

pub fn load_manifest(path: &Path) -> Result<(DatasetManifest, Dataset), IngestError> {
    let text = read_file(path)?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| IngestError::Manifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut graphs = read_graphs(&base.join(&manifest.compounds))?;
    graphs.extend(read_graphs(&base.join(&manifest.pockets))?);
    let eval = manifest.eval_pairs.clone().unwrap_or_default();
    let dataset = Dataset::new(graphs, &manifest.positives, &eval).map_err(|e| match e {
        IngestError::Manifest { message, .. } => IngestError::Manifest {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })?;
    Ok((manifest, dataset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{AtomRecord, Element};

    fn g(id: &str, kind: MolKind) -> MolGraph {
        MolGraph::new(id, kind, vec![AtomRecord::new(Element::C)], vec![]).unwrap()
    }

    fn graphs() -> Vec<MolGraph> {
        vec![
            g("l1", MolKind::Compound),
            g("l2", MolKind::Compound),
            g("p1", MolKind::Pocket),
        ]
    }

    fn pair(l: &str, p: &str) -> (String, String) {
        (l.to_string(), p.to_string())
    }

    #[test]
    fn filter_drops_pockets() {
        let mut gs = graphs();
        gs.push(g("p2", MolKind::Pocket));
        let eval = [
            PairSample::from(("l1".to_string(), "p2".to_string(), 1)),
            PairSample::from(("l2".to_string(), "p1".to_string(), 0)),
        ];
        let ds = Dataset::new(gs, &[pair("l1", "p1"), pair("l2", "p2")], &eval).unwrap();
        let kept = ds.filter_pockets(|p| p == 1);
        assert_eq!(kept.sizes(), (2, 1, 1));
        assert_eq!(kept.pocket_id(0), "p2");
        assert_eq!(kept.pocket_index("p1"), None);
        assert_eq!(
            kept.positives,
            vec![PairIdx {
                ligand: 1,
                pocket: 0
            }]
        );
        assert_eq!(
            kept.eval_pairs,
            vec![(
                PairIdx {
                    ligand: 0,
                    pocket: 0
                },
                true
            )]
        );
    }

    #[test]
    fn sizes_after_loading() {
        let ds = Dataset::new(graphs(), &[pair("l1", "p1")], &[]).unwrap();
        assert_eq!(ds.sizes(), (2, 1, 1));
    }

    #[test]
    fn missing_id() {
        let err = Dataset::new(graphs(), &[pair("l9", "p1")], &[]).unwrap_err();
        assert!(matches!(err, IngestError::UnresolvedId(id) if id == "l9"));
    }

    #[test]
    fn ligand_resolving_to_pocket() {
        let err = Dataset::new(graphs(), &[pair("p1", "p1")], &[]).unwrap_err();
        assert!(matches!(err, IngestError::KindMismatch { .. }));
    }

    #[test]
    fn duplicate_positive() {
        let err = Dataset::new(graphs(), &[pair("l1", "p1"), pair("l1", "p1")], &[]).unwrap_err();
        assert!(matches!(err, IngestError::DuplicatePositive(..)));
    }

    #[test]
    fn duplicate_graph_id() {
        let mut gs = graphs();
        gs.push(g("l1", MolKind::Pocket));
        assert!(matches!(
            Dataset::new(gs, &[], &[]),
            Err(IngestError::DuplicateId(_))
        ));
    }

    #[test]
    fn eval_pair_parsing() {
        let m: DatasetManifest = serde_json::from_str(
            r#"{"compounds":"c.jsonl","pockets":"p.jsonl","positives":[["l1","p1"]],"eval_pairs":[["l2","p1",0]]}"#,
        )
        .unwrap();
        let eval = m.eval_pairs.unwrap();
        assert_eq!(eval[0].label, 0);
        let ds = Dataset::new(graphs(), &m.positives, &eval).unwrap();
        assert_eq!(
            ds.eval_pairs,
            vec![(
                PairIdx {
                    ligand: 1,
                    pocket: 0
                },
                false
            )]
        );
        let bad = [PairSample::from(("l1".to_string(), "p1".to_string(), 2))];
        assert!(Dataset::new(graphs(), &[], &bad).is_err());
    }
}
