//! Line-delimited JSON graphs, one object per line:
//!
//! ```text
//! {"id": "m1", "kind": "compound", "atoms": [{"el": "C", "chg": 0, "arom": false, "h": 3}],
//!  "bonds": [[0, 1, "single"]]}
//! ```
//!
//! Unknown fields are ignored, optional atom fields default to 0/false and
//! blank lines are skipped.

use super::{read_file, IngestError, Location};
use crate::molgraph::{AtomRecord, Bond, BondOrder, Element, MolGraph, MolKind};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct RawGraph {
    id: String,
    kind: MolKind,
    atoms: Vec<RawAtom>,
    #[serde(default)]
    bonds: Vec<(usize, usize, BondOrder)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawAtom {
    el: String,
    #[serde(default, skip_serializing_if = "is_zero_i8")]
    chg: i8,
    #[serde(default, skip_serializing_if = "is_false")]
    arom: bool,
    #[serde(default, skip_serializing_if = "is_zero_u32")]
    h: u32,
}

fn is_zero_i8(v: &i8) -> bool {
    *v == 0
}

fn is_zero_u32(v: &u32) -> bool {
    *v == 0
}

fn is_false(v: &bool) -> bool {
    !*v
}

pub fn parse_graph_jsonl(path: &Path) -> Result<Vec<MolGraph>, IngestError> {
    let text = read_file(path)?;
    parse_graph_jsonl_str(&text, &path.display().to_string())
}

/// Parses JSONL text; `origin` names the source in error locations.
pub fn parse_graph_jsonl_str(text: &str, origin: &str) -> Result<Vec<MolGraph>, IngestError> {
    let mut graphs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = Location::line(origin, i + 1);
        let raw: RawGraph = serde_json::from_str(line).map_err(|e| IngestError::MalformedLine {
            at: at.clone(),
            message: e.to_string(),
        })?;
        let atoms = raw
            .atoms
            .iter()
            .map(|a| AtomRecord {
                element: Element::from_symbol(&a.el),
                formal_charge: a.chg,
                aromatic: a.arom,
                h_count: a.h,
            })
            .collect();
        let bonds = raw
            .bonds
            .iter()
            .map(|&(a, b, order)| Bond::new(a, b, order))
            .collect();
        let graph = MolGraph::new(raw.id.clone(), raw.kind, atoms, bonds)
            .map_err(|e| IngestError::from_graph(at, raw.id, e))?;
        graphs.push(graph);
    }
    Ok(graphs)
}

pub fn graph_to_json_line(g: &MolGraph) -> String {
    let raw = RawGraph {
        id: g.id().to_string(),
        kind: g.kind(),
        atoms: g
            .atoms()
            .iter()
            .map(|a| RawAtom {
                el: a.element.symbol().to_string(),
                chg: a.formal_charge,
                arom: a.aromatic,
                h: a.h_count,
            })
            .collect(),
        bonds: g.bonds().iter().map(|b| (b.a, b.b, b.order)).collect(),
    };
    serde_json::to_string(&raw).expect("graph serializes")
}

pub fn write_graph_jsonl<'a, W: Write>(
    mut out: W,
    graphs: impl IntoIterator<Item = &'a MolGraph>,
) -> std::io::Result<()> {
    for g in graphs {
        writeln!(out, "{}", graph_to_json_line(g))?;
    }
    Ok(())
}
