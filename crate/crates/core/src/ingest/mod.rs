//! Reading graphs, SDF files and dataset manifests from disk.

mod jsonl;
mod manifest;
mod sdf;

pub use jsonl::{graph_to_json_line, parse_graph_jsonl, parse_graph_jsonl_str, write_graph_jsonl};
pub use manifest::{load_manifest, Dataset, DatasetManifest, PairIdx, PairSample};
pub use sdf::{parse_sdf_v2000, parse_sdf_v2000_str};

use crate::molgraph::GraphError;
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Where in an input an error was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub file: String,
    /// 1-based line number within the file.
    pub line: usize,
    /// 0-based SDF record index, when parsing SDF.
    pub record: Option<usize>,
}

impl Location {
    pub(crate) fn line(file: &str, line: usize) -> Self {
        Location {
            file: file.to_string(),
            line,
            record: None,
        }
    }

    pub(crate) fn record(file: &str, record: usize, line: usize) -> Self {
        Location {
            file: file.to_string(),
            line,
            record: Some(record),
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)?;
        if let Some(r) = self.record {
            write!(f, " (record {r})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{at}: malformed line: {message}")]
    MalformedLine { at: Location, message: String },
    #[error("{at}: graph '{id}': atom {atom} has more than 5 neighbors")]
    DegreeExceeded {
        at: Location,
        id: String,
        atom: usize,
    },
    #[error("{at}: graph '{id}': bond references a missing atom")]
    DanglingBond { at: Location, id: String },
    #[error("{at}: graph '{id}': {source}")]
    InvalidGraph {
        at: Location,
        id: String,
        source: GraphError,
    },
    #[error("{at}: unsupported connection table version (only V2000 is read)")]
    UnsupportedVersion { at: Location },
    #[error("{at}: malformed counts line")]
    MalformedCounts { at: Location },
    #[error("{at}: record ends before its connection table does")]
    Truncated { at: Location },
    #[error("manifest {path}: {message}")]
    Manifest { path: String, message: String },
    #[error("unresolved id '{0}'")]
    UnresolvedId(String),
    #[error("id '{id}' is a {found}, expected a {expected}")]
    KindMismatch {
        id: String,
        expected: crate::molgraph::MolKind,
        found: crate::molgraph::MolKind,
    },
    #[error("id '{0}' is defined more than once")]
    DuplicateId(String),
    #[error("positive pair ('{0}', '{1}') is listed more than once")]
    DuplicatePositive(String, String),
}

impl IngestError {
    pub(crate) fn from_graph(at: Location, id: String, err: GraphError) -> Self {
        match err {
            GraphError::DegreeExceeded { atom, .. } => IngestError::DegreeExceeded { at, id, atom },
            GraphError::DanglingBond { .. } => IngestError::DanglingBond { at, id },
            source => IngestError::InvalidGraph { at, id, source },
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a graph file, choosing the parser by extension (`.sdf`/`.mol` or JSONL).
pub fn read_graphs(path: &Path) -> Result<Vec<crate::molgraph::MolGraph>, IngestError> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("sdf") | Some("mol") | Some("sd") => parse_sdf_v2000(path),
        _ => parse_graph_jsonl(path),
    }
}
