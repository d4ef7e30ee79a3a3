//! The repository context graph: entities, contains/depends edges,
//! persistence and stats.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entity::{CodeEntity, EntityKind};
use crate::error::{Error, Result};

/// Current on-disk format version.
pub const SCHEMA_VERSION: u32 = 1;

/// Per-module bookkeeping carried alongside the entity set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleRecord {
    /// Repo-relative file path; a directory path for synthetic namespace
    /// packages (directories without `__init__.py`).
    pub file_path: String,
    pub line_count: u32,
    pub dfg_nodes: u64,
    pub dfg_triplets: u64,
    #[serde(default)]
    pub synthetic: bool,
}

/// Non-fatal indexing findings, reported but never failing the build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub file_path: String,
    pub line: Option<u32>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    /// A file parsed with syntax errors; entities were still recovered.
    SyntaxRecovered,
    /// A local-looking import whose target could not be found.
    DanglingImport,
    /// Two constructs claimed the same qualified path.
    PathCollision,
    /// A file could not be read (encoding, IO); it was skipped.
    UnreadableFile,
}

/// The whole-repository index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextGraph {
    pub schema: u32,
    /// Root the graph was built from, as given to the indexer.
    pub root: String,
    /// Entities keyed by qualified path.
    pub entities: BTreeMap<String, CodeEntity>,
    /// Structural nesting: parent path → child paths in source order.
    pub contains: BTreeMap<String, Vec<String>>,
    /// Dataflow-derived dependencies: entity → entities it depends on.
    pub depends: BTreeMap<String, BTreeSet<String>>,
    /// Module path → file bookkeeping.
    pub modules: BTreeMap<String, ModuleRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ContextGraph {
    pub fn new(root: impl Into<String>) -> Self {
        ContextGraph {
            schema: SCHEMA_VERSION,
            root: root.into(),
            ..ContextGraph::default()
        }
    }

    pub fn entity(&self, qualified_path: &str) -> Option<&CodeEntity> {
        self.entities.get(qualified_path)
    }

    /// Children of an entity in source order.
    pub fn children(&self, qualified_path: &str) -> &[String] {
        self.contains
            .get(qualified_path)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Direct depends successors, sorted.
    pub fn depends_on(&self, qualified_path: &str) -> impl Iterator<Item = &String> {
        self.depends.get(qualified_path).into_iter().flatten()
    }

    pub fn add_depends(&mut self, from: &str, to: &str) {
        if from == to {
            return;
        }
        self.depends
            .entry(from.to_string())
            .or_default()
            .insert(to.to_string());
    }

    /// Serialize to a versioned JSON file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| {
            Error::GraphFormat {
                path: path.to_path_buf(),
                reason: e.to_string(),
            }
        })?;
        std::fs::write(path, json).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    /// Load a file produced by `save`; version mismatches and corrupt
    /// content are explicit errors, never partial graphs.
    pub fn load(path: &Path) -> Result<ContextGraph> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::GraphFormat {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?;
        let found = value.get("schema").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != SCHEMA_VERSION {
            return Err(Error::GraphVersion {
                path: path.to_path_buf(),
                found,
                supported: SCHEMA_VERSION,
            });
        }
        serde_json::from_value(value).map_err(|e| Error::GraphFormat {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn stats(&self) -> GraphStats {
        let mut stats = GraphStats::default();
        for record in self.modules.values() {
            if !record.synthetic {
                stats.files += 1;
            }
            stats.dfg_nodes += record.dfg_nodes;
            stats.dfg_triplets += record.dfg_triplets;
        }
        for entity in self.entities.values() {
            match entity.kind {
                EntityKind::Module => stats.modules += 1,
                EntityKind::Class => stats.classes += 1,
                EntityKind::Function => stats.functions += 1,
                EntityKind::Variable => stats.variables += 1,
            }
        }
        stats.contains_edges = self.contains.values().map(|v| v.len()).sum();
        stats.depends_edges = self.depends.values().map(|v| v.len()).sum();
        stats.diagnostics = self.diagnostics.len();
        stats
    }
}

/// Entity and edge counts, rendered as line-oriented text for `stats`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub files: usize,
    pub modules: usize,
    pub classes: usize,
    pub functions: usize,
    pub variables: usize,
    pub contains_edges: usize,
    pub depends_edges: usize,
    pub dfg_nodes: u64,
    pub dfg_triplets: u64,
    pub diagnostics: usize,
}

impl std::fmt::Display for GraphStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "files: {}", self.files)?;
        writeln!(f, "modules: {}", self.modules)?;
        writeln!(f, "classes: {}", self.classes)?;
        writeln!(f, "functions: {}", self.functions)?;
        writeln!(f, "variables: {}", self.variables)?;
        writeln!(f, "contains edges: {}", self.contains_edges)?;
        writeln!(f, "depends edges: {}", self.depends_edges)?;
        writeln!(f, "dataflow nodes: {}", self.dfg_nodes)?;
        writeln!(f, "dataflow triplets: {}", self.dfg_triplets)?;
        write!(f, "diagnostics: {}", self.diagnostics)
    }
}
