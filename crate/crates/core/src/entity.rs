//! Code entities: the vertices of the repository context graph.

use serde::{Deserialize, Serialize};

/// What kind of code object an entity stands for.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum EntityKind {
    Module,
    Class,
    Function,
    Variable,
}

impl std::fmt::Display for EntityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EntityKind::Module => "module",
            EntityKind::Class => "class",
            EntityKind::Function => "function",
            EntityKind::Variable => "variable",
        };
        f.write_str(s)
    }
}

/// One code entity. Which optional fields are populated depends on `kind`:
///
/// - Module: `file_path` + optional `docstring`; no lines, no body.
/// - Class: `signature`, optional `docstring`, line range; members live as
///   contained entities, so no body text of its own.
/// - Function: `signature`, optional `docstring`, `body` (the full verbatim
///   definition), line range.
/// - Variable: `body` (the full statement — for an import binding, the
///   normalized single-name import), line range.
///
/// All stored text is full source lines at their original indentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeEntity {
    /// All-dotted path: module path, then nesting (`pkg.mod.Class.method`).
    pub qualified_path: String,
    /// Local name: the last path segment (the dotted module path for
    /// modules).
    pub name: String,
    pub kind: EntityKind,
    /// Repo-relative path of the defining file, forward slashes.
    pub file_path: String,
    /// 1-based first line of the definition (decorators included); absent
    /// for modules.
    pub start_line: Option<u32>,
    /// 1-based last line; absent for modules.
    pub end_line: Option<u32>,
    /// Header lines of a class/function, through the colon line.
    pub signature: Option<String>,
    /// Literal docstring lines, quotes included.
    pub docstring: Option<String>,
    /// Verbatim statement/definition text (functions and variables).
    pub body: Option<String>,
    /// Leading whitespace of the first line.
    #[serde(default)]
    pub indent: String,
    /// Leading whitespace of the entity's body block (used for ellipsis
    /// placeholders).
    #[serde(default)]
    pub body_indent: String,
    /// Definition whose body shares the header line (`def f(): return 1`).
    #[serde(default)]
    pub inline_body: bool,
}

impl CodeEntity {
    /// Sort key within a module rendering: modules first, then line order.
    pub fn line_key(&self) -> u32 {
        self.start_line.unwrap_or(0)
    }
}
