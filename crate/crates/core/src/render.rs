//! Turning entities back into source text for prompts.
//!
//! Two levels of detail are supported: `definition` keeps signatures and
//! docstrings but replaces function bodies with an ellipsis line, while
//! `complete` reproduces bodies verbatim. Classes always render as a
//! header followed by their members at the requested level, so a class
//! pulled into a prompt carries its methods with it.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entity::{CodeEntity, EntityKind};
use crate::graph::ContextGraph;

/// How much of each entity's source to reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Signatures and docstrings only; function bodies become `...`.
    Definition,
    /// Full bodies, verbatim.
    Complete,
}

impl Default for Scope {
    fn default() -> Self {
        Scope::Complete
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Definition => write!(f, "definition"),
            Scope::Complete => write!(f, "complete"),
        }
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "definition" => Ok(Scope::Definition),
            "complete" => Ok(Scope::Complete),
            other => Err(format!(
                "unknown scope {other:?}; expected \"definition\" or \"complete\""
            )),
        }
    }
}

/// Render one entity at the requested scope. Classes include their members
/// recursively; the result never carries a trailing newline.
pub fn render_entity(graph: &ContextGraph, entity: &CodeEntity, scope: Scope) -> String {
    match entity.kind {
        EntityKind::Module => entity.docstring.clone().unwrap_or_default(),
        EntityKind::Variable => render_variable(entity, scope),
        EntityKind::Function => render_function(entity, scope),
        EntityKind::Class => render_class(graph, entity, scope),
    }
}

fn render_variable(entity: &CodeEntity, scope: Scope) -> String {
    let body = entity.body.as_deref().unwrap_or_default();
    match scope {
        Scope::Complete => body.to_string(),
        // The declaration is everything left of the assignment operator:
        // name and optional annotation, but not the value.
        Scope::Definition => match body.find(" = ") {
            Some(idx) => body[..idx].to_string(),
            None => body.to_string(),
        },
    }
}

fn render_function(entity: &CodeEntity, scope: Scope) -> String {
    match scope {
        Scope::Complete => entity.body.clone().unwrap_or_default(),
        Scope::Definition => {
            if entity.inline_body {
                // `def f(): return 1` has no separate body lines to elide.
                return entity.body.clone().unwrap_or_default();
            }
            let mut parts: Vec<&str> = Vec::new();
            if let Some(sig) = entity.signature.as_deref() {
                parts.push(sig);
            }
            if let Some(doc) = entity.docstring.as_deref() {
                parts.push(doc);
            }
            let placeholder = format!("{}...", entity.body_indent);
            let mut out = parts.join("\n");
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&placeholder);
            out
        }
    }
}

fn render_class(graph: &ContextGraph, entity: &CodeEntity, scope: Scope) -> String {
    if entity.inline_body {
        return entity.body.clone().unwrap_or_default();
    }
    let mut parts: Vec<String> = Vec::new();
    if let Some(sig) = entity.signature.as_deref() {
        parts.push(sig.to_string());
    }
    if let Some(doc) = entity.docstring.as_deref() {
        parts.push(doc.to_string());
    }
    let mut members: Vec<&CodeEntity> = graph
        .children(&entity.qualified_path)
        .iter()
        .filter_map(|qp| graph.entity(qp))
        .collect();
    members.sort_by_key(|m| (m.line_key(), m.qualified_path.clone()));
    let had_only_header = parts.len() == 1 && entity.docstring.is_none();
    for member in members {
        let rendered = render_entity(graph, member, scope);
        if !rendered.is_empty() {
            parts.push(rendered);
        }
    }
    if had_only_header && parts.len() == 1 {
        // No docstring and no members survived: keep the block syntactically
        // plausible with a placeholder body.
        parts.push(format!("{}...", entity.body_indent));
    }
    parts.join("\n")
}

/// Repo-relative file path a module renders under.
pub(crate) fn module_file_path(graph: &ContextGraph, module_path: &str) -> String {
    graph
        .modules
        .get(module_path)
        .map(|m| m.file_path.clone())
        .or_else(|| graph.entity(module_path).map(|e| e.file_path.clone()))
        .unwrap_or_else(|| module_path.to_string())
}

/// Render the portion of one module that was retrieved.
///
/// The block always begins with a `# <file path>` comment. A retrieved
/// member whose enclosing class was not itself retrieved is shown under a
/// scaffold of its ancestors' class headers so the nesting stays readable;
/// each scaffold header appears at most once per block.
pub fn render_module_block(
    graph: &ContextGraph,
    module_path: &str,
    members: &[&CodeEntity],
    scope: Scope,
) -> String {
    let file_path = module_file_path(graph, module_path);
    let mut parts: Vec<String> = vec![format!("# {file_path}")];
    let mut scaffolded: BTreeSet<String> = BTreeSet::new();
    let mut emitted: BTreeSet<(u32, String)> = BTreeSet::new();

    let mut ordered: Vec<&CodeEntity> = members.to_vec();
    ordered.sort_by_key(|e| (e.line_key(), e.qualified_path.clone()));

    for entity in ordered {
        if entity.kind == EntityKind::Module {
            if let Some(doc) = entity.docstring.as_deref() {
                parts.push(doc.to_string());
            }
            continue;
        }
        // Ancestor chain strictly between the module and the entity.
        if let Some(rel) = entity
            .qualified_path
            .strip_prefix(&format!("{module_path}."))
        {
            let segments: Vec<&str> = rel.split('.').collect();
            for depth in 1..segments.len() {
                let ancestor_qp = format!("{module_path}.{}", segments[..depth].join("."));
                let Some(ancestor) = graph.entity(&ancestor_qp) else {
                    continue;
                };
                if ancestor.kind == EntityKind::Class && scaffolded.insert(ancestor_qp) {
                    if let Some(sig) = ancestor.signature.as_deref() {
                        parts.push(sig.to_string());
                    }
                }
            }
        }
        let rendered = render_entity(graph, entity, scope);
        if rendered.is_empty() {
            continue;
        }
        // Tuple unpacking produces one variable entity per name sharing a
        // statement; render the statement once.
        if emitted.insert((entity.line_key(), rendered.clone())) {
            parts.push(rendered);
        }
    }
    parts.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_graph;
    use std::fs;
    use std::path::PathBuf;

    fn fixture_repo(files: &[(&str, &str)]) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().expect("tempdir");
        for (rel, content) in files {
            let path = dir.path().join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).expect("mkdir");
            }
            fs::write(&path, content).expect("write fixture");
        }
        let root = dir.path().to_path_buf();
        (dir, root)
    }

    const SHAPES_PY: &str = r#""""Geometry helpers."""

UNIT = 1.0

class Shape:
    """Base for drawable shapes."""

    def area(self) -> float:
        """Surface area in square units."""
        return 0.0

    def scaled(self, factor):
        return Shape()

def top_level(x):
    return x * UNIT
"#;

    #[test]
    fn function_definition_scope_elides_body() {
        let (_dir, root) = fixture_repo(&[("shapes.py", SHAPES_PY)]);
        let graph = build_graph(&root).expect("graph");
        let entity = graph.entity("shapes.top_level").expect("entity");
        let rendered = render_entity(&graph, entity, Scope::Definition);
        assert_eq!(rendered, "def top_level(x):\n    ...");
        let complete = render_entity(&graph, entity, Scope::Complete);
        assert_eq!(complete, "def top_level(x):\n    return x * UNIT");
    }

    #[test]
    fn method_definition_scope_keeps_docstring() {
        let (_dir, root) = fixture_repo(&[("shapes.py", SHAPES_PY)]);
        let graph = build_graph(&root).expect("graph");
        let entity = graph.entity("shapes.Shape.area").expect("entity");
        let rendered = render_entity(&graph, entity, Scope::Definition);
        assert_eq!(
            rendered,
            "    def area(self) -> float:\n        \"\"\"Surface area in square units.\"\"\"\n        ..."
        );
    }

    #[test]
    fn class_renders_members_recursively() {
        let (_dir, root) = fixture_repo(&[("shapes.py", SHAPES_PY)]);
        let graph = build_graph(&root).expect("graph");
        let entity = graph.entity("shapes.Shape").expect("entity");
        let rendered = render_entity(&graph, entity, Scope::Definition);
        let lines: Vec<&str> = rendered.lines().collect();
        assert_eq!(lines[0], "class Shape:");
        assert_eq!(lines[1], "    \"\"\"Base for drawable shapes.\"\"\"");
        assert!(rendered.contains("def area(self) -> float:"));
        assert!(rendered.contains("def scaled(self, factor):"));
        // Definition scope: method bodies are gone.
        assert!(!rendered.contains("return 0.0"));
        // Members appear in declaration order.
        let area = rendered.find("def area").unwrap();
        let scaled = rendered.find("def scaled").unwrap();
        assert!(area < scaled);
    }

    #[test]
    fn variable_definition_scope_drops_value() {
        let (_dir, root) = fixture_repo(&[("shapes.py", SHAPES_PY)]);
        let graph = build_graph(&root).expect("graph");
        let entity = graph.entity("shapes.UNIT").expect("entity");
        assert_eq!(render_entity(&graph, entity, Scope::Definition), "UNIT");
        assert_eq!(render_entity(&graph, entity, Scope::Complete), "UNIT = 1.0");
    }

    #[test]
    fn scope_token_counts_are_monotone() {
        use crate::tokens::{ApproxTokenizer, TokenCounter};
        let (_dir, root) = fixture_repo(&[("shapes.py", SHAPES_PY)]);
        let graph = build_graph(&root).expect("graph");
        let counter = ApproxTokenizer;
        for entity in graph.entities.values() {
            let def = render_entity(&graph, entity, Scope::Definition);
            let full = render_entity(&graph, entity, Scope::Complete);
            assert!(
                counter.count(&def) <= counter.count(&full),
                "definition longer than complete for {}",
                entity.qualified_path
            );
        }
    }

    #[test]
    fn module_block_scaffolds_orphan_member() {
        let (_dir, root) = fixture_repo(&[("shapes.py", SHAPES_PY)]);
        let graph = build_graph(&root).expect("graph");
        let area = graph.entity("shapes.Shape.area").expect("entity");
        let block = render_module_block(&graph, "shapes", &[area], Scope::Complete);
        let lines: Vec<&str> = block.lines().collect();
        assert_eq!(lines[0], "# shapes.py");
        assert_eq!(lines[1], "class Shape:");
        assert_eq!(lines[2], "    def area(self) -> float:");
        assert!(block.contains("return 0.0"));
        // The sibling method was not retrieved and must not leak in.
        assert!(!block.contains("scaled"));
    }

    #[test]
    fn module_block_includes_docstring_and_orders_by_line() {
        let (_dir, root) = fixture_repo(&[("shapes.py", SHAPES_PY)]);
        let graph = build_graph(&root).expect("graph");
        let members: Vec<&crate::entity::CodeEntity> = ["shapes", "shapes.top_level", "shapes.UNIT"]
            .iter()
            .map(|qp| graph.entity(qp).expect("entity"))
            .collect();
        let block = render_module_block(&graph, "shapes", &members, Scope::Complete);
        let lines: Vec<&str> = block.lines().collect();
        assert_eq!(lines[0], "# shapes.py");
        assert_eq!(lines[1], "\"\"\"Geometry helpers.\"\"\"");
        let unit = block.find("UNIT = 1.0").unwrap();
        let func = block.find("def top_level").unwrap();
        assert!(unit < func);
    }
}
