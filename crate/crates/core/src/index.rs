//! Repository indexing: per-file entity extraction, cross-file import
//! linking, and whole-repo graph assembly.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;

use crate::dataflow::{build_dfg, DataflowGraph};
use crate::entity::{CodeEntity, EntityKind};
use crate::error::Result;
use crate::graph::{ContextGraph, Diagnostic, DiagnosticKind, ModuleRecord};
use crate::source::SourceFile;
use crate::syntax::{parse, SyntaxTree};
use tree_sitter::Node;

/// One import binding as written in a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImport {
    /// 1-based line of the import statement.
    pub line: u32,
    /// The local name the import binds (`None` for star imports).
    pub local_name: Option<String>,
    pub form: ImportForm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImportForm {
    /// `import a.b [as c]`
    Plain { module: String },
    /// `from [.]*mod import name [as alias]`
    From { dots: u32, module: String, name: String },
    /// `from [.]*mod import *`
    Star { dots: u32, module: String },
}

/// The per-file indexing result, merged into the repo graph afterwards.
#[derive(Debug, Clone)]
pub struct FileIndex {
    pub module_path: String,
    pub file_path: String,
    /// Module entity first, then nested entities in source order.
    pub entities: Vec<CodeEntity>,
    pub contains: Vec<(String, String)>,
    pub depends: Vec<(String, String)>,
    pub imports: Vec<RawImport>,
    pub line_count: u32,
    pub dfg_nodes: u64,
    pub dfg_triplets: u64,
    pub parse_had_errors: bool,
}

/// Dotted module path of a repo-relative file path:
/// `a/b/c.py` → `a.b.c`, `a/b/__init__.py` → `a.b`.
pub fn module_path_for(rel_path: &str) -> String {
    let key = fs_key_for(rel_path);
    if key.is_empty() {
        "__init__".to_string()
    } else {
        key.replace('/', ".")
    }
}

/// Filesystem lookup key of a module file: the path without extension,
/// with a trailing `/__init__` collapsed to its directory.
pub fn fs_key_for(rel_path: &str) -> String {
    let stripped = rel_path.strip_suffix(".py").unwrap_or(rel_path);
    if let Some(dir) = stripped.strip_suffix("/__init__") {
        dir.to_string()
    } else if stripped == "__init__" {
        String::new()
    } else {
        stripped.to_string()
    }
}

/// Index one file: entities, containment, intra-file depends edges derived
/// from its dataflow graph, and the raw imports for later linking.
pub fn index_file(file: &SourceFile) -> Result<FileIndex> {
    let tree = parse(file)?;
    let dfg = build_dfg(&tree);
    let module_path = module_path_for(&file.repo_relative_path);
    let lines: Vec<&str> = file.text.split('\n').collect();

    let mut extractor = Extractor {
        file,
        tree: &tree,
        lines,
        module_path: module_path.clone(),
        entities: Vec::new(),
        contains: Vec::new(),
        imports: Vec::new(),
        taken: BTreeSet::new(),
    };
    extractor.run();

    let depends = intra_file_depends(&dfg, &extractor.entities);

    Ok(FileIndex {
        module_path,
        file_path: file.repo_relative_path.clone(),
        entities: extractor.entities,
        contains: extractor.contains,
        depends,
        imports: extractor.imports,
        line_count: file.line_count,
        dfg_nodes: dfg.nodes.len() as u64,
        dfg_triplets: dfg.triplets.len() as u64,
        parse_had_errors: tree.has_errors,
    })
}

/// Derive entity-level depends edges from the file's dataflow. Two passes:
/// each triplet makes the entity owning the tail depend on the entity the
/// head stands for, and each per-line reference makes the entity enclosing
/// that line depend on the referenced occurrence's entity — the second pass
/// catches bodies that only read a name (`return Base()`) without any
/// assignment recording it.
fn intra_file_depends(dfg: &DataflowGraph, entities: &[CodeEntity]) -> Vec<(String, String)> {
    let owners = OwnerMap::new(entities);
    let module_qp = entities
        .iter()
        .find(|e| e.kind == EntityKind::Module)
        .map(|e| e.qualified_path.as_str());
    let mut edges = BTreeSet::new();
    for t in &dfg.triplets {
        let (Some(head), Some(tail)) = (
            owners.owner(&t.head.name, t.head.line),
            owners.owner(&t.tail.name, t.tail.line),
        ) else {
            continue;
        };
        if head != tail {
            edges.insert((tail.to_string(), head.to_string()));
        }
    }
    for (line, nodes) in &dfg.touched {
        let Some(consumer) = owners.owner_of_line(*line).or(module_qp) else {
            continue;
        };
        for node in nodes {
            let Some(provider) = owners.owner(&node.name, node.line) else {
                continue;
            };
            if provider != consumer {
                edges.insert((consumer.to_string(), provider.to_string()));
            }
        }
    }
    edges.into_iter().collect()
}

/// Maps a dataflow occurrence to the entity it belongs to: a definitional
/// (name, line) match first — reads resolve to their defining occurrence,
/// so this finds the provider — else the innermost entity whose line range
/// contains the occurrence (the consumer).
pub(crate) struct OwnerMap<'a> {
    definitional: BTreeMap<(&'a str, u32), &'a str>,
    ranges: Vec<(u32, u32, &'a str)>,
}

impl<'a> OwnerMap<'a> {
    pub(crate) fn new(entities: &'a [CodeEntity]) -> Self {
        let mut definitional = BTreeMap::new();
        let mut ranges = Vec::new();
        for e in entities {
            let (Some(start), Some(end)) = (e.start_line, e.end_line) else {
                continue;
            };
            definitional
                .entry((e.name.as_str(), start))
                .or_insert(e.qualified_path.as_str());
            ranges.push((start, end, e.qualified_path.as_str()));
        }
        // Innermost-first selection: later (inner) entities have larger
        // start lines among those containing a given line.
        ranges.sort();
        OwnerMap {
            definitional,
            ranges,
        }
    }

    pub(crate) fn owner(&self, name: &str, line: u32) -> Option<&'a str> {
        if let Some(qp) = self.definitional.get(&(name, line)) {
            return Some(qp);
        }
        self.owner_of_line(line)
    }

    /// The innermost entity whose line range contains `line`, ignoring
    /// definitional matches.
    pub(crate) fn owner_of_line(&self, line: u32) -> Option<&'a str> {
        self.ranges
            .iter()
            .filter(|(s, e, _)| *s <= line && line <= *e)
            .last()
            .map(|(_, _, qp)| *qp)
    }
}

struct Extractor<'a> {
    file: &'a SourceFile,
    tree: &'a SyntaxTree,
    lines: Vec<&'a str>,
    module_path: String,
    entities: Vec<CodeEntity>,
    contains: Vec<(String, String)>,
    imports: Vec<RawImport>,
    taken: BTreeSet<String>,
}

fn row_line(node: Node<'_>) -> u32 {
    node.start_position().row as u32 + 1
}

fn end_line(node: Node<'_>) -> u32 {
    node.end_position().row as u32 + 1
}

impl<'a> Extractor<'a> {
    fn text(&self, node: Node<'a>) -> &'a str {
        self.tree.node_text(node)
    }

    /// Full-line slice, 1-based inclusive bounds, no trailing newline.
    fn slice(&self, start: u32, end: u32) -> String {
        let start = start.max(1) as usize - 1;
        let end = (end as usize).min(self.lines.len());
        self.lines[start..end].join("\n")
    }

    fn indent_of(&self, line: u32) -> String {
        self.lines
            .get(line as usize - 1)
            .map(|l| l[..l.len() - l.trim_start().len()].to_string())
            .unwrap_or_default()
    }

    fn run(&mut self) {
        let root = self.tree.root();
        let docstring = self.block_docstring(root);
        self.entities.push(CodeEntity {
            qualified_path: self.module_path.clone(),
            name: self.module_path.clone(),
            kind: EntityKind::Module,
            file_path: self.file.repo_relative_path.clone(),
            start_line: None,
            end_line: None,
            signature: None,
            docstring,
            body: None,
            indent: String::new(),
            body_indent: String::new(),
            inline_body: false,
        });
        self.taken.insert(self.module_path.clone());

        let parent = self.module_path.clone();
        let mut cursor = root.walk();
        let children: Vec<Node<'a>> = root.named_children(&mut cursor).collect();
        for stmt in children {
            self.visit_statement(&parent, stmt, true);
        }
        self.collect_imports_anywhere();
    }

    /// Docstring of a module or definition body: the leading string
    /// expression statement, stored verbatim (quotes and all).
    fn block_docstring(&self, block: Node<'a>) -> Option<String> {
        let first = block.named_child(0)?;
        if first.kind() != "expression_statement" {
            return None;
        }
        let inner = first.named_child(0)?;
        if inner.kind() != "string" && inner.kind() != "concatenated_string" {
            return None;
        }
        Some(self.slice(row_line(first), end_line(first)))
    }

    /// Index a direct child statement of a module or class body.
    /// Function bodies are not descended into: locals are not entities.
    fn visit_statement(&mut self, parent: &str, stmt: Node<'a>, module_level: bool) {
        match stmt.kind() {
            "class_definition" => self.add_class(parent, stmt, stmt),
            "function_definition" => {
                self.add_function(parent, stmt, stmt);
            }
            "decorated_definition" => {
                if let Some(def) = stmt.child_by_field_name("definition") {
                    match def.kind() {
                        "class_definition" => self.add_class(parent, stmt, def),
                        "function_definition" => self.add_function(parent, stmt, def),
                        _ => {}
                    }
                }
            }
            "expression_statement" => {
                let mut cursor = stmt.walk();
                let children: Vec<Node<'a>> = stmt.named_children(&mut cursor).collect();
                for child in children {
                    if child.kind() == "assignment" {
                        self.add_variables(parent, stmt, child);
                    }
                }
            }
            "import_statement" | "import_from_statement" => {
                if module_level {
                    self.add_import_entities(parent, stmt);
                }
            }
            _ => {}
        }
    }

    fn claim(&mut self, qp: &str) -> bool {
        self.taken.insert(qp.to_string())
    }

    fn add_class(&mut self, parent: &str, outer: Node<'a>, def: Node<'a>) {
        let Some(name_node) = def.child_by_field_name("name") else {
            return;
        };
        let name = self.text(name_node).to_string();
        let qp = format!("{parent}.{name}");
        if !self.claim(&qp) {
            return;
        }
        let start = row_line(outer);
        let end = end_line(outer);
        let (signature, body_indent, inline) = self.header_parts(outer, def);
        let docstring = def
            .child_by_field_name("body")
            .and_then(|b| self.block_docstring(b));
        self.entities.push(CodeEntity {
            qualified_path: qp.clone(),
            name,
            kind: EntityKind::Class,
            file_path: self.file.repo_relative_path.clone(),
            start_line: Some(start),
            end_line: Some(end),
            signature: Some(signature),
            docstring,
            body: None,
            indent: self.indent_of(start),
            body_indent,
            inline_body: inline,
        });
        self.contains.push((parent.to_string(), qp.clone()));
        if let Some(body) = def.child_by_field_name("body") {
            let mut cursor = body.walk();
            let children: Vec<Node<'a>> = body.named_children(&mut cursor).collect();
            for stmt in children {
                self.visit_statement(&qp, stmt, false);
            }
        }
    }

    fn add_function(&mut self, parent: &str, outer: Node<'a>, def: Node<'a>) {
        let Some(name_node) = def.child_by_field_name("name") else {
            return;
        };
        let name = self.text(name_node).to_string();
        let qp = format!("{parent}.{name}");
        if !self.claim(&qp) {
            return;
        }
        let start = row_line(outer);
        let end = end_line(outer);
        let (signature, body_indent, inline) = self.header_parts(outer, def);
        let docstring = def
            .child_by_field_name("body")
            .and_then(|b| self.block_docstring(b));
        self.entities.push(CodeEntity {
            qualified_path: qp.clone(),
            name,
            kind: EntityKind::Function,
            file_path: self.file.repo_relative_path.clone(),
            start_line: Some(start),
            end_line: Some(end),
            signature: Some(signature),
            docstring,
            body: Some(self.slice(start, end)),
            indent: self.indent_of(start),
            body_indent,
            inline_body: inline,
        });
        self.contains.push((parent.to_string(), qp));
    }

    /// Signature lines (decorators through the header colon), the body
    /// block's indentation, and whether the body shares the header line.
    fn header_parts(&self, outer: Node<'a>, def: Node<'a>) -> (String, String, bool) {
        let start = row_line(outer);
        let mut colon_line = row_line(def);
        let mut cursor = def.walk();
        for child in def.children(&mut cursor) {
            if child.kind() == ":" {
                colon_line = end_line(child);
                break;
            }
        }
        let body = def.child_by_field_name("body");
        let inline = body.map(|b| row_line(b) == colon_line).unwrap_or(false);
        let body_indent = match body {
            Some(b) if !inline => self.indent_of(row_line(b)),
            _ => format!("{}    ", self.indent_of(start)),
        };
        (self.slice(start, colon_line), body_indent, inline)
    }

    /// Variable entities: one per simple identifier target of a
    /// module-level or class-level assignment; all share the statement as
    /// their body.
    fn add_variables(&mut self, parent: &str, stmt: Node<'a>, assignment: Node<'a>) {
        let Some(left) = assignment.child_by_field_name("left") else {
            return;
        };
        let start = row_line(stmt);
        let end = end_line(stmt);
        let body = self.slice(start, end);
        let indent = self.indent_of(start);
        let mut targets = Vec::new();
        self.simple_targets(left, &mut targets);
        for name_node in targets {
            let name = self.text(name_node).to_string();
            let qp = format!("{parent}.{name}");
            if !self.claim(&qp) {
                continue;
            }
            self.entities.push(CodeEntity {
                qualified_path: qp.clone(),
                name,
                kind: EntityKind::Variable,
                file_path: self.file.repo_relative_path.clone(),
                start_line: Some(start),
                end_line: Some(end),
                signature: None,
                docstring: None,
                body: Some(body.clone()),
                indent: indent.clone(),
                body_indent: String::new(),
                inline_body: false,
            });
            self.contains.push((parent.to_string(), qp));
        }
    }

    fn simple_targets(&self, node: Node<'a>, out: &mut Vec<Node<'a>>) {
        match node.kind() {
            "identifier" => out.push(node),
            "pattern_list" | "tuple_pattern" | "list_pattern" | "tuple" | "list" => {
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    self.simple_targets(child, out);
                }
            }
            _ => {}
        }
    }

    /// Variable entities for module-level import bindings: each binding
    /// renders as a normalized single-name import statement.
    fn add_import_entities(&mut self, parent: &str, stmt: Node<'a>) {
        for raw in parse_import(self.tree, stmt) {
            let Some(local) = raw.local_name.clone() else {
                continue;
            };
            let qp = format!("{parent}.{local}");
            if !self.claim(&qp) {
                continue;
            }
            let body = normalized_import(&raw, &local);
            self.entities.push(CodeEntity {
                qualified_path: qp.clone(),
                name: local,
                kind: EntityKind::Variable,
                file_path: self.file.repo_relative_path.clone(),
                start_line: Some(raw.line),
                end_line: Some(end_line(stmt)),
                signature: None,
                docstring: None,
                body: Some(body),
                indent: self.indent_of(raw.line),
                body_indent: String::new(),
                inline_body: false,
            });
            self.contains.push((parent.to_string(), qp));
        }
    }

    /// Raw imports are collected at any nesting depth (guarded and
    /// function-local imports still produce depends edges).
    fn collect_imports_anywhere(&mut self) {
        let mut imports = Vec::new();
        crate::syntax::walk(self.tree, |node| {
            if matches!(node.kind(), "import_statement" | "import_from_statement") {
                imports.extend(parse_import(self.tree, node));
            }
        });
        self.imports = imports;
    }
}

/// Decode one import statement into its per-name bindings.
pub fn parse_import(tree: &SyntaxTree, stmt: Node<'_>) -> Vec<RawImport> {
    let line = row_line(stmt);
    let mut out = Vec::new();
    match stmt.kind() {
        "import_statement" => {
            let mut cursor = stmt.walk();
            for name in stmt.children_by_field_name("name", &mut cursor) {
                match name.kind() {
                    "dotted_name" => {
                        let module = tree.node_text(name).to_string();
                        let local = module.split('.').next().unwrap_or("").to_string();
                        if !local.is_empty() {
                            out.push(RawImport {
                                line,
                                local_name: Some(local),
                                form: ImportForm::Plain { module },
                            });
                        }
                    }
                    "aliased_import" => {
                        let module = name
                            .child_by_field_name("name")
                            .map(|n| tree.node_text(n).to_string())
                            .unwrap_or_default();
                        let alias = name
                            .child_by_field_name("alias")
                            .map(|n| tree.node_text(n).to_string());
                        if let (false, Some(alias)) = (module.is_empty(), alias) {
                            out.push(RawImport {
                                line,
                                local_name: Some(alias),
                                form: ImportForm::Plain { module },
                            });
                        }
                    }
                    _ => {}
                }
            }
        }
        "import_from_statement" => {
            let (dots, module) = match stmt.child_by_field_name("module_name") {
                Some(m) if m.kind() == "relative_import" => {
                    let mut dots = 0u32;
                    let mut module = String::new();
                    let mut cursor = m.walk();
                    for child in m.named_children(&mut cursor) {
                        match child.kind() {
                            "import_prefix" => {
                                dots = tree.node_text(child).chars().count() as u32
                            }
                            "dotted_name" => module = tree.node_text(child).to_string(),
                            _ => {}
                        }
                    }
                    (dots, module)
                }
                Some(m) => (0, tree.node_text(m).to_string()),
                None => return out,
            };
            let mut starred = false;
            let mut cursor = stmt.walk();
            for child in stmt.children(&mut cursor) {
                if child.kind() == "wildcard_import" {
                    starred = true;
                }
            }
            if starred {
                out.push(RawImport {
                    line,
                    local_name: None,
                    form: ImportForm::Star { dots, module },
                });
                return out;
            }
            let mut cursor = stmt.walk();
            for name in stmt.children_by_field_name("name", &mut cursor) {
                match name.kind() {
                    "dotted_name" => {
                        let imported = tree.node_text(name).to_string();
                        let local = imported.split('.').last().unwrap_or("").to_string();
                        if !local.is_empty() {
                            out.push(RawImport {
                                line,
                                local_name: Some(local),
                                form: ImportForm::From {
                                    dots,
                                    module: module.clone(),
                                    name: imported,
                                },
                            });
                        }
                    }
                    "aliased_import" => {
                        let imported = name
                            .child_by_field_name("name")
                            .map(|n| tree.node_text(n).to_string())
                            .unwrap_or_default();
                        let alias = name
                            .child_by_field_name("alias")
                            .map(|n| tree.node_text(n).to_string());
                        if let (false, Some(alias)) = (imported.is_empty(), alias) {
                            out.push(RawImport {
                                line,
                                local_name: Some(alias),
                                form: ImportForm::From {
                                    dots,
                                    module: module.clone(),
                                    name: imported,
                                },
                            });
                        }
                    }
                    _ => {}
                }
            }
        }
        _ => {}
    }
    out
}

/// Re-render one import binding as a single-name statement.
fn normalized_import(raw: &RawImport, local: &str) -> String {
    match &raw.form {
        ImportForm::Plain { module } => {
            if module.split('.').next() == Some(local) {
                format!("import {module}")
            } else {
                format!("import {module} as {local}")
            }
        }
        ImportForm::From { dots, module, name } => {
            let rel = ".".repeat(*dots as usize);
            if name.split('.').last() == Some(local) {
                format!("from {rel}{module} import {name}")
            } else {
                format!("from {rel}{module} import {name} as {local}")
            }
        }
        ImportForm::Star { dots, module } => {
            let rel = ".".repeat(*dots as usize);
            format!("from {rel}{module} import *")
        }
    }
}

// ----- module path resolution ------------------------------------------

/// Filesystem-derived lookup table: module fs key → module qualified path.
pub(crate) struct FsIndex {
    map: BTreeMap<String, String>,
}

impl FsIndex {
    pub(crate) fn new(graph: &ContextGraph) -> Self {
        let mut map = BTreeMap::new();
        for (qp, record) in &graph.modules {
            let key = if record.synthetic {
                record.file_path.trim_end_matches('/').to_string()
            } else {
                fs_key_for(&record.file_path)
            };
            map.entry(key).or_insert_with(|| qp.clone());
        }
        FsIndex { map }
    }

    fn lookup(&self, key: &str) -> Option<&String> {
        self.map.get(key)
    }
}

fn dir_of(rel_path: &str) -> &str {
    match rel_path.rfind('/') {
        Some(i) => &rel_path[..i],
        None => "",
    }
}

/// Resolve an import's module component against the indexed tree.
/// Returns the deepest matching module and the unmatched trailing name
/// segments (to be matched down entity containment).
///
/// Absolute imports try the repository root first, then the importing
/// file's own directory (intra-package absolute imports). Relative imports
/// walk the directory tree by dot count.
pub(crate) fn resolve_module_and_name(
    fs: &FsIndex,
    importing_file: &str,
    dots: u32,
    module: &str,
    name: &str,
) -> Option<(String, Vec<String>)> {
    let mut bases: Vec<String> = Vec::new();
    if dots == 0 {
        bases.push(String::new());
        bases.push(dir_of(importing_file).to_string());
    } else {
        let mut base = dir_of(importing_file).to_string();
        let mut ok = true;
        for _ in 1..dots {
            if base.is_empty() {
                ok = false;
                break;
            }
            base = dir_of(&base).to_string();
        }
        if ok {
            bases.push(base);
        }
    }
    bases.dedup();

    let module_parts: Vec<&str> = module.split('.').filter(|p| !p.is_empty()).collect();
    let name_parts: Vec<&str> = name.split('.').filter(|p| !p.is_empty()).collect();
    let must = module_parts.len();
    let mut parts = module_parts;
    parts.extend(&name_parts);

    for base in bases {
        let key_of = |n: usize| -> String {
            let mut key = base.clone();
            for p in &parts[..n] {
                if !key.is_empty() {
                    key.push('/');
                }
                key.push_str(p);
            }
            key
        };
        // The module component must match fully against this base.
        if must > 0 && fs.lookup(&key_of(must)).is_none() {
            continue;
        }
        if must == 0 && dots > 0 && fs.lookup(&base).is_none() && parts.is_empty() {
            continue;
        }
        // Extend greedily: trailing name segments may address submodules.
        for k in (must..=parts.len()).rev() {
            if let Some(qp) = fs.lookup(&key_of(k)) {
                let remaining = parts[k..].iter().map(|s| s.to_string()).collect();
                return Some((qp.clone(), remaining));
            }
        }
    }
    None
}

/// Walk name segments down from a module entity; returns the deepest
/// matched entity path and how many segments matched.
pub(crate) fn descend_entity(
    graph: &ContextGraph,
    module_qp: &str,
    segments: &[String],
) -> (String, usize) {
    let mut current = module_qp.to_string();
    let mut matched = 0;
    for seg in segments {
        let candidate = format!("{current}.{seg}");
        if graph.entities.contains_key(&candidate) {
            current = candidate;
            matched += 1;
        } else {
            break;
        }
    }
    (current, matched)
}

// ----- repo assembly ---------------------------------------------------

/// All `.py` files under the root, repo-relative with forward slashes,
/// sorted. Hidden directories and `__pycache__` are skipped.
pub fn discover_python_files(root: &Path) -> Result<Vec<String>> {
    let mut files = Vec::new();
    let walker = walkdir::WalkDir::new(root)
        .follow_links(false)
        .into_iter()
        .filter_entry(|e| {
            let name = e.file_name().to_string_lossy();
            !(e.depth() > 0 && (name.starts_with('.') || name == "__pycache__"))
        });
    for entry in walker {
        let entry = entry.map_err(|e| crate::error::Error::Io {
            path: root.to_path_buf(),
            source: e.into(),
        })?;
        if entry.file_type().is_file()
            && entry.path().extension().map(|x| x == "py").unwrap_or(false)
        {
            let rel = entry
                .path()
                .strip_prefix(root)
                .unwrap_or(entry.path())
                .to_string_lossy()
                .replace('\\', "/");
            files.push(rel);
        }
    }
    files.sort();
    Ok(files)
}

/// Index a whole repository: parse files in parallel, merge in stable
/// order, then resolve imports into cross-file depends edges.
pub fn build_graph(root: &Path) -> Result<ContextGraph> {
    let files = discover_python_files(root)?;
    let indexed: Vec<(String, Result<FileIndex>)> = files
        .par_iter()
        .map(|rel| {
            let result =
                SourceFile::read(&root.join(rel), rel).and_then(|f| index_file(&f));
            (rel.clone(), result)
        })
        .collect();

    let mut graph = ContextGraph::new(root.display().to_string());
    let mut per_module_imports: BTreeMap<String, Vec<RawImport>> = BTreeMap::new();

    for (rel, result) in indexed {
        let fi = match result {
            Ok(fi) => fi,
            Err(err) => {
                graph.diagnostics.push(Diagnostic {
                    kind: DiagnosticKind::UnreadableFile,
                    file_path: rel,
                    line: None,
                    message: err.to_string(),
                });
                continue;
            }
        };
        merge_file(&mut graph, fi, &mut per_module_imports);
    }

    add_namespace_packages(&mut graph, &files);
    link_imports(&mut graph, &per_module_imports);
    Ok(graph)
}

/// Merge one file's index into the graph. A module file and a package
/// directory claiming the same dotted path collapse to the package
/// (mirroring import resolution order), with a diagnostic.
fn merge_file(
    graph: &mut ContextGraph,
    fi: FileIndex,
    per_module_imports: &mut BTreeMap<String, Vec<RawImport>>,
) {
    if let Some(existing) = graph.modules.get(&fi.module_path) {
        let new_is_package = fi.file_path.ends_with("/__init__.py");
        let diagnostic = Diagnostic {
            kind: DiagnosticKind::PathCollision,
            file_path: fi.file_path.clone(),
            line: None,
            message: format!(
                "module path {} already claimed by {}; package form wins",
                fi.module_path, existing.file_path
            ),
        };
        graph.diagnostics.push(diagnostic);
        if !new_is_package {
            return;
        }
        remove_module(graph, &fi.module_path);
        per_module_imports.remove(&fi.module_path);
    }

    if fi.parse_had_errors {
        graph.diagnostics.push(Diagnostic {
            kind: DiagnosticKind::SyntaxRecovered,
            file_path: fi.file_path.clone(),
            line: None,
            message: "file has syntax errors; entities recovered best-effort".to_string(),
        });
    }

    graph.modules.insert(
        fi.module_path.clone(),
        ModuleRecord {
            file_path: fi.file_path.clone(),
            line_count: fi.line_count,
            dfg_nodes: fi.dfg_nodes,
            dfg_triplets: fi.dfg_triplets,
            synthetic: false,
        },
    );
    for entity in fi.entities {
        let qp = entity.qualified_path.clone();
        if graph.entities.contains_key(&qp) {
            graph.diagnostics.push(Diagnostic {
                kind: DiagnosticKind::PathCollision,
                file_path: entity.file_path.clone(),
                line: entity.start_line,
                message: format!("qualified path {qp} already taken; keeping the first"),
            });
            continue;
        }
        graph.entities.insert(qp, entity);
    }
    for (parent, child) in fi.contains {
        if graph.entities.contains_key(&child) {
            graph.contains.entry(parent).or_default().push(child);
        }
    }
    for (from, to) in fi.depends {
        graph.add_depends(&from, &to);
    }
    per_module_imports.insert(fi.module_path, fi.imports);
}

fn remove_module(graph: &mut ContextGraph, module_qp: &str) {
    let prefix = format!("{module_qp}.");
    let is_member = |qp: &str| qp == module_qp || qp.starts_with(&prefix);
    graph.entities.retain(|qp, _| !is_member(qp));
    graph.contains.retain(|qp, _| !is_member(qp));
    for children in graph.contains.values_mut() {
        children.retain(|c| !is_member(c));
    }
    graph.depends.retain(|qp, _| !is_member(qp));
    for targets in graph.depends.values_mut() {
        targets.retain(|t| !is_member(t));
    }
    graph.modules.remove(module_qp);
}

/// Directories holding Python files but no `__init__.py` become synthetic
/// namespace-package modules so `import pkg` has something to point at.
fn add_namespace_packages(graph: &mut ContextGraph, files: &[String]) {
    let have_init: BTreeSet<&str> = files
        .iter()
        .filter_map(|f| f.strip_suffix("/__init__.py"))
        .collect();
    let mut dirs = BTreeSet::new();
    for f in files {
        let mut dir = dir_of(f);
        while !dir.is_empty() {
            dirs.insert(dir.to_string());
            dir = dir_of(dir);
        }
    }
    for dir in dirs {
        if have_init.contains(dir.as_str()) {
            continue;
        }
        let qp = dir.replace('/', ".");
        if graph.modules.contains_key(&qp) || graph.entities.contains_key(&qp) {
            continue;
        }
        graph.modules.insert(
            qp.clone(),
            ModuleRecord {
                file_path: format!("{dir}/"),
                line_count: 0,
                dfg_nodes: 0,
                dfg_triplets: 0,
                synthetic: true,
            },
        );
        graph.entities.insert(
            qp.clone(),
            CodeEntity {
                qualified_path: qp.clone(),
                name: qp,
                kind: EntityKind::Module,
                file_path: format!("{dir}/"),
                start_line: None,
                end_line: None,
                signature: None,
                docstring: None,
                body: None,
                indent: String::new(),
                body_indent: String::new(),
                inline_body: false,
            },
        );
    }
}

/// Resolve every module's raw imports into cross-file depends edges.
/// Local targets get an edge from the importing binding (or the innermost
/// enclosing entity for nested imports); external imports are silent;
/// unresolvable local-looking imports leave a dangling-import diagnostic.
pub fn link_imports(
    graph: &mut ContextGraph,
    per_module_imports: &BTreeMap<String, Vec<RawImport>>,
) {
    let fs = FsIndex::new(graph);
    let mut new_edges: Vec<(String, String)> = Vec::new();
    let mut diagnostics: Vec<Diagnostic> = Vec::new();

    for (module_qp, imports) in per_module_imports {
        let Some(record) = graph.modules.get(module_qp) else {
            continue;
        };
        let file_path = record.file_path.clone();
        let module_entities: Vec<&CodeEntity> = graph
            .entities
            .values()
            .filter(|e| e.file_path == file_path && e.kind != EntityKind::Module)
            .collect();

        for raw in imports {
            let (dots, module, name) = match &raw.form {
                ImportForm::Plain { module } => (0u32, module.as_str(), ""),
                ImportForm::From { dots, module, name } => {
                    (*dots, module.as_str(), name.as_str())
                }
                ImportForm::Star { dots, module } => (*dots, module.as_str(), ""),
            };
            let resolved = resolve_module_and_name(&fs, &file_path, dots, module, name);
            let Some((target_module, remaining)) = resolved else {
                if dots > 0 {
                    diagnostics.push(Diagnostic {
                        kind: DiagnosticKind::DanglingImport,
                        file_path: file_path.clone(),
                        line: Some(raw.line),
                        message: format!(
                            "relative import target not found: {}{}",
                            ".".repeat(dots as usize),
                            module
                        ),
                    });
                }
                continue;
            };
            let (target, matched) = descend_entity(graph, &target_module, &remaining);
            if matched < remaining.len() {
                diagnostics.push(Diagnostic {
                    kind: DiagnosticKind::DanglingImport,
                    file_path: file_path.clone(),
                    line: Some(raw.line),
                    message: format!(
                        "imported name {} not found in {}; linking to {}",
                        name, target_module, target
                    ),
                });
            }
            let source = match &raw.local_name {
                // Star import: the module itself depends on the target.
                None => module_qp.clone(),
                Some(local) => {
                    let binding = format!("{module_qp}.{local}");
                    if graph.entities.contains_key(&binding) {
                        binding
                    } else {
                        // Nested import: attribute to the innermost
                        // enclosing entity, else the module.
                        module_entities
                            .iter()
                            .filter(|e| {
                                e.start_line.unwrap_or(0) <= raw.line
                                    && raw.line <= e.end_line.unwrap_or(0)
                            })
                            .max_by_key(|e| e.start_line.unwrap_or(0))
                            .map(|e| e.qualified_path.clone())
                            .unwrap_or_else(|| module_qp.clone())
                    }
                }
            };
            new_edges.push((source, target));
        }
    }

    for (from, to) in new_edges {
        if graph.entities.contains_key(&to) {
            graph.add_depends(&from, &to);
        }
    }
    graph.diagnostics.extend(diagnostics);
}
