//! Retrieval: map the unfinished file's imports and cursor-line dataflow
//! to context-graph entities, split into the relevant set E_r and the
//! other-imports set E_o, each with its dependency closure.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::dataflow::{build_dfg, expand_refers, last_line_dependencies, DataflowGraph};
use crate::entity::CodeEntity;
use crate::error::Result;
use crate::graph::ContextGraph;
use crate::index::{
    descend_entity, parse_import, resolve_module_and_name, FsIndex, ImportForm, RawImport,
};
use crate::source::SourceFile;
use crate::syntax::{parse, walk, SyntaxTree};

/// Fine-grained import information: one (module, name) pair per imported
/// name, multiplied by the attribute chains observed on it in the
/// unfinished code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ImportInfo {
    /// Module component as written in the import statement (no leading
    /// dots; see `dots`).
    pub module: String,
    /// Dotted name under the module ("" for the module itself), in target
    /// form: aliases are swapped back to the imported name.
    pub name: String,
    /// 1-based line of the import statement.
    pub origin_line: u32,
    /// Relative-import depth (0 for absolute imports).
    pub dots: u32,
    /// The chain as it appears locally in the file's dataflow ("" for
    /// star imports, which bind nothing).
    pub local_name: String,
    /// Repo-relative path of the importing file, for path arithmetic.
    pub importing_file: String,
}

/// One import info after resolution against the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedImport {
    pub info: ImportInfo,
    /// Qualified path of the resolved entity; `None` = external, dropped.
    pub entity: Option<String>,
    /// Whether the import participates in the cursor line's dataflow.
    pub relevant: bool,
}

/// The retrieval output: ordered entity partitions plus closures.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RetrievalResult {
    /// E_r: entities whose imports have data relations with the cursor
    /// line, ascending by import origin line (ties by qualified path).
    pub relevant: Vec<String>,
    /// E_o: all other resolved local-import entities, same ordering.
    pub other: Vec<String>,
    /// Dependency closure of every listed entity (DFS preorder, entity
    /// itself excluded).
    pub dependency_closure: BTreeMap<String, Vec<String>>,
    /// Every collected import with its resolution, for debug output.
    pub imports: Vec<ResolvedImport>,
}

impl RetrievalResult {
    /// Line-oriented debug rendering of the resolved imports and the
    /// partition.
    pub fn debug_text(&self) -> String {
        let mut out = String::new();
        for r in &self.imports {
            let target = r.entity.as_deref().unwrap_or("<external>");
            let mark = if r.relevant { "relevant" } else { "other" };
            out.push_str(&format!(
                "({}, {}) @{} -> {} [{}]\n",
                r.info.module,
                if r.info.name.is_empty() { "<module>" } else { &r.info.name },
                r.info.origin_line,
                target,
                mark
            ));
        }
        out.push_str(&format!("E_r: {}\n", self.relevant.join(", ")));
        out.push_str(&format!("E_o: {}\n", self.other.join(", ")));
        out
    }
}

/// Collect fine-grained import information from an unfinished file: one
/// entry per imported name per import statement, expanded with the
/// attribute chains the dataflow graph observed on the binding.
pub fn collect_imports(unfinished: &SourceFile) -> Result<Vec<ImportInfo>> {
    let tree = parse(unfinished)?;
    let dfg = build_dfg(&tree);
    Ok(collect_imports_inner(unfinished, &tree, &dfg)
        .into_iter()
        .map(|(info, _)| info)
        .collect())
}

/// Inner form returning (info, base-binding local name) pairs; the base
/// name drives E_r membership for all expansions of one import.
fn collect_imports_inner(
    unfinished: &SourceFile,
    tree: &SyntaxTree,
    dfg: &DataflowGraph,
) -> Vec<(ImportInfo, String)> {
    let mut raws: Vec<RawImport> = Vec::new();
    walk(tree, |node| {
        if matches!(node.kind(), "import_statement" | "import_from_statement") {
            raws.extend(parse_import(tree, node));
        }
    });

    let file = unfinished.repo_relative_path.clone();
    let mut out = Vec::new();
    for raw in raws {
        match (&raw.local_name, &raw.form) {
            (None, ImportForm::Star { dots, module }) => {
                out.push((
                    ImportInfo {
                        module: module.clone(),
                        name: String::new(),
                        origin_line: raw.line,
                        dots: *dots,
                        local_name: String::new(),
                        importing_file: file.clone(),
                    },
                    String::new(),
                ));
            }
            (Some(local), form) => {
                let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
                for chain in expand_refers(dfg, local) {
                    let suffix = chain
                        .strip_prefix(local.as_str())
                        .unwrap_or("")
                        .to_string();
                    let (module, name, dots) = match form {
                        ImportForm::Plain { module } => {
                            let full = &chain;
                            let name = full
                                .strip_prefix(module.as_str())
                                .and_then(|rest| rest.strip_prefix('.'))
                                .unwrap_or("")
                                .to_string();
                            (module.clone(), name, 0)
                        }
                        ImportForm::From { dots, module, name } => {
                            (module.clone(), format!("{name}{suffix}"), *dots)
                        }
                        ImportForm::Star { .. } => continue,
                    };
                    if !seen.insert((module.clone(), name.clone())) {
                        continue;
                    }
                    out.push((
                        ImportInfo {
                            module,
                            name,
                            origin_line: raw.line,
                            dots,
                            local_name: chain,
                            importing_file: file.clone(),
                        },
                        local.clone(),
                    ));
                }
            }
            _ => {}
        }
    }
    out
}

/// Resolve one import info to its context-graph entity: the module
/// component via directory arithmetic, then the name segments down
/// containment; the deepest match wins, external imports return nothing.
pub fn resolve<'g>(info: &ImportInfo, graph: &'g ContextGraph) -> Option<&'g CodeEntity> {
    let fs = FsIndex::new(graph);
    resolve_with(&fs, info, graph)
}

fn resolve_with<'g>(
    fs: &FsIndex,
    info: &ImportInfo,
    graph: &'g ContextGraph,
) -> Option<&'g CodeEntity> {
    let (module_qp, remaining) = resolve_module_and_name(
        fs,
        &info.importing_file,
        info.dots,
        &info.module,
        &info.name,
    )?;
    let (target, _) = descend_entity(graph, &module_qp, &remaining);
    graph.entity(&target)
}

/// All entities reachable from `start` along depends edges, walking into
/// contained members (a class's dependencies include those of its
/// methods). DFS preorder, cycle-safe, `start` itself excluded.
pub fn dependency_closure(graph: &ContextGraph, start: &str) -> Vec<String> {
    let mut visited: BTreeSet<String> = BTreeSet::new();
    visited.insert(start.to_string());
    let mut order = Vec::new();
    let mut stack = successors(graph, start);
    stack.reverse();
    while let Some(qp) = stack.pop() {
        if !visited.insert(qp.clone()) {
            continue;
        }
        let mut next = successors(graph, &qp);
        next.reverse();
        order.push(qp);
        stack.extend(next);
    }
    order
}

/// Sorted union of depends targets and contained children.
fn successors(graph: &ContextGraph, qp: &str) -> Vec<String> {
    let mut set: BTreeSet<&str> = graph.depends_on(qp).map(|s| s.as_str()).collect();
    for child in graph.children(qp) {
        set.insert(child);
    }
    set.into_iter().map(|s| s.to_string()).collect()
}

/// Retrieve context for an unfinished file at a cursor position
/// (1-based line and column; `None` = end of file). The file is truncated
/// at the cursor; its dataflow decides which imports are relevant.
pub fn retrieve(
    unfinished: &SourceFile,
    cursor: Option<(u32, u32)>,
    graph: &ContextGraph,
) -> Result<RetrievalResult> {
    let (truncated, cursor_line);
    match cursor {
        Some((line, column)) => {
            truncated = unfinished.truncated_at(line, column)?;
            cursor_line = line;
        }
        None => {
            truncated = unfinished.clone();
            cursor_line = unfinished.line_count.max(1);
        }
    }
    let tree = parse(&truncated)?;
    let dfg = build_dfg(&tree);
    let dep_names: BTreeSet<String> = last_line_dependencies(&dfg, cursor_line)
        .into_iter()
        .map(|n| n.name)
        .collect();
    let participates = |local: &str| -> bool {
        !local.is_empty()
            && dep_names
                .iter()
                .any(|n| n == local || n.strip_prefix(local).is_some_and(|r| r.starts_with('.')))
    };

    let fs = FsIndex::new(graph);
    let mut resolved: Vec<ResolvedImport> = Vec::new();
    for (info, base_local) in collect_imports_inner(&truncated, &tree, &dfg) {
        let entity = resolve_with(&fs, &info, graph).map(|e| e.qualified_path.clone());
        let relevant = entity.is_some() && participates(&base_local);
        resolved.push(ResolvedImport {
            info,
            entity,
            relevant,
        });
    }

    // Order by import origin line, ties by target qualified path.
    let mut ordered: Vec<&ResolvedImport> =
        resolved.iter().filter(|r| r.entity.is_some()).collect();
    ordered.sort_by(|a, b| {
        (a.info.origin_line, a.entity.as_ref())
            .cmp(&(b.info.origin_line, b.entity.as_ref()))
    });

    let mut relevant = Vec::new();
    let mut relevant_set = BTreeSet::new();
    for r in ordered.iter().filter(|r| r.relevant) {
        let qp = r.entity.clone().unwrap();
        if relevant_set.insert(qp.clone()) {
            relevant.push(qp);
        }
    }
    let mut other = Vec::new();
    let mut other_set = BTreeSet::new();
    for r in ordered.iter().filter(|r| !r.relevant) {
        let qp = r.entity.clone().unwrap();
        if !relevant_set.contains(&qp) && other_set.insert(qp.clone()) {
            other.push(qp);
        }
    }

    let mut dependency_closure_map = BTreeMap::new();
    for qp in relevant.iter().chain(other.iter()) {
        dependency_closure_map.insert(qp.clone(), dependency_closure(graph, qp));
    }

    Ok(RetrievalResult {
        relevant,
        other,
        dependency_closure: dependency_closure_map,
        imports: resolved,
    })
}
