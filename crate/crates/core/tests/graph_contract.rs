//! Contract tests for graph construction and persistence: the containment
//! forest shape, collision handling, import linking across files, and the
//! save/load round trip with its failure modes.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use repoctx_core::entity::EntityKind;
use repoctx_core::error::Error;
use repoctx_core::graph::{ContextGraph, DiagnosticKind};
use repoctx_core::index::build_graph;

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

fn package_repo() -> (tempfile::TempDir, PathBuf) {
    fixture_repo(&[
        (
            "pkg/__init__.py",
            "\"\"\"A small package.\"\"\"\n\nfrom .core import Engine\n",
        ),
        (
            "pkg/core.py",
            "from .parts import Piston\n\nclass Engine:\n    \"\"\"Turns fuel into motion.\"\"\"\n\n    def build(self):\n        return Piston()\n",
        ),
        (
            "pkg/parts.py",
            "class Piston:\n    def stroke(self):\n        return 1\n",
        ),
        (
            "tools/report.py",
            "from pkg.core import Engine\n\ndef summarize():\n    engine = Engine()\n    return engine\n",
        ),
    ])
}

/// Structural invariants: containment is a forest rooted at modules, every
/// non-module entity has exactly one parent, and dependency endpoints are
/// real entities.
fn assert_well_formed(graph: &ContextGraph) {
    let mut parents: std::collections::BTreeMap<&str, Vec<&str>> = Default::default();
    for (parent, children) in &graph.contains {
        assert!(
            graph.entity(parent).is_some(),
            "contains parent {parent} is not an entity"
        );
        for child in children {
            assert!(
                graph.entity(child).is_some(),
                "contains child {child} is not an entity"
            );
            parents.entry(child).or_default().push(parent);
        }
    }
    for (qp, entity) in &graph.entities {
        let parent_list = parents.get(qp.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        match entity.kind {
            EntityKind::Module => assert!(
                parent_list.is_empty(),
                "module {qp} must be a containment root, has parents {parent_list:?}"
            ),
            _ => assert_eq!(
                parent_list.len(),
                1,
                "{qp} must have exactly one parent, has {parent_list:?}"
            ),
        }
    }
    for (from, targets) in &graph.depends {
        assert!(graph.entity(from).is_some(), "depends source {from} missing");
        for to in targets {
            assert!(graph.entity(to).is_some(), "depends target {to} missing");
        }
    }
    // No containment cycles: walking up from any entity terminates at a
    // module.
    for qp in graph.entities.keys() {
        let mut current = qp.as_str();
        let mut hops = 0;
        while let Some(parent_list) = parents.get(current) {
            current = parent_list[0];
            hops += 1;
            assert!(hops <= graph.entities.len(), "containment cycle at {qp}");
        }
        assert_eq!(
            graph.entity(current).map(|e| e.kind),
            Some(EntityKind::Module),
            "containment chain of {qp} ends at non-module {current}"
        );
    }
}

#[test]
fn package_graph_is_well_formed_and_complete() {
    let (_dir, root) = package_repo();
    let graph = build_graph(&root).expect("graph");
    assert_well_formed(&graph);
    for qp in [
        "pkg",
        "pkg.core",
        "pkg.core.Engine",
        "pkg.core.Engine.build",
        "pkg.parts",
        "pkg.parts.Piston",
        "tools",
        "tools.report",
        "tools.report.summarize",
    ] {
        assert!(graph.entity(qp).is_some(), "missing entity {qp}");
    }
    // Cross-package import linked: the report module's import binding
    // depends on the Engine class.
    let binding = graph.entity("tools.report.Engine").expect("import binding");
    assert_eq!(binding.kind, EntityKind::Variable);
    let deps: BTreeSet<&String> = graph.depends_on("tools.report.Engine").collect();
    assert!(
        deps.iter().any(|d| d.as_str() == "pkg.core.Engine"),
        "import binding should depend on the class, got {deps:?}"
    );
    // Relative import inside the package resolved the same way.
    let deps: BTreeSet<&String> = graph.depends_on("pkg.core.Piston").collect();
    assert!(deps.iter().any(|d| d.as_str() == "pkg.parts.Piston"));
}

#[test]
fn plain_module_loses_to_package_with_diagnostic() {
    let (_dir, root) = fixture_repo(&[
        ("pkg.py", "VALUE = 1\n"),
        ("pkg/__init__.py", "\"\"\"The package form.\"\"\"\n"),
        ("pkg/inner.py", "INNER = 2\n"),
    ]);
    let graph = build_graph(&root).expect("graph");
    assert_well_formed(&graph);
    let module = graph.modules.get("pkg").expect("pkg module record");
    assert_eq!(module.file_path, "pkg/__init__.py");
    assert!(graph.entity("pkg.inner.INNER").is_some());
    assert!(
        graph
            .diagnostics
            .iter()
            .any(|d| d.kind == DiagnosticKind::PathCollision),
        "collision should be diagnosed: {:?}",
        graph.diagnostics
    );
}

#[test]
fn namespace_directory_gets_a_synthetic_module() {
    let (_dir, root) = fixture_repo(&[("ns/util/helpers.py", "def helper():\n    return 1\n")]);
    let graph = build_graph(&root).expect("graph");
    assert_well_formed(&graph);
    for qp in ["ns", "ns.util"] {
        let record = graph.modules.get(qp).expect("synthetic module");
        assert!(record.synthetic, "{qp} should be synthetic");
        assert!(graph.entity(qp).is_some());
    }
    assert!(graph.entity("ns.util.helpers.helper").is_some());
}

#[test]
fn empty_repository_builds_an_empty_graph() {
    let dir = tempfile::tempdir().expect("tempdir");
    let graph = build_graph(dir.path()).expect("graph");
    let stats = graph.stats();
    assert_eq!(stats.files, 0);
    assert_eq!(stats.modules, 0);
    assert_eq!(format!("{stats}").lines().next(), Some("files: 0"));
}

#[test]
fn save_load_round_trip_preserves_everything() {
    let (_dir, root) = package_repo();
    let graph = build_graph(&root).expect("graph");
    let out = tempfile::tempdir().expect("tempdir");
    let path = out.path().join("graph.json");
    graph.save(&path).expect("save");
    let loaded = ContextGraph::load(&path).expect("load");
    assert_eq!(graph, loaded);
    assert_eq!(format!("{}", graph.stats()), format!("{}", loaded.stats()));
}

#[test]
fn corrupt_graph_file_is_a_format_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("graph.json");
    fs::write(&path, "{\"schema\": 1, \"root\": ").expect("write");
    match ContextGraph::load(&path) {
        Err(Error::GraphFormat { .. }) => {}
        other => panic!("expected GraphFormat, got {other:?}"),
    }
}

#[test]
fn wrong_schema_version_is_a_version_error() {
    let (_dir, root) = package_repo();
    let graph = build_graph(&root).expect("graph");
    let out = tempfile::tempdir().expect("tempdir");
    let path = out.path().join("graph.json");
    graph.save(&path).expect("save");
    let mut value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).expect("read")).expect("json");
    value["schema"] = serde_json::json!(99);
    fs::write(&path, serde_json::to_string(&value).expect("serialize")).expect("rewrite");
    match ContextGraph::load(&path) {
        Err(Error::GraphVersion { found, supported, .. }) => {
            assert_eq!(found, 99);
            assert_eq!(supported, 1);
        }
        other => panic!("expected GraphVersion, got {other:?}"),
    }
}

#[test]
fn missing_graph_file_is_an_io_error() {
    match ContextGraph::load(Path::new("/nonexistent/graph.json")) {
        Err(Error::Io { .. }) => {}
        other => panic!("expected Io, got {other:?}"),
    }
}

#[test]
fn rebuilding_the_same_tree_is_identical() {
    let (_dir, root) = package_repo();
    let first = build_graph(&root).expect("graph");
    let second = build_graph(&root).expect("graph");
    assert_eq!(first, second);
}
