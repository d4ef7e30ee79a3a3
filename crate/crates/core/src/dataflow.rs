//! Type-sensitive dataflow extraction from (possibly unfinished) Python.
//!
//! The graph tracks five relations between name occurrences:
//!
//! - `Assigns`: `v = u` — the value of `u` becomes `v`
//! - `As`: `with f() as v` / `except E as e` — aliasing introductions
//! - `Refers`: `u.v` — attribute access on an existing name
//! - `Typeof`: `def f() -> T`, `x: T` — explicit type hints
//! - `Inherits`: `class C(B)` — base classes
//!
//! Nodes are identified by (dotted name, 1-based line). A read of a name
//! resolves to its most recent prior occurrence (flat per-file scoping); a
//! definition always creates a fresh node, so reassignment like `x = x + 1`
//! produces an edge between two distinct `x` nodes and the graph stays
//! acyclic. Call arguments are type-insensitive and contribute no edge to
//! the call's assignment target.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use crate::syntax::SyntaxTree;

/// Relation kinds of the dataflow graph.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Assigns,
    As,
    Refers,
    Typeof,
    Inherits,
}

impl std::fmt::Display for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Relation::Assigns => "assigns",
            Relation::As => "as",
            Relation::Refers => "refers",
            Relation::Typeof => "typeof",
            Relation::Inherits => "inherits",
        };
        f.write_str(s)
    }
}

/// One occurrence of a (possibly dotted) name at a 1-based line.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct DfgNode {
    pub name: String,
    pub line: u32,
}

impl DfgNode {
    pub fn new(name: impl Into<String>, line: u32) -> Self {
        DfgNode {
            name: name.into(),
            line,
        }
    }
}

/// A directed, labeled edge: `head --relation--> tail`.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct DfgTriplet {
    pub head: DfgNode,
    pub relation: Relation,
    pub tail: DfgNode,
}

/// The extracted dataflow graph of one file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataflowGraph {
    pub nodes: BTreeSet<DfgNode>,
    pub triplets: BTreeSet<DfgTriplet>,
    /// For each 1-based line, the nodes referenced or introduced by that
    /// line (reads resolve to their referent, which may live on an earlier
    /// line). This is what anchors cursor-line queries.
    pub touched: BTreeMap<u32, BTreeSet<DfgNode>>,
}

impl DataflowGraph {
    /// Sorted, line-oriented rendering of the triplets, for debugging.
    pub fn to_debug_string(&self) -> String {
        let mut out = String::new();
        for t in &self.triplets {
            out.push_str(&format!(
                "({}@{}, {}, {}@{})\n",
                t.head.name, t.head.line, t.relation, t.tail.name, t.tail.line
            ));
        }
        out
    }
}

/// All nodes from which any node touched on `cursor_line` is reachable,
/// following edges backward; includes the touched nodes themselves. A line
/// touching nothing yields the empty set.
pub fn last_line_dependencies(graph: &DataflowGraph, cursor_line: u32) -> BTreeSet<DfgNode> {
    let seeds = match graph.touched.get(&cursor_line) {
        Some(s) if !s.is_empty() => s.clone(),
        _ => return BTreeSet::new(),
    };
    let mut preds: BTreeMap<&DfgNode, Vec<&DfgNode>> = BTreeMap::new();
    for t in &graph.triplets {
        preds.entry(&t.tail).or_default().push(&t.head);
    }
    let mut result = seeds.clone();
    let mut stack: Vec<DfgNode> = seeds.into_iter().collect();
    while let Some(node) = stack.pop() {
        if let Some(ps) = preds.get(&node) {
            for p in ps {
                if result.insert((*p).clone()) {
                    stack.push((*p).clone());
                }
            }
        }
    }
    result
}

/// Expand a name to the attribute chains observed on it in the graph.
///
/// Attribute suffixes are accumulated along `Refers` edges. Value-aliasing
/// edges (`Typeof`, `Assigns`, `As`) carry the current suffix position to
/// the aliased node, so an access like `signal.getSignalByName` on a
/// variable annotated `signal: RecordSignal` surfaces as
/// `RecordSignal.getSignalByName`. `Inherits` is not followed (a derived
/// class's attributes say nothing about its base). Unknown names expand to
/// themselves.
pub fn expand_refers(graph: &DataflowGraph, name: &str) -> BTreeSet<String> {
    let mut result = BTreeSet::new();
    result.insert(name.to_string());

    let prefix = format!("{name}.");
    let mut worklist: Vec<(&DfgNode, String)> = Vec::new();
    let mut seen: BTreeSet<(&DfgNode, String)> = BTreeSet::new();
    for node in &graph.nodes {
        let suffix = if node.name == name {
            String::new()
        } else if let Some(rest) = node.name.strip_prefix(&prefix) {
            format!(".{rest}")
        } else {
            continue;
        };
        result.insert(format!("{name}{suffix}"));
        if seen.insert((node, suffix.clone())) {
            worklist.push((node, suffix));
        }
    }

    let mut by_head: BTreeMap<&DfgNode, Vec<&DfgTriplet>> = BTreeMap::new();
    for t in &graph.triplets {
        by_head.entry(&t.head).or_default().push(t);
    }

    while let Some((node, suffix)) = worklist.pop() {
        let Some(edges) = by_head.get(node) else {
            continue;
        };
        for t in edges {
            match t.relation {
                Relation::Refers => {
                    let head_prefix = format!("{}.", node.name);
                    if let Some(attr) = t.tail.name.strip_prefix(&head_prefix) {
                        let next = format!("{suffix}.{attr}");
                        result.insert(format!("{name}{next}"));
                        if seen.insert((&t.tail, next.clone())) {
                            worklist.push((&t.tail, next));
                        }
                    }
                }
                Relation::Typeof | Relation::Assigns | Relation::As => {
                    if seen.insert((&t.tail, suffix.clone())) {
                        worklist.push((&t.tail, suffix.clone()));
                    }
                }
                Relation::Inherits => {}
            }
        }
    }
    result
}

/// Build the dataflow graph of a parsed file.
pub fn build_dfg(tree: &SyntaxTree) -> DataflowGraph {
    let mut builder = Builder {
        tree,
        graph: DataflowGraph::default(),
        last: HashMap::new(),
    };
    builder.process_block(tree.root());
    builder.graph
}

struct Builder<'t> {
    tree: &'t SyntaxTree,
    graph: DataflowGraph,
    /// Most recent occurrence line per name (flat per-file scoping).
    last: HashMap<String, u32>,
}

fn line_of(node: Node<'_>) -> u32 {
    node.start_position().row as u32 + 1
}

impl<'t> Builder<'t> {
    fn text(&self, node: Node<'t>) -> &'t str {
        self.tree.node_text(node)
    }

    fn touch(&mut self, line: u32, node: &DfgNode) {
        self.graph
            .touched
            .entry(line)
            .or_default()
            .insert(node.clone());
    }

    /// Get-or-create the node (name, line); records it as the most recent
    /// occurrence of the name.
    fn node_at(&mut self, name: &str, line: u32) -> DfgNode {
        let node = DfgNode::new(name, line);
        self.graph.nodes.insert(node.clone());
        self.last.insert(name.to_string(), line);
        self.touch(line, &node);
        node
    }

    /// A read of `name` at `line` resolves to its most recent prior
    /// occurrence; a never-seen name materializes at the read site.
    fn resolve_read(&mut self, name: &str, line: u32) -> DfgNode {
        if let Some(&prior) = self.last.get(name) {
            let node = DfgNode::new(name, prior);
            self.touch(line, &node);
            node
        } else {
            self.node_at(name, line)
        }
    }

    /// A definition of `name` at `line` always stands for a node at that
    /// line (fresh unless the same line already introduced one).
    fn define(&mut self, name: &str, line: u32) -> DfgNode {
        self.node_at(name, line)
    }

    fn add(&mut self, head: &DfgNode, relation: Relation, tail: &DfgNode) {
        if head == tail {
            return;
        }
        // Every edge runs from an earlier-or-equal line to a later-or-equal
        // one, so the only way a cycle could form is among nodes of a single
        // line — degenerate code like `b = b.a` with no prior `b`, where the
        // read and the definition collapse into one node. Refuse the edge
        // that would close such a loop; the graph stays a DAG.
        if head.line == tail.line && self.reaches_on_line(tail, head) {
            return;
        }
        self.graph.triplets.insert(DfgTriplet {
            head: head.clone(),
            relation,
            tail: tail.clone(),
        });
    }

    /// True when `from` already reaches `to` along edges of their shared
    /// line. Cross-line hops can never lead back, so the walk stays local.
    fn reaches_on_line(&self, from: &DfgNode, to: &DfgNode) -> bool {
        let line = from.line;
        let mut stack = vec![from.clone()];
        let mut seen: std::collections::BTreeSet<DfgNode> = std::collections::BTreeSet::new();
        while let Some(node) = stack.pop() {
            if node == *to {
                return true;
            }
            if !seen.insert(node.clone()) {
                continue;
            }
            for t in &self.graph.triplets {
                if t.head == node && t.tail.line == line {
                    stack.push(t.tail.clone());
                }
            }
        }
        false
    }

    // ----- expressions -------------------------------------------------

    /// Extract the dotted identifier chain of an expression, if it is one
    /// (`a`, `a.b`, `a.b.c`). A missing trailing attribute (as produced by
    /// an unfinished `name.`) truncates the chain instead of failing it.
    fn dotted_parts(&self, node: Node<'t>) -> Option<Vec<&'t str>> {
        match node.kind() {
            "identifier" => Some(vec![self.text(node)]),
            "attribute" => {
                let object = node.child_by_field_name("object")?;
                let mut parts = self.dotted_parts(object)?;
                if let Some(attr) = node.child_by_field_name("attribute") {
                    let t = self.text(attr);
                    if !attr.is_missing() && !t.is_empty() {
                        parts.push(t);
                    }
                }
                Some(parts)
            }
            _ => None,
        }
    }

    /// Process a read of a dotted chain: the base resolves to its prior
    /// occurrence, each attribute step materializes at the occurrence line
    /// with a Refers edge. Returns the deepest node of the chain.
    fn chain_read(&mut self, parts: &[&str], line: u32) -> DfgNode {
        let mut current = self.resolve_read(parts[0], line);
        let mut name = parts[0].to_string();
        for part in &parts[1..] {
            name = format!("{name}.{part}");
            let ext = self.node_at(&name, line);
            self.add(&current, Relation::Refers, &ext);
            current = ext;
        }
        current
    }

    /// Read an expression for its side effects only (touches, Refers edges,
    /// nested bindings); the type-insensitive position discards sources.
    fn read_expr(&mut self, node: Node<'t>) {
        let _ = self.sources(node);
    }

    /// Process an expression in value position and return its
    /// type-sensitive source nodes (the nodes an `Assigns`/`As` edge should
    /// originate from). Literals and call arguments contribute none.
    fn sources(&mut self, node: Node<'t>) -> Vec<DfgNode> {
        match node.kind() {
            "identifier" => vec![self.resolve_read(self.text(node), line_of(node))],
            "attribute" => {
                if let Some(parts) = self.dotted_parts(node) {
                    vec![self.chain_read(&parts, line_of(node))]
                } else {
                    if let Some(object) = node.child_by_field_name("object") {
                        self.read_expr(object);
                    }
                    Vec::new()
                }
            }
            "call" => {
                let srcs = node
                    .child_by_field_name("function")
                    .map(|f| self.sources(f))
                    .unwrap_or_default();
                if let Some(args) = node.child_by_field_name("arguments") {
                    let mut cursor = args.walk();
                    for arg in args.named_children(&mut cursor) {
                        match arg.kind() {
                            "keyword_argument" => {
                                if let Some(v) = arg.child_by_field_name("value") {
                                    self.read_expr(v);
                                }
                            }
                            _ => self.read_expr(arg),
                        }
                    }
                }
                srcs
            }
            "binary_operator" | "boolean_operator" => {
                let mut srcs = Vec::new();
                if let Some(l) = node.child_by_field_name("left") {
                    srcs.extend(self.sources(l));
                }
                if let Some(r) = node.child_by_field_name("right") {
                    srcs.extend(self.sources(r));
                }
                srcs
            }
            "comparison_operator" => {
                let mut srcs = Vec::new();
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    srcs.extend(self.sources(child));
                }
                srcs
            }
            "unary_operator" | "not_operator" => node
                .child_by_field_name("argument")
                .map(|a| self.sources(a))
                .unwrap_or_default(),
            "await" => {
                let mut srcs = Vec::new();
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    srcs.extend(self.sources(child));
                }
                srcs
            }
            "parenthesized_expression" | "expression_list" | "tuple" | "list" | "set" => {
                let mut srcs = Vec::new();
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    srcs.extend(self.sources(child));
                }
                srcs
            }
            "conditional_expression" => {
                // consequence `if` condition `else` alternative
                let mut named = Vec::new();
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    named.push(child);
                }
                let mut srcs = Vec::new();
                if let Some(c) = named.first() {
                    srcs.extend(self.sources(*c));
                }
                if let Some(cond) = named.get(1) {
                    self.read_expr(*cond);
                }
                if let Some(alt) = named.get(2) {
                    srcs.extend(self.sources(*alt));
                }
                srcs
            }
            "subscript" => {
                let srcs = node
                    .child_by_field_name("value")
                    .map(|v| self.sources(v))
                    .unwrap_or_default();
                let mut cursor = node.walk();
                for child in node.children_by_field_name("subscript", &mut cursor) {
                    self.read_expr(child);
                }
                srcs
            }
            "named_expression" => {
                // walrus: name := value — binds like an assignment, and the
                // expression's value is the bound name.
                let srcs = node
                    .child_by_field_name("value")
                    .map(|v| self.sources(v))
                    .unwrap_or_default();
                if let Some(name) = node.child_by_field_name("name") {
                    let target = self.define(self.text(name), line_of(name));
                    for s in &srcs {
                        self.add(s, Relation::Assigns, &target);
                    }
                    vec![target]
                } else {
                    srcs
                }
            }
            "dictionary" => {
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    if child.kind() == "pair" {
                        if let Some(k) = child.child_by_field_name("key") {
                            self.read_expr(k);
                        }
                        if let Some(v) = child.child_by_field_name("value") {
                            self.read_expr(v);
                        }
                    } else {
                        self.read_expr(child);
                    }
                }
                Vec::new()
            }
            "list_comprehension" | "set_comprehension" | "generator_expression" => {
                self.comprehension(node)
            }
            "dictionary_comprehension" => {
                self.comprehension(node);
                Vec::new()
            }
            "string" | "concatenated_string" => {
                self.string_interpolations(node);
                Vec::new()
            }
            "list_splat" | "dictionary_splat" | "yield" => {
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    self.read_expr(child);
                }
                Vec::new()
            }
            "lambda" => Vec::new(),
            "assignment" => {
                // chained assignment: a = b = expr
                self.handle_assignment(node)
            }
            "integer" | "float" | "true" | "false" | "none" | "ellipsis" => Vec::new(),
            "ERROR" => {
                self.handle_error(node);
                Vec::new()
            }
            _ => {
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    self.read_expr(child);
                }
                Vec::new()
            }
        }
    }

    /// Comprehension: for/if clauses bind first, then the element
    /// expression is read; the element's sources stand for the value.
    fn comprehension(&mut self, node: Node<'t>) -> Vec<DfgNode> {
        let mut body = None;
        let mut cursor = node.walk();
        let mut clauses = Vec::new();
        for child in node.named_children(&mut cursor) {
            match child.kind() {
                "for_in_clause" | "if_clause" => clauses.push(child),
                "pair" => body = Some(child),
                _ => {
                    if body.is_none() {
                        body = Some(child);
                    }
                }
            }
        }
        for clause in clauses {
            match clause.kind() {
                "for_in_clause" => {
                    let srcs = clause
                        .child_by_field_name("right")
                        .map(|r| self.rhs_sources(r))
                        .unwrap_or_default();
                    if let Some(left) = clause.child_by_field_name("left") {
                        self.bind_targets(left, &srcs, None);
                    }
                }
                _ => {
                    let mut c = clause.walk();
                    for e in clause.named_children(&mut c) {
                        self.read_expr(e);
                    }
                }
            }
        }
        match body {
            Some(b) if b.kind() == "pair" => {
                if let Some(k) = b.child_by_field_name("key") {
                    self.read_expr(k);
                }
                if let Some(v) = b.child_by_field_name("value") {
                    self.read_expr(v);
                }
                Vec::new()
            }
            Some(b) => self.sources(b),
            None => Vec::new(),
        }
    }

    fn string_interpolations(&mut self, node: Node<'t>) {
        let mut cursor = node.walk();
        for child in node.named_children(&mut cursor) {
            match child.kind() {
                "interpolation" => {
                    if let Some(e) = child.child_by_field_name("expression") {
                        self.read_expr(e);
                    } else {
                        let mut c = child.walk();
                        for e in child.named_children(&mut c) {
                            self.read_expr(e);
                        }
                    }
                }
                "string" | "concatenated_string" => self.string_interpolations(child),
                _ => {}
            }
        }
    }

    /// RHS of an assignment/for binding, kept per-element when the value is
    /// a tuple so unpacking can match positionally.
    fn rhs_sources(&mut self, node: Node<'t>) -> RhsSources {
        match node.kind() {
            "expression_list" | "tuple" => {
                let mut elements = Vec::new();
                let mut cursor = node.walk();
                for child in node.named_children(&mut cursor) {
                    elements.push(self.sources(child));
                }
                RhsSources::Tuple(elements)
            }
            _ => RhsSources::Single(self.sources(node)),
        }
    }

    // ----- statements --------------------------------------------------

    fn process_block(&mut self, node: Node<'t>) {
        let mut cursor = node.walk();
        for child in node.named_children(&mut cursor) {
            self.process_statement(child);
        }
    }

    fn process_statement(&mut self, stmt: Node<'t>) {
        match stmt.kind() {
            "expression_statement" => {
                let mut cursor = stmt.walk();
                for child in stmt.named_children(&mut cursor) {
                    match child.kind() {
                        "assignment" => {
                            self.handle_assignment(child);
                        }
                        "augmented_assignment" => self.handle_augmented(child),
                        _ => self.read_expr(child),
                    }
                }
            }
            "assignment" => {
                self.handle_assignment(stmt);
            }
            "augmented_assignment" => self.handle_augmented(stmt),
            "import_statement" | "import_from_statement" => self.handle_import(stmt),
            "future_import_statement" => {}
            "function_definition" => self.handle_function(stmt),
            "class_definition" => self.handle_class(stmt),
            "decorated_definition" => {
                let mut cursor = stmt.walk();
                for child in stmt.named_children(&mut cursor) {
                    if child.kind() == "decorator" {
                        let mut c = child.walk();
                        for e in child.named_children(&mut c) {
                            self.read_expr(e);
                        }
                    }
                }
                if let Some(def) = stmt.child_by_field_name("definition") {
                    self.process_statement(def);
                }
            }
            "with_statement" => self.handle_with(stmt),
            "try_statement" => self.handle_try(stmt),
            "for_statement" => {
                let srcs = stmt
                    .child_by_field_name("right")
                    .map(|r| self.rhs_sources(r))
                    .unwrap_or_default();
                if let Some(left) = stmt.child_by_field_name("left") {
                    self.bind_targets(left, &srcs, None);
                }
                if let Some(body) = stmt.child_by_field_name("body") {
                    self.process_block(body);
                }
                if let Some(alt) = stmt.child_by_field_name("alternative") {
                    self.process_block_of(alt);
                }
            }
            "while_statement" => {
                if let Some(cond) = stmt.child_by_field_name("condition") {
                    self.read_expr(cond);
                }
                if let Some(body) = stmt.child_by_field_name("body") {
                    self.process_block(body);
                }
                if let Some(alt) = stmt.child_by_field_name("alternative") {
                    self.process_block_of(alt);
                }
            }
            "if_statement" => {
                if let Some(cond) = stmt.child_by_field_name("condition") {
                    self.read_expr(cond);
                }
                if let Some(body) = stmt.child_by_field_name("consequence") {
                    self.process_block(body);
                }
                let mut cursor = stmt.walk();
                for alt in stmt.children_by_field_name("alternative", &mut cursor) {
                    self.process_block_of(alt);
                }
            }
            "match_statement" => {
                if let Some(subject) = stmt.child_by_field_name("subject") {
                    self.read_expr(subject);
                }
                // Case patterns bind nothing here; case bodies are ordinary
                // statements.
                let mut cursor = stmt.walk();
                for child in stmt.named_children(&mut cursor) {
                    if child.kind() == "block" {
                        let mut c = child.walk();
                        for case in child.named_children(&mut c) {
                            if case.kind() == "case_clause" {
                                if let Some(body) = case.child_by_field_name("consequence") {
                                    self.process_block(body);
                                } else {
                                    let mut cc = case.walk();
                                    for sub in case.named_children(&mut cc) {
                                        if sub.kind() == "block" {
                                            self.process_block(sub);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            "return_statement" | "raise_statement" | "assert_statement" | "delete_statement"
            | "print_statement" | "exec_statement" => {
                let mut cursor = stmt.walk();
                for child in stmt.named_children(&mut cursor) {
                    self.read_expr(child);
                }
            }
            "block" => self.process_block(stmt),
            "ERROR" => self.handle_error(stmt),
            "pass_statement" | "break_statement" | "continue_statement"
            | "global_statement" | "nonlocal_statement" | "comment" => {}
            _ => {
                // Unrecognized construct: walk any nested blocks, skip the rest.
                let mut cursor = stmt.walk();
                for child in stmt.named_children(&mut cursor) {
                    if child.kind() == "block" {
                        self.process_block(child);
                    }
                }
            }
        }
    }

    fn process_block_of(&mut self, clause: Node<'t>) {
        if let Some(body) = clause.child_by_field_name("body") {
            self.process_block(body);
        } else if let Some(body) = clause.child_by_field_name("consequence") {
            self.process_block(body);
        } else {
            let mut cursor = clause.walk();
            for child in clause.named_children(&mut cursor) {
                if child.kind() == "block" {
                    self.process_block(child);
                } else if child.kind() == "if_statement" {
                    self.process_statement(child);
                }
            }
        }
    }

    /// `v = u`, `v: T = u`, `a, b = ...`, `a = b = u`. Returns the target
    /// nodes so chained assignments can forward them.
    fn handle_assignment(&mut self, node: Node<'t>) -> Vec<DfgNode> {
        let srcs = match node.child_by_field_name("right") {
            Some(right) if right.kind() == "assignment" => {
                // a = b = expr: the inner targets bind first and the value
                // then flows onward through them.
                RhsSources::Single(self.handle_assignment(right))
            }
            Some(right) => self.rhs_sources(right),
            None => RhsSources::Single(Vec::new()),
        };
        let type_heads = node
            .child_by_field_name("type")
            .map(|t| self.annotation_chains(t))
            .unwrap_or_default();
        match node.child_by_field_name("left") {
            Some(left) => self.bind_targets(left, &srcs, Some(&type_heads)),
            None => Vec::new(),
        }
    }

    fn handle_augmented(&mut self, node: Node<'t>) {
        let srcs = node
            .child_by_field_name("right")
            .map(|r| self.sources(r))
            .unwrap_or_default();
        let Some(left) = node.child_by_field_name("left") else {
            return;
        };
        let Some(parts) = self.dotted_parts(left) else {
            self.read_expr(left);
            return;
        };
        let full_name = parts.join(".");
        let prior = self
            .last
            .get(&full_name)
            .map(|&l| DfgNode::new(full_name.clone(), l));
        let line = line_of(left);
        let target = if parts.len() == 1 {
            self.define(parts[0], line)
        } else {
            self.chain_write(&parts, line)
        };
        if let Some(prior) = prior {
            self.add(&prior, Relation::Assigns, &target);
        }
        for s in &srcs {
            self.add(s, Relation::Assigns, &target);
        }
    }

    /// Bind assignment/for targets. `srcs` fan out to every target unless
    /// both sides are tuples of matching arity, which pairs positionally.
    /// Returns the bound target nodes.
    fn bind_targets(
        &mut self,
        left: Node<'t>,
        srcs: &RhsSources,
        type_heads: Option<&[DfgNode]>,
    ) -> Vec<DfgNode> {
        let elements = self.target_elements(left);
        let mut bound = Vec::new();
        match srcs {
            RhsSources::Tuple(per_element) if per_element.len() == elements.len() => {
                for (target, element_srcs) in elements.iter().zip(per_element) {
                    bound.extend(self.bind_one(*target, element_srcs, type_heads));
                }
            }
            RhsSources::Tuple(per_element) => {
                let all: Vec<DfgNode> = per_element.iter().flatten().cloned().collect();
                for target in elements {
                    bound.extend(self.bind_one(target, &all, type_heads));
                }
            }
            RhsSources::Single(all) => {
                for target in elements {
                    bound.extend(self.bind_one(target, all, type_heads));
                }
            }
        }
        bound
    }

    /// Top-level elements of a target pattern (`a, b` → two elements).
    fn target_elements(&self, left: Node<'t>) -> Vec<Node<'t>> {
        match left.kind() {
            "pattern_list" | "tuple_pattern" | "list_pattern" | "tuple" | "list"
            | "expression_list" => {
                let mut cursor = left.walk();
                left.named_children(&mut cursor).collect()
            }
            _ => vec![left],
        }
    }

    fn bind_one(
        &mut self,
        target: Node<'t>,
        srcs: &[DfgNode],
        type_heads: Option<&[DfgNode]>,
    ) -> Vec<DfgNode> {
        match target.kind() {
            "identifier" => {
                let node = self.define(self.text(target), line_of(target));
                for s in srcs {
                    self.add(s, Relation::Assigns, &node);
                }
                if let Some(heads) = type_heads {
                    for h in heads {
                        self.add(h, Relation::Typeof, &node);
                    }
                }
                vec![node]
            }
            "attribute" => {
                if let Some(parts) = self.dotted_parts(target) {
                    let node = self.chain_write(&parts, line_of(target));
                    for s in srcs {
                        self.add(s, Relation::Assigns, &node);
                    }
                    if let Some(heads) = type_heads {
                        for h in heads {
                            self.add(h, Relation::Typeof, &node);
                        }
                    }
                    vec![node]
                } else {
                    if let Some(object) = target.child_by_field_name("object") {
                        self.read_expr(object);
                    }
                    Vec::new()
                }
            }
            "subscript" => {
                self.read_expr(target);
                Vec::new()
            }
            "list_splat_pattern" | "starred_expression" => {
                let mut cursor = target.walk();
                let mut bound = Vec::new();
                for child in target.named_children(&mut cursor) {
                    bound.extend(self.bind_one(child, srcs, type_heads));
                }
                bound
            }
            "pattern_list" | "tuple_pattern" | "list_pattern" | "tuple" | "list" => {
                // Nested destructuring: fan the paired sources over the leaves.
                let mut cursor = target.walk();
                let mut bound = Vec::new();
                for child in target.named_children(&mut cursor) {
                    bound.extend(self.bind_one(child, srcs, type_heads));
                }
                bound
            }
            _ => {
                self.read_expr(target);
                Vec::new()
            }
        }
    }

    /// Write to a dotted chain target (`self.x = ...`): the base resolves
    /// like a read, attribute steps materialize with Refers edges, and the
    /// deepest node is the binding.
    fn chain_write(&mut self, parts: &[&str], line: u32) -> DfgNode {
        let mut current = self.resolve_read(parts[0], line);
        let mut name = parts[0].to_string();
        for part in &parts[1..] {
            name = format!("{name}.{part}");
            let ext = self.node_at(&name, line);
            self.add(&current, Relation::Refers, &ext);
            current = ext;
        }
        current
    }

    /// All dotted chains inside a type annotation, resolved as reads. A
    /// string annotation containing a dotted name (forward reference) is
    /// unquoted. `Optional[Signal]` yields both `Optional` and `Signal`.
    fn annotation_chains(&mut self, node: Node<'t>) -> Vec<DfgNode> {
        let mut heads = Vec::new();
        self.collect_annotation_chains(node, &mut heads);
        heads
    }

    fn collect_annotation_chains(&mut self, node: Node<'t>, heads: &mut Vec<DfgNode>) {
        match node.kind() {
            "identifier" | "attribute" => {
                if let Some(parts) = self.dotted_parts(node) {
                    heads.push(self.chain_read(&parts, line_of(node)));
                    return;
                }
            }
            "string" => {
                let raw = self.text(node);
                let inner = raw
                    .trim_start_matches(|c| c == 'r' || c == 'b' || c == 'u' || c == 'f')
                    .trim_matches(|c| c == '"' || c == '\'');
                if !inner.is_empty()
                    && inner
                        .chars()
                        .all(|c| c.is_alphanumeric() || c == '_' || c == '.')
                    && !inner.chars().next().unwrap().is_numeric()
                {
                    let parts: Vec<&str> = inner.split('.').collect();
                    if parts.iter().all(|p| !p.is_empty()) {
                        heads.push(self.chain_read(&parts, line_of(node)));
                    }
                }
                return;
            }
            "none" | "integer" | "float" | "true" | "false" | "ellipsis" => return,
            _ => {}
        }
        let mut cursor = node.walk();
        for child in node.named_children(&mut cursor) {
            self.collect_annotation_chains(child, heads);
        }
    }

    fn handle_function(&mut self, node: Node<'t>) {
        let return_heads = node
            .child_by_field_name("return_type")
            .map(|r| self.annotation_chains(r))
            .unwrap_or_default();
        let fnode = match node.child_by_field_name("name") {
            Some(name) => self.define(self.text(name), line_of(name)),
            None => return,
        };
        for h in &return_heads {
            self.add(h, Relation::Typeof, &fnode);
        }
        if let Some(params) = node.child_by_field_name("parameters") {
            self.handle_parameters(params);
        }
        if let Some(body) = node.child_by_field_name("body") {
            self.process_block(body);
        }
    }

    fn handle_parameters(&mut self, params: Node<'t>) {
        let mut cursor = params.walk();
        for param in params.named_children(&mut cursor) {
            match param.kind() {
                "identifier" => {
                    self.define(self.text(param), line_of(param));
                }
                "typed_parameter" => {
                    let heads = param
                        .child_by_field_name("type")
                        .map(|t| self.annotation_chains(t))
                        .unwrap_or_default();
                    // The name is the first named child that is not the type.
                    let mut c = param.walk();
                    let name_node = param
                        .named_children(&mut c)
                        .find(|n| matches!(n.kind(), "identifier"));
                    if let Some(name) = name_node {
                        let p = self.define(self.text(name), line_of(name));
                        for h in &heads {
                            self.add(h, Relation::Typeof, &p);
                        }
                    }
                }
                "default_parameter" | "typed_default_parameter" => {
                    if let Some(v) = param.child_by_field_name("value") {
                        self.read_expr(v);
                    }
                    let heads = param
                        .child_by_field_name("type")
                        .map(|t| self.annotation_chains(t))
                        .unwrap_or_default();
                    if let Some(name) = param.child_by_field_name("name") {
                        if name.kind() == "identifier" {
                            let p = self.define(self.text(name), line_of(name));
                            for h in &heads {
                                self.add(h, Relation::Typeof, &p);
                            }
                        }
                    }
                }
                "list_splat_pattern" | "dictionary_splat_pattern" => {
                    let mut c = param.walk();
                    for child in param.named_children(&mut c) {
                        if child.kind() == "identifier" {
                            self.define(self.text(child), line_of(child));
                        }
                    }
                }
                _ => {}
            }
        }
    }

    fn handle_class(&mut self, node: Node<'t>) {
        let mut base_heads = Vec::new();
        if let Some(supers) = node.child_by_field_name("superclasses") {
            let mut cursor = supers.walk();
            for arg in supers.named_children(&mut cursor) {
                match arg.kind() {
                    "keyword_argument" => {
                        if let Some(v) = arg.child_by_field_name("value") {
                            self.read_expr(v);
                        }
                    }
                    "identifier" | "attribute" => {
                        if let Some(parts) = self.dotted_parts(arg) {
                            base_heads.push(self.chain_read(&parts, line_of(arg)));
                        }
                    }
                    "subscript" => {
                        // Generic[T] and friends: the subscripted value is
                        // the base.
                        if let Some(v) = arg.child_by_field_name("value") {
                            if let Some(parts) = self.dotted_parts(v) {
                                base_heads.push(self.chain_read(&parts, line_of(v)));
                            } else {
                                self.read_expr(v);
                            }
                        }
                        if let Some(sub) = arg.child_by_field_name("subscript") {
                            self.read_expr(sub);
                        }
                    }
                    _ => self.read_expr(arg),
                }
            }
        }
        let cnode = match node.child_by_field_name("name") {
            Some(name) => self.define(self.text(name), line_of(name)),
            None => return,
        };
        for b in &base_heads {
            self.add(b, Relation::Inherits, &cnode);
        }
        if let Some(body) = node.child_by_field_name("body") {
            self.process_block(body);
        }
    }

    fn handle_with(&mut self, node: Node<'t>) {
        let mut cursor = node.walk();
        for child in node.named_children(&mut cursor) {
            if child.kind() == "with_clause" {
                let mut c = child.walk();
                for item in child.named_children(&mut c) {
                    if item.kind() == "with_item" {
                        if let Some(value) = item.child_by_field_name("value") {
                            self.handle_with_value(value);
                        }
                    }
                }
            }
        }
        if let Some(body) = node.child_by_field_name("body") {
            self.process_block(body);
        }
    }

    fn handle_with_value(&mut self, value: Node<'t>) {
        match value.kind() {
            "as_pattern" => {
                let srcs = value
                    .named_child(0)
                    .map(|v| self.sources(v))
                    .unwrap_or_default();
                if let Some(alias) = value.child_by_field_name("alias") {
                    self.bind_as_targets(alias, &srcs);
                }
            }
            "parenthesized_expression" | "tuple" | "expression_list" => {
                let mut cursor = value.walk();
                for child in value.named_children(&mut cursor) {
                    self.handle_with_value(child);
                }
            }
            _ => self.read_expr(value),
        }
    }

    fn bind_as_targets(&mut self, alias: Node<'t>, srcs: &[DfgNode]) {
        let inner = if alias.kind() == "as_pattern_target" {
            alias.named_child(0).unwrap_or(alias)
        } else {
            alias
        };
        for target in self.target_elements(inner) {
            match target.kind() {
                "identifier" => {
                    let node = self.define(self.text(target), line_of(target));
                    for s in srcs {
                        self.add(s, Relation::As, &node);
                    }
                }
                "attribute" => {
                    if let Some(parts) = self.dotted_parts(target) {
                        let node = self.chain_write(&parts, line_of(target));
                        for s in srcs {
                            self.add(s, Relation::As, &node);
                        }
                    }
                }
                _ => self.read_expr(target),
            }
        }
    }

    fn handle_try(&mut self, node: Node<'t>) {
        let mut cursor = node.walk();
        for child in node.named_children(&mut cursor) {
            match child.kind() {
                "block" => self.process_block(child),
                "except_clause" | "except_group_clause" => {
                    let mut c = child.walk();
                    for sub in child.named_children(&mut c) {
                        match sub.kind() {
                            "as_pattern" => {
                                let srcs = sub
                                    .named_child(0)
                                    .map(|v| self.sources(v))
                                    .unwrap_or_default();
                                if let Some(alias) = sub.child_by_field_name("alias") {
                                    self.bind_as_targets(alias, &srcs);
                                }
                            }
                            "block" => self.process_block(sub),
                            _ => self.read_expr(sub),
                        }
                    }
                }
                "else_clause" | "finally_clause" => self.process_block_of(child),
                _ => {}
            }
        }
    }

    fn handle_import(&mut self, node: Node<'t>) {
        match node.kind() {
            "import_statement" => {
                let mut cursor = node.walk();
                for child in node.children_by_field_name("name", &mut cursor) {
                    match child.kind() {
                        "dotted_name" => {
                            // `import a.b` binds `a`.
                            if let Some(first) = child.named_child(0) {
                                self.define(self.text(first), line_of(first));
                            }
                        }
                        "aliased_import" => {
                            if let Some(alias) = child.child_by_field_name("alias") {
                                self.define(self.text(alias), line_of(alias));
                            }
                        }
                        _ => {}
                    }
                }
            }
            "import_from_statement" => {
                let mut cursor = node.walk();
                for child in node.children_by_field_name("name", &mut cursor) {
                    match child.kind() {
                        "dotted_name" => {
                            if let Some(last) =
                                child.named_child(child.named_child_count().saturating_sub(1))
                            {
                                self.define(self.text(last), line_of(last));
                            }
                        }
                        "aliased_import" => {
                            if let Some(alias) = child.child_by_field_name("alias") {
                                self.define(self.text(alias), line_of(alias));
                            }
                        }
                        _ => {}
                    }
                }
            }
            _ => {}
        }
    }

    /// Recover structure from an ERROR node: unfinished `def`, `class`,
    /// `with` and `except` headers keep their keyword tokens and operand
    /// expressions as children; anything else degrades to plain reads.
    fn handle_error(&mut self, node: Node<'t>) {
        let mut children = Vec::new();
        let mut cursor = node.walk();
        for child in node.children(&mut cursor) {
            children.push(child);
        }
        let kinds: Vec<&str> = children.iter().map(|c| c.kind()).collect();

        if let Some(pos) = kinds.iter().position(|k| *k == "def") {
            self.recover_def(&children[pos + 1..]);
            return;
        }
        if let Some(pos) = kinds.iter().position(|k| *k == "class") {
            self.recover_class(&children[pos + 1..]);
            return;
        }
        if let Some(pos) = kinds.iter().position(|k| *k == "with") {
            self.recover_as_bindings(&children[pos + 1..], Relation::As);
            return;
        }
        if let Some(pos) = kinds.iter().position(|k| *k == "except") {
            self.recover_as_bindings(&children[pos + 1..], Relation::As);
            return;
        }
        for child in children {
            if !child.is_named() {
                continue;
            }
            if child.kind().ends_with("_statement")
                || matches!(child.kind(), "block" | "ERROR")
            {
                self.process_statement(child);
            } else if matches!(child.kind(), "assignment" | "augmented_assignment") {
                self.process_statement(child);
            } else {
                self.read_expr(child);
            }
        }
    }

    fn recover_def(&mut self, rest: &[Node<'t>]) {
        let mut name = None;
        let mut params = None;
        let mut return_nodes = Vec::new();
        let mut after_arrow = false;
        for child in rest {
            match child.kind() {
                "identifier" if name.is_none() && !after_arrow => name = Some(*child),
                "parameters" => params = Some(*child),
                "->" => after_arrow = true,
                ":" => break,
                k if after_arrow && !matches!(k, "comment") => {
                    if child.is_named() {
                        return_nodes.push(*child);
                    }
                }
                _ => {}
            }
        }
        let mut heads = Vec::new();
        for r in return_nodes {
            self.collect_annotation_chains(r, &mut heads);
        }
        if let Some(name) = name {
            let fnode = self.define(self.text(name), line_of(name));
            for h in &heads {
                self.add(h, Relation::Typeof, &fnode);
            }
        }
        if let Some(params) = params {
            self.handle_parameters(params);
        }
    }

    fn recover_class(&mut self, rest: &[Node<'t>]) {
        let mut name = None;
        let mut bases = Vec::new();
        for child in rest {
            match child.kind() {
                "identifier" if name.is_none() => name = Some(*child),
                "argument_list" => {
                    let mut cursor = child.walk();
                    for arg in child.named_children(&mut cursor) {
                        if let Some(parts) = self.dotted_parts(arg) {
                            bases.push(self.chain_read(&parts, line_of(arg)));
                        } else {
                            self.read_expr(arg);
                        }
                    }
                }
                ":" => break,
                _ => {}
            }
        }
        if let Some(name) = name {
            let cnode = self.define(self.text(name), line_of(name));
            for b in &bases {
                self.add(b, Relation::Inherits, &cnode);
            }
        }
    }

    /// `with EXPR as NAME [, EXPR as NAME ...]` / `except EXPR as NAME`
    /// fragments inside an ERROR node.
    fn recover_as_bindings(&mut self, rest: &[Node<'t>], relation: Relation) {
        let mut pending: Vec<DfgNode> = Vec::new();
        let mut expect_target = false;
        for child in rest {
            if child.kind() == "as" {
                expect_target = true;
                continue;
            }
            if child.kind() == ":" {
                break;
            }
            if !child.is_named() {
                continue;
            }
            if expect_target {
                match child.kind() {
                    "identifier" => {
                        let target = self.define(self.text(*child), line_of(*child));
                        for s in &pending {
                            self.add(s, relation, &target);
                        }
                    }
                    _ => self.read_expr(*child),
                }
                pending.clear();
                expect_target = false;
            } else {
                pending = self.sources(*child);
            }
        }
        // A trailing context expression without `as` is still read.
    }
}

/// RHS sources, shaped for positional tuple unpacking.
enum RhsSources {
    /// Per-element sources of a literal tuple RHS.
    Tuple(Vec<Vec<DfgNode>>),
    Single(Vec<DfgNode>),
}

impl Default for RhsSources {
    fn default() -> Self {
        RhsSources::Single(Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::SourceFile;
    use crate::syntax::parse;

    fn dfg(src: &str) -> DataflowGraph {
        build_dfg(&parse(&SourceFile::new("t.py", src)).unwrap())
    }

    fn triplet(h: (&str, u32), r: Relation, t: (&str, u32)) -> DfgTriplet {
        DfgTriplet {
            head: DfgNode::new(h.0, h.1),
            relation: r,
            tail: DfgNode::new(t.0, t.1),
        }
    }

    #[test]
    fn relation_table_one_liners() {
        let cases: Vec<(&str, DfgTriplet)> = vec![
            ("v = u", triplet(("u", 1), Relation::Assigns, ("v", 1))),
            ("with f() as v", triplet(("f", 1), Relation::As, ("v", 1))),
            ("u.v", triplet(("u", 1), Relation::Refers, ("u.v", 1))),
            ("def f() -> v", triplet(("v", 1), Relation::Typeof, ("f", 1))),
            ("class v(u)", triplet(("u", 1), Relation::Inherits, ("v", 1))),
        ];
        for (src, expected) in cases {
            let g = dfg(src);
            let got: Vec<&DfgTriplet> = g.triplets.iter().collect();
            assert_eq!(got, vec![&expected], "program: {src}");
        }
    }

    #[test]
    fn reassignment_links_prior_occurrence() {
        let g = dfg("y = 0\n\nx = 3\n\nx = x + 1\n");
        assert!(g
            .triplets
            .contains(&triplet(("x", 3), Relation::Assigns, ("x", 5))));
        // Distinct nodes for the two x occurrences.
        assert!(g.nodes.contains(&DfgNode::new("x", 3)));
        assert!(g.nodes.contains(&DfgNode::new("x", 5)));
    }

    #[test]
    fn acyclic_even_with_self_reference() {
        let g = dfg("x = 1\nx = x + x\nx = x\n");
        assert!(is_acyclic(&g));
    }

    fn is_acyclic(g: &DataflowGraph) -> bool {
        // Kahn's algorithm over the triplet edges.
        let mut indegree: BTreeMap<&DfgNode, usize> = BTreeMap::new();
        for n in &g.nodes {
            indegree.insert(n, 0);
        }
        for t in &g.triplets {
            *indegree.entry(&t.tail).or_insert(0) += 1;
        }
        let mut queue: Vec<&DfgNode> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(n, _)| *n)
            .collect();
        let mut seen = 0usize;
        let total = indegree.len();
        while let Some(n) = queue.pop() {
            seen += 1;
            for t in &g.triplets {
                if &t.head == n {
                    let d = indegree.get_mut(&t.tail).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        queue.push(&t.tail);
                    }
                }
            }
        }
        seen == total
    }

    #[test]
    fn figure_snippet_dataflow() {
        let src = "\
from RecordSignal import RecordSignal

def step(signal: RecordSignal, newChannelName):
    newSignal = signal.getSignalByName(newChannelName)
    newSignal.";
        let g = dfg(src);
        let names: Vec<(String, Relation, String)> = g
            .triplets
            .iter()
            .map(|t| (t.head.name.clone(), t.relation, t.tail.name.clone()))
            .collect();
        assert!(names.contains(&(
            "RecordSignal".into(),
            Relation::Typeof,
            "signal".into()
        )));
        assert!(names.contains(&(
            "signal".into(),
            Relation::Refers,
            "signal.getSignalByName".into()
        )));
        assert!(names.contains(&(
            "signal.getSignalByName".into(),
            Relation::Assigns,
            "newSignal".into()
        )));
        // The call argument is type-insensitive: no edge into newSignal.
        assert!(!names
            .iter()
            .any(|(h, _, t)| h == "newChannelName" && t == "newSignal"));
        assert!(is_acyclic(&g));
    }

    #[test]
    fn cursor_line_reaches_import_origin() {
        let src = "\
from RecordSignal import RecordSignal

def step(signal: RecordSignal, newChannelName):
    newSignal = signal.getSignalByName(newChannelName)
    newSignal.";
        let g = dfg(src);
        let deps = last_line_dependencies(&g, 5);
        let names: BTreeSet<&str> = deps.iter().map(|n| n.name.as_str()).collect();
        assert!(names.contains("newSignal"));
        assert!(names.contains("signal"));
        assert!(names.contains("signal.getSignalByName"));
        assert!(names.contains("RecordSignal"));
    }

    #[test]
    fn blank_cursor_line_has_no_dependencies() {
        let g = dfg("x = 1\n\ny = x\n");
        assert!(last_line_dependencies(&g, 2).is_empty());
    }

    #[test]
    fn chain_across_lines() {
        let g = dfg("x = 1\ny = x\nz = y\n");
        let deps = last_line_dependencies(&g, 3);
        let names: BTreeSet<&str> = deps.iter().map(|n| n.name.as_str()).collect();
        assert_eq!(names, ["x", "y", "z"].into_iter().collect());
    }

    #[test]
    fn expand_single_attribute() {
        let g = dfg("u.v");
        assert_eq!(
            expand_refers(&g, "u"),
            ["u", "u.v"].map(String::from).into_iter().collect()
        );
    }

    #[test]
    fn expand_chain() {
        let g = dfg("a.b\na.b.c\n");
        assert_eq!(
            expand_refers(&g, "a"),
            ["a", "a.b", "a.b.c"].map(String::from).into_iter().collect()
        );
    }

    #[test]
    fn expand_unknown_name() {
        let g = dfg("x = 1");
        assert_eq!(
            expand_refers(&g, "z"),
            ["z"].map(String::from).into_iter().collect()
        );
    }

    #[test]
    fn expand_through_type_hint() {
        // signal: RecordSignal; signal.getSignalByName — the access on the
        // variable surfaces as an attribute of the type.
        let src = "\
from RecordSignal import RecordSignal

def step(signal: RecordSignal, newChannelName):
    newSignal = signal.getSignalByName(newChannelName)
    newSignal.";
        let g = dfg(src);
        let expanded = expand_refers(&g, "RecordSignal");
        assert!(expanded.contains("RecordSignal.getSignalByName"));
    }

    #[test]
    fn tuple_unpacking_positional() {
        let g = dfg("a, b = f(), g()\n");
        assert!(g
            .triplets
            .contains(&triplet(("f", 1), Relation::Assigns, ("a", 1))));
        assert!(g
            .triplets
            .contains(&triplet(("g", 1), Relation::Assigns, ("b", 1))));
        assert!(!g
            .triplets
            .contains(&triplet(("f", 1), Relation::Assigns, ("b", 1))));
    }

    #[test]
    fn tuple_unpacking_fan_out() {
        let g = dfg("a, b = f()\n");
        assert!(g
            .triplets
            .contains(&triplet(("f", 1), Relation::Assigns, ("a", 1))));
        assert!(g
            .triplets
            .contains(&triplet(("f", 1), Relation::Assigns, ("b", 1))));
    }

    #[test]
    fn augmented_assignment_links_prior_and_rhs() {
        let g = dfg("x = 1\nx += y\n");
        assert!(g
            .triplets
            .contains(&triplet(("x", 1), Relation::Assigns, ("x", 2))));
        assert!(g
            .triplets
            .contains(&triplet(("y", 2), Relation::Assigns, ("x", 2))));
    }

    #[test]
    fn annotated_assignment_adds_typeof() {
        let g = dfg("v: T = make()\n");
        assert!(g
            .triplets
            .contains(&triplet(("T", 1), Relation::Typeof, ("v", 1))));
        assert!(g
            .triplets
            .contains(&triplet(("make", 1), Relation::Assigns, ("v", 1))));
    }

    #[test]
    fn except_as_binding() {
        let g = dfg("try:\n    pass\nexcept Err as e:\n    pass\n");
        assert!(g
            .triplets
            .contains(&triplet(("Err", 3), Relation::As, ("e", 3))));
    }

    #[test]
    fn for_loop_binds_target() {
        let g = dfg("for item in items:\n    use(item)\n");
        assert!(g
            .triplets
            .contains(&triplet(("items", 1), Relation::Assigns, ("item", 1))));
    }

    #[test]
    fn import_defines_binding() {
        let g = dfg("from m import x\ny = x\n");
        assert!(g
            .triplets
            .contains(&triplet(("x", 1), Relation::Assigns, ("y", 2))));
    }

    #[test]
    fn determinism() {
        let src = "import a\nclass C(a.Base):\n    def m(self, p: a.T) -> a.R:\n        q = p.run()\n        return q\n";
        let g1 = dfg(src);
        let g2 = dfg(src);
        assert_eq!(g1.to_debug_string(), g2.to_debug_string());
        assert_eq!(g1, g2);
    }

    #[test]
    fn endpoints_are_nodes() {
        let g = dfg("import m\nx = m.f()\ny = x\nwith open(y) as h:\n    z = h.read()\n");
        for t in &g.triplets {
            assert!(g.nodes.contains(&t.head));
            assert!(g.nodes.contains(&t.tail));
        }
    }
}
