//! Prompt assembly under a token budget.
//!
//! Retrieved entities are grouped into their modules, the modules are
//! ordered so that code being depended on appears before the code that
//! uses it, and the rendered background is packed in front of the
//! unfinished file. Packing is incremental: the relevant entities are laid
//! down first, then remaining candidates are appended one at a time for as
//! long as the background still fits its share of the budget.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;

use crate::entity::{CodeEntity, EntityKind};
use crate::error::Result;
use crate::graph::ContextGraph;
use crate::render::{module_file_path, render_module_block, Scope};
use crate::retrieval::{dependency_closure, retrieve};
use crate::source::SourceFile;
use crate::tokens::TokenCounter;

/// Delimiters wrapping the background knowledge as one long string literal,
/// so the prompt stays syntactically inert Python.
const BK_OPEN: &str = "'''\n";
const BK_CLOSE: &str = "\n'''\n";

/// Token budget split between background knowledge and the unfinished code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TokenBudget {
    pub total: usize,
    pub knowledge_alloc: usize,
    pub code_alloc: usize,
}

/// Split `total` between the two prompt halves. Each side starts with half
/// the budget; a side that needs less than its half keeps only what it
/// needs and the surplus moves to the other side.
pub fn allocate(total: usize, knowledge_len: usize, code_len: usize) -> TokenBudget {
    let knowledge_half = total / 2;
    let code_half = total - knowledge_half;
    let (knowledge_alloc, code_alloc) = if knowledge_len <= knowledge_half {
        (knowledge_len, total - knowledge_len)
    } else if code_len <= code_half {
        (total - code_len, code_len)
    } else {
        (knowledge_half, code_half)
    };
    TokenBudget {
        total,
        knowledge_alloc,
        code_alloc,
    }
}

/// A fully assembled prompt and the pieces it was built from.
#[derive(Debug, Clone, Serialize)]
pub struct PromptPlan {
    /// Rendering detail used for background entities.
    pub scope: Scope,
    /// Repo-relative file paths of the rendered modules, in the order their
    /// blocks appear in the background.
    pub module_order: Vec<String>,
    /// Rendered background knowledge, before wrapping.
    pub background: String,
    /// The unfinished code as included in the prompt (possibly truncated to
    /// its last tokens).
    pub code_suffix: String,
    /// Background wrapped in string delimiters, followed by the code.
    pub final_prompt: String,
    /// Wall-clock time spent building this prompt, in milliseconds.
    pub generation_ms: f64,
}

fn wrap_background(bk: &str) -> String {
    format!("{BK_OPEN}{bk}{BK_CLOSE}")
}

/// Qualified path of the module an entity renders under: the longest
/// dotted prefix that names a module (or the path itself for modules).
fn module_of(graph: &ContextGraph, qualified_path: &str) -> String {
    if graph.modules.contains_key(qualified_path) {
        return qualified_path.to_string();
    }
    let mut candidate = qualified_path;
    while let Some(idx) = candidate.rfind('.') {
        candidate = &candidate[..idx];
        if graph.modules.contains_key(candidate) {
            return candidate.to_string();
        }
    }
    qualified_path.to_string()
}

/// True when some enclosing class of `qualified_path` (strictly below the
/// module) is itself in `set` — its rendering already covers this entity.
fn has_class_ancestor(
    graph: &ContextGraph,
    qualified_path: &str,
    module: &str,
    set: &BTreeSet<String>,
) -> bool {
    let mut candidate = qualified_path;
    while let Some(idx) = candidate.rfind('.') {
        candidate = &candidate[..idx];
        if candidate.len() <= module.len() {
            break;
        }
        if set.contains(candidate)
            && graph
                .entity(candidate)
                .is_some_and(|e| e.kind == EntityKind::Class)
        {
            return true;
        }
    }
    false
}

struct Organizer<'g> {
    graph: &'g ContextGraph,
    scope: Scope,
}

impl Organizer<'_> {
    /// Render the given entities (plus their dependency closures) as
    /// module blocks, most-depended-on module first. Returns the text and
    /// the module order as repo-relative file paths.
    fn organize(&self, candidates: &[String]) -> (String, Vec<String>) {
        // Every candidate carries its dependency closure with it.
        let mut set: BTreeSet<String> = BTreeSet::new();
        for qp in candidates {
            if self.graph.entity(qp).is_none() {
                continue;
            }
            set.insert(qp.clone());
            for dep in dependency_closure(self.graph, qp) {
                set.insert(dep);
            }
        }
        if set.is_empty() {
            return (String::new(), Vec::new());
        }

        let module_for: BTreeMap<&str, String> = set
            .iter()
            .map(|qp| (qp.as_str(), module_of(self.graph, qp)))
            .collect();
        let modules: BTreeSet<String> = module_for.values().cloned().collect();

        // Module dependency edges, taken over the full entity set before
        // any merging so member-level dependencies still count.
        let mut preds: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for m in &modules {
            preds.entry(m.as_str()).or_default();
        }
        for qp in &set {
            let from = module_for[qp.as_str()].as_str();
            for dep in self.graph.depends_on(qp) {
                let Some(to) = module_for.get(dep.as_str()) else {
                    continue;
                };
                if from != to.as_str() {
                    preds.get_mut(to.as_str()).unwrap().insert(from);
                }
            }
        }

        // Priority ranks: candidate modules are numbered in first-seen
        // order; every other module inherits the best (smallest) rank among
        // the modules that point at it, iterated so chains and cycles
        // settle at a fixed point.
        let mut rank: BTreeMap<&str, usize> = BTreeMap::new();
        let mut next_rank = 1usize;
        for qp in candidates {
            let Some(m) = module_for.get(qp.as_str()) else {
                continue;
            };
            if !rank.contains_key(m.as_str()) {
                rank.insert(m.as_str(), next_rank);
                next_rank += 1;
            }
        }
        let seeded: BTreeSet<&str> = rank.keys().copied().collect();
        loop {
            let mut changed = false;
            for m in &modules {
                if seeded.contains(m.as_str()) {
                    continue;
                }
                let best = preds[m.as_str()]
                    .iter()
                    .filter_map(|p| rank.get(p))
                    .min()
                    .copied();
                if let Some(best) = best {
                    if rank.get(m.as_str()).is_none_or(|current| best < *current) {
                        rank.insert(m.as_str(), best);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        // Pseudo-topological pop: fewest remaining predecessors first, ties
        // broken toward the numerically largest rank (the least relevant
        // candidate), then lexicographically. Concatenating in reverse pop
        // order therefore puts the most-depended-on and lowest-ranked
        // modules at the top of the text, where the final head-truncation
        // spares them longest, and late-ranked extras nearest the code.
        let mut remaining: BTreeSet<&str> = modules.iter().map(|m| m.as_str()).collect();
        let mut pop_order: Vec<&str> = Vec::new();
        while !remaining.is_empty() {
            let popped = *remaining
                .iter()
                .min_by_key(|m| {
                    let live_preds = preds[**m]
                        .iter()
                        .filter(|p| remaining.contains(**p))
                        .count();
                    let priority = rank.get(**m).copied().unwrap_or(usize::MAX);
                    (live_preds, std::cmp::Reverse(priority), **m)
                })
                .unwrap();
            pop_order.push(popped);
            remaining.remove(popped);
        }

        // Merge: entities already covered by a retrieved enclosing class
        // drop out, the rest group under their modules.
        let mut per_module: BTreeMap<&str, Vec<&CodeEntity>> = BTreeMap::new();
        for qp in &set {
            let module = module_for[qp.as_str()].as_str();
            if qp != module && has_class_ancestor(self.graph, qp, module, &set) {
                continue;
            }
            if let Some(entity) = self.graph.entity(qp) {
                per_module.entry(module).or_default().push(entity);
            }
        }

        let mut blocks: Vec<String> = Vec::new();
        let mut order: Vec<String> = Vec::new();
        for module in pop_order.iter().rev() {
            let Some(members) = per_module.get(module) else {
                continue;
            };
            blocks.push(render_module_block(self.graph, module, members, self.scope));
            order.push(module_file_path(self.graph, module));
        }
        (blocks.join("\n"), order)
    }
}

/// Render `candidates` (with dependency closures) as ordered module blocks.
pub fn organize_bk(candidates: &[String], graph: &ContextGraph, scope: Scope) -> String {
    Organizer { graph, scope }.organize(candidates).0
}

fn generate_with_order(
    relevant: &[String],
    other: &[String],
    limit: usize,
    graph: &ContextGraph,
    scope: Scope,
    counter: &dyn TokenCounter,
) -> (String, Vec<String>) {
    let organizer = Organizer { graph, scope };
    let mut accepted: Vec<String> = relevant.to_vec();
    let (mut bk, mut order) = organizer.organize(&accepted);
    for qp in other {
        let mut trial = accepted.clone();
        trial.push(qp.clone());
        let (candidate, candidate_order) = organizer.organize(&trial);
        if counter.count(&candidate) <= limit {
            bk = candidate;
            order = candidate_order;
            accepted = trial;
        } else {
            // Candidates are in relevance order; the first overflow ends
            // the packing.
            break;
        }
    }
    if counter.count(&bk) > limit {
        bk = counter.truncate_to_first(&bk, limit).to_string();
    }
    (bk, order)
}

/// Pack background knowledge into at most `limit` tokens: the relevant
/// entities are always laid down first (hard-truncated if they alone
/// overflow), then the remaining candidates are appended one at a time,
/// reorganizing after each, until one no longer fits.
pub fn generate_bk(
    relevant: &[String],
    other: &[String],
    limit: usize,
    graph: &ContextGraph,
    scope: Scope,
    counter: &dyn TokenCounter,
) -> String {
    generate_with_order(relevant, other, limit, graph, scope, counter).0
}

/// Build the full completion prompt for an unfinished file: retrieve
/// context from the graph, split the token budget, pack the background,
/// and put the (possibly truncated) unfinished code last.
pub fn build_prompt(
    unfinished: &SourceFile,
    cursor: Option<(u32, u32)>,
    graph: &ContextGraph,
    total_tokens: usize,
    scope: Scope,
    counter: &dyn TokenCounter,
) -> Result<PromptPlan> {
    let started = Instant::now();
    let code = match cursor {
        Some((line, column)) => unfinished.truncated_at(line, column)?,
        None => unfinished.clone(),
    };
    let retrieval = retrieve(unfinished, cursor, graph)?;

    // Budget split is driven by what the background would cost in full.
    let mut all_candidates = retrieval.relevant.clone();
    all_candidates.extend(retrieval.other.iter().cloned());
    let full_bk = organize_bk(&all_candidates, graph, scope);
    let knowledge_len = if full_bk.is_empty() {
        0
    } else {
        counter.count(&wrap_background(&full_bk))
    };
    let code_len = counter.count(&code.text);
    let budget = allocate(total_tokens, knowledge_len, code_len);

    let wrapper_cost = counter.count(BK_OPEN) + counter.count(BK_CLOSE);
    let limit = budget.knowledge_alloc.saturating_sub(wrapper_cost);
    let (background, module_order) = generate_with_order(
        &retrieval.relevant,
        &retrieval.other,
        limit,
        graph,
        scope,
        counter,
    );

    let code_suffix = counter
        .truncate_to_last(&code.text, budget.code_alloc)
        .to_string();
    // Nothing retrieved degenerates to the unfinished code alone.
    let final_prompt = if background.is_empty() {
        code_suffix.clone()
    } else {
        format!("{}{}", wrap_background(&background), code_suffix)
    };
    debug_assert!(counter.count(&final_prompt) <= total_tokens);

    let generation_ms = started.elapsed().as_secs_f64() * 1000.0;
    Ok(PromptPlan {
        scope,
        module_order,
        background,
        code_suffix,
        final_prompt,
        generation_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_graph;
    use crate::tokens::ApproxTokenizer;
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

    #[test]
    fn allocate_shifts_surplus_between_sides() {
        let b = allocate(2048, 1500, 400);
        assert_eq!((b.knowledge_alloc, b.code_alloc), (1648, 400));
        let b = allocate(2048, 2000, 2000);
        assert_eq!((b.knowledge_alloc, b.code_alloc), (1024, 1024));
        let b = allocate(2048, 100, 3000);
        assert_eq!((b.knowledge_alloc, b.code_alloc), (100, 1948));
        let b = allocate(2048, 100, 200);
        assert!(b.knowledge_alloc + b.code_alloc <= 2048);
        assert!(b.knowledge_alloc >= 100 && b.code_alloc >= 200);
    }

    const BASE_PY: &str = r#"class Base:
    def ping(self):
        return 1
"#;
    const LIB_PY: &str = r#"from base import Base

class Helper(Base):
    def go(self):
        return Base()
"#;
    const MAIN_PY: &str = r#"from lib import Helper

h = Helper()
h.
"#;

    fn helper_repo() -> (tempfile::TempDir, PathBuf) {
        fixture_repo(&[("base.py", BASE_PY), ("lib.py", LIB_PY), ("main.py", MAIN_PY)])
    }

    #[test]
    fn organize_puts_dependency_module_first() {
        let (_dir, root) = helper_repo();
        let graph = build_graph(&root).expect("graph");
        let bk = organize_bk(&["lib.Helper".to_string()], &graph, Scope::Complete);
        let base_at = bk.find("# base.py").expect("base block");
        let lib_at = bk.find("# lib.py").expect("lib block");
        assert!(
            base_at < lib_at,
            "depended-on module should render first:\n{bk}"
        );
        assert!(bk.contains("class Base:"));
        assert!(bk.contains("class Helper(Base):"));
    }

    #[test]
    fn organize_handles_module_cycles() {
        let (_dir, root) = fixture_repo(&[
            (
                "a.py",
                "import b\n\nclass A:\n    def make(self):\n        return b.B()\n",
            ),
            (
                "b.py",
                "import a\n\nclass B:\n    def make(self):\n        return a.A()\n",
            ),
        ]);
        let graph = build_graph(&root).expect("graph");
        let bk = organize_bk(&["a.A".to_string()], &graph, Scope::Complete);
        // Both sides of the cycle are rendered exactly once and the block
        // for the entity we asked about is placed per the priority rule.
        assert_eq!(bk.matches("# a.py").count(), 1);
        assert_eq!(bk.matches("# b.py").count(), 1);
        let organizer = Organizer {
            graph: &graph,
            scope: Scope::Complete,
        };
        let (_, order) = organizer.organize(&["a.A".to_string()]);
        assert_eq!(order.last().map(String::as_str), Some("a.py"));
    }

    #[test]
    fn earlier_candidates_outrank_later_ones() {
        // Two unrelated modules: the pop loop sees identical predecessor
        // counts, so only the candidate ranks decide. The later (larger
        // rank) candidate pops first and lands nearest the code; the first
        // candidate's module leads the text and outlives head-truncation.
        // Note "red" > "blue" alphabetically, so rank really decided.
        let (_dir, root) = fixture_repo(&[
            ("red.py", "class Red:\n    def shade(self):\n        return 1\n"),
            ("blue.py", "class Blue:\n    def shade(self):\n        return 2\n"),
        ]);
        let graph = build_graph(&root).expect("graph");
        let bk = organize_bk(
            &["red.Red".to_string(), "blue.Blue".to_string()],
            &graph,
            Scope::Complete,
        );
        let red_at = bk.find("# red.py").expect("red block");
        let blue_at = bk.find("# blue.py").expect("blue block");
        assert!(
            red_at < blue_at,
            "first candidate's module should render first:\n{bk}"
        );
    }

    #[test]
    fn class_members_merge_into_their_class() {
        let (_dir, root) = helper_repo();
        let graph = build_graph(&root).expect("graph");
        let bk = organize_bk(
            &["lib.Helper".to_string(), "lib.Helper.go".to_string()],
            &graph,
            Scope::Complete,
        );
        assert_eq!(bk.matches("def go(self):").count(), 1);
    }

    #[test]
    fn generate_bk_zero_budget_is_empty() {
        let (_dir, root) = helper_repo();
        let graph = build_graph(&root).expect("graph");
        let bk = generate_bk(
            &["lib.Helper".to_string()],
            &[],
            0,
            &graph,
            Scope::Complete,
            &ApproxTokenizer,
        );
        assert_eq!(bk, "");
    }

    #[test]
    fn generate_bk_truncates_oversized_relevant_set() {
        let (_dir, root) = helper_repo();
        let graph = build_graph(&root).expect("graph");
        let counter = ApproxTokenizer;
        let bk = generate_bk(
            &["lib.Helper".to_string()],
            &[],
            10,
            &graph,
            Scope::Complete,
            &counter,
        );
        assert!(counter.count(&bk) <= 10);
        assert!(!bk.is_empty());
    }

    #[test]
    fn generate_bk_appends_candidates_until_overflow() {
        let (_dir, root) = fixture_repo(&[
            ("one.py", "X1 = 1\n"),
            ("two.py", "X2 = 2\n"),
            ("three.py", "LONG_NAME_THAT_COSTS = 'a b c d e f g h i j'\n"),
            ("main.py", "from one import X1\nfrom two import X2\nfrom three import LONG_NAME_THAT_COSTS\ny = X1\ny\n"),
        ]);
        let graph = build_graph(&root).expect("graph");
        let counter = ApproxTokenizer;
        let relevant = vec!["main.X1".to_string()];
        let other = vec!["main.X2".to_string(), "main.LONG_NAME_THAT_COSTS".to_string()];
        let full = organize_bk(
            &[relevant.clone(), other.clone()].concat(),
            &graph,
            Scope::Complete,
        );
        let full_cost = counter.count(&full);
        // Fit everything.
        let bk = generate_bk(&relevant, &other, full_cost, &graph, Scope::Complete, &counter);
        assert!(bk.contains("X2 = 2"));
        assert!(bk.contains("LONG_NAME_THAT_COSTS"));
        // One short of everything: the last candidate is dropped whole.
        let bk = generate_bk(
            &relevant,
            &other,
            full_cost - 1,
            &graph,
            Scope::Complete,
            &counter,
        );
        assert!(bk.contains("X2 = 2"));
        assert!(!bk.contains("LONG_NAME_THAT_COSTS"));
        // The relevant rendering itself is intact in both cases.
        assert!(bk.contains("X1 = 1"));
    }

    #[test]
    fn build_prompt_wraps_background_before_code() {
        let (_dir, root) = helper_repo();
        let graph = build_graph(&root).expect("graph");
        let main = SourceFile::new("main.py", MAIN_PY.to_string());
        let plan = build_prompt(&main, None, &graph, 2048, Scope::Complete, &ApproxTokenizer)
            .expect("plan");
        assert!(plan.final_prompt.starts_with("'''\n"));
        assert!(plan.final_prompt.contains("\n'''\n"));
        assert!(plan.final_prompt.ends_with("h.\n"));
        assert_eq!(plan.module_order.last().map(String::as_str), Some("lib.py"));
        assert!(plan.background.contains("class Helper(Base):"));
        let wrapped_end = plan.final_prompt.rfind("\n'''\n").unwrap() + "\n'''\n".len();
        assert_eq!(&plan.final_prompt[wrapped_end..], plan.code_suffix);
    }

    #[test]
    fn build_prompt_respects_total_budget() {
        let (_dir, root) = helper_repo();
        let graph = build_graph(&root).expect("graph");
        let main = SourceFile::new("main.py", MAIN_PY.to_string());
        let counter = ApproxTokenizer;
        for total in [64usize, 96, 128, 256, 2048] {
            let plan =
                build_prompt(&main, None, &graph, total, Scope::Complete, &counter).expect("plan");
            assert!(
                counter.count(&plan.final_prompt) <= total,
                "budget {total} exceeded: {} tokens",
                counter.count(&plan.final_prompt)
            );
        }
    }

    #[test]
    fn build_prompt_without_retrieval_is_code_only() {
        let (_dir, root) = fixture_repo(&[("solo.py", "value = 1\nvalue\n")]);
        let graph = build_graph(&root).expect("graph");
        let solo = SourceFile::new("solo.py", "value = 1\nvalue\n".to_string());
        let plan = build_prompt(&solo, None, &graph, 2048, Scope::Complete, &ApproxTokenizer)
            .expect("plan");
        assert_eq!(plan.background, "");
        assert_eq!(plan.final_prompt, "value = 1\nvalue\n");
        assert!(plan.module_order.is_empty());
    }

    #[test]
    fn build_prompt_is_deterministic() {
        let (_dir, root) = helper_repo();
        let graph = build_graph(&root).expect("graph");
        let main = SourceFile::new("main.py", MAIN_PY.to_string());
        let a = build_prompt(&main, None, &graph, 512, Scope::Definition, &ApproxTokenizer)
            .expect("plan");
        let b = build_prompt(&main, None, &graph, 512, Scope::Definition, &ApproxTokenizer)
            .expect("plan");
        assert_eq!(a.final_prompt, b.final_prompt);
        assert_eq!(a.module_order, b.module_order);
    }

    #[test]
    fn definition_scope_shrinks_background() {
        let (_dir, root) = helper_repo();
        let graph = build_graph(&root).expect("graph");
        let counter = ApproxTokenizer;
        let complete = organize_bk(&["lib.Helper".to_string()], &graph, Scope::Complete);
        let definition = organize_bk(&["lib.Helper".to_string()], &graph, Scope::Definition);
        assert!(counter.count(&definition) <= counter.count(&complete));
        assert!(definition.contains("def go(self):"));
        assert!(!definition.contains("return Base()"));
    }
}
