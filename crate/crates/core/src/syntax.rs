//! Error-tolerant Python parsing.
//!
//! Parsing never fails on syntactically broken input: unfinished files (the
//! normal case for completion contexts) produce a tree with error nodes that
//! still expose the recoverable structure around them. Tree positions are
//! 0-based internally; anything user-facing reports 1-based lines.

use tree_sitter::{Node, Parser, Tree};

use crate::error::{Error, Result};
use crate::source::SourceFile;

/// A parsed file: the syntax tree plus the text it was parsed from.
pub struct SyntaxTree {
    tree: Tree,
    text: String,
    /// True when the tree contains error or missing nodes.
    pub has_errors: bool,
}

impl SyntaxTree {
    pub fn root(&self) -> Node<'_> {
        self.tree.root_node()
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Source text of a node.
    pub fn node_text(&self, node: Node<'_>) -> &str {
        &self.text[node.byte_range()]
    }

    /// Canonical s-expression of the tree (used by determinism tests).
    pub fn to_sexp(&self) -> String {
        self.tree.root_node().to_sexp()
    }
}

/// Parse a source file. Total: any UTF-8 input yields a tree.
pub fn parse(file: &SourceFile) -> Result<SyntaxTree> {
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_python::LANGUAGE.into())
        .map_err(|e| Error::Parser(e.to_string()))?;
    let tree = parser
        .parse(&file.text, None)
        .ok_or_else(|| Error::Parser("parser returned no tree".to_string()))?;
    let has_errors = tree.root_node().has_error();
    Ok(SyntaxTree {
        tree,
        text: file.text.clone(),
        has_errors,
    })
}

/// Walk every node of the tree in document order (pre-order), calling the
/// visitor exactly once per node, named and anonymous alike.
pub fn walk<'t>(tree: &'t SyntaxTree, mut visitor: impl FnMut(Node<'t>)) {
    let mut cursor = tree.root().walk();
    loop {
        visitor(cursor.node());
        if cursor.goto_first_child() {
            continue;
        }
        loop {
            if cursor.goto_next_sibling() {
                break;
            }
            if !cursor.goto_parent() {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_parses_to_empty_module() {
        let tree = parse(&SourceFile::new("a.py", "")).unwrap();
        assert_eq!(tree.root().kind(), "module");
        assert_eq!(tree.root().child_count(), 0);
        assert!(!tree.has_errors);
    }

    #[test]
    fn unfinished_attribute_is_flagged_and_recoverable() {
        let tree = parse(&SourceFile::new("a.py", "x = 1\nnewSignal.")).unwrap();
        assert!(tree.has_errors);
        // The identifier before the dangling dot survives in the tree.
        let mut found = false;
        walk(&tree, |n| {
            if n.kind() == "identifier" && tree.node_text(n) == "newSignal" {
                found = true;
            }
        });
        assert!(found, "trailing identifier should be recoverable");
    }

    #[test]
    fn walk_visits_every_node_once() {
        let tree = parse(&SourceFile::new("a.py", "v = u\nw = v\n")).unwrap();
        let mut ids = Vec::new();
        walk(&tree, |n| ids.push(n.id()));
        let mut dedup = ids.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(ids.len(), dedup.len(), "no node visited twice");
        // Document order: byte starts are non-decreasing for parents/children.
        let tree2 = parse(&SourceFile::new("a.py", "v = u\nw = v\n")).unwrap();
        assert_eq!(tree.to_sexp(), tree2.to_sexp(), "parsing is deterministic");
    }

    #[test]
    fn spans_are_sound() {
        let src = "def f(a, b):\n    return a + b\n";
        let tree = parse(&SourceFile::new("a.py", src)).unwrap();
        walk(&tree, |n| {
            assert!(n.start_byte() <= n.end_byte());
            assert!(n.end_byte() <= src.len());
            assert!(src.is_char_boundary(n.start_byte()));
            assert!(src.is_char_boundary(n.end_byte()));
        });
    }
}
