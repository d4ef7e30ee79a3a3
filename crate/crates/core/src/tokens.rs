//! Token counting behind a pluggable interface.
//!
//! Budgets must not hard-depend on any particular model's tokenizer, so
//! counting is a trait; the default is a deterministic approximation that
//! splits on identifier/number/operator/whitespace boundaries. Exact
//! model tokenizers can be slotted in as adapters behind the same trait.

use crate::error::{Error, Result};

/// Names accepted by [`tokenizer`].
pub const AVAILABLE_TOKENIZERS: &[&str] = &["approx"];

pub trait TokenCounter: Send + Sync {
    fn name(&self) -> &str;
    /// Number of tokens in `text`.
    fn count(&self, text: &str) -> usize;
    /// Longest prefix of `text` containing at most `n` tokens.
    fn truncate_to_first<'a>(&self, text: &'a str, n: usize) -> &'a str;
    /// Shortest suffix of `text` containing the last `n` tokens (the whole
    /// text when it has fewer).
    fn truncate_to_last<'a>(&self, text: &'a str, n: usize) -> &'a str;
}

/// Look up a tokenizer adapter by name.
pub fn tokenizer(name: &str) -> Result<Box<dyn TokenCounter>> {
    match name {
        "approx" => Ok(Box::new(ApproxTokenizer)),
        _ => Err(Error::UnknownTokenizer {
            name: name.to_string(),
            available: AVAILABLE_TOKENIZERS.join(", "),
        }),
    }
}

/// Deterministic approximate tokenizer: a maximal identifier/number run, a
/// maximal whitespace run, and every other single character each count as
/// one token.
#[derive(Debug, Clone, Copy, Default)]
pub struct ApproxTokenizer;

#[derive(PartialEq, Clone, Copy)]
enum Class {
    Word,
    Space,
    Punct,
}

fn classify(c: char) -> Class {
    if c.is_alphanumeric() || c == '_' {
        Class::Word
    } else if c.is_whitespace() {
        Class::Space
    } else {
        Class::Punct
    }
}

/// Byte offsets where each token starts.
fn token_starts(text: &str) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut previous: Option<Class> = None;
    for (idx, c) in text.char_indices() {
        let class = classify(c);
        let starts_new = match (previous, class) {
            (None, _) => true,
            (_, Class::Punct) => true,
            (Some(p), c) => p != c,
        };
        if starts_new {
            starts.push(idx);
        }
        previous = Some(class);
    }
    starts
}

impl TokenCounter for ApproxTokenizer {
    fn name(&self) -> &str {
        "approx"
    }

    fn count(&self, text: &str) -> usize {
        let mut count = 0usize;
        let mut previous: Option<Class> = None;
        for c in text.chars() {
            let class = classify(c);
            let starts_new = match (previous, class) {
                (None, _) => true,
                (_, Class::Punct) => true,
                (Some(p), c) => p != c,
            };
            if starts_new {
                count += 1;
            }
            previous = Some(class);
        }
        count
    }

    fn truncate_to_first<'a>(&self, text: &'a str, n: usize) -> &'a str {
        let starts = token_starts(text);
        match starts.get(n) {
            Some(&cut) => &text[..cut],
            None => text,
        }
    }

    fn truncate_to_last<'a>(&self, text: &'a str, n: usize) -> &'a str {
        if n == 0 {
            return "";
        }
        let starts = token_starts(text);
        if starts.len() <= n {
            text
        } else {
            &text[starts[starts.len() - n]..]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_mixed_code_line() {
        let t = ApproxTokenizer;
        // x | space | = | space | f | ( | y_2 | )
        assert_eq!(t.count("x = f(y_2)"), 8);
        assert_eq!(t.count(""), 0);
        assert_eq!(t.count("   "), 1);
        assert_eq!(t.count("abc"), 1);
        assert_eq!(t.count("3.14"), 3);
    }

    #[test]
    fn truncate_first_keeps_token_boundaries() {
        let t = ApproxTokenizer;
        let text = "alpha beta gamma";
        assert_eq!(t.truncate_to_first(text, 0), "");
        assert_eq!(t.truncate_to_first(text, 1), "alpha");
        assert_eq!(t.truncate_to_first(text, 2), "alpha ");
        assert_eq!(t.truncate_to_first(text, 3), "alpha beta");
        assert_eq!(t.truncate_to_first(text, 99), text);
    }

    #[test]
    fn truncate_last_keeps_suffix() {
        let t = ApproxTokenizer;
        let text = "alpha beta gamma";
        assert_eq!(t.truncate_to_last(text, 1), "gamma");
        assert_eq!(t.truncate_to_last(text, 2), " gamma");
        assert_eq!(t.truncate_to_last(text, 3), "beta gamma");
        assert_eq!(t.truncate_to_last(text, 99), text);
    }

    #[test]
    fn truncation_counts_are_bounded() {
        let t = ApproxTokenizer;
        let text = "def f(a, b):\n    return a + b\n";
        for n in 0..40 {
            assert!(t.count(t.truncate_to_first(text, n)) <= n);
            assert!(t.count(t.truncate_to_last(text, n)) <= n);
        }
    }

    #[test]
    fn unknown_tokenizer_lists_available() {
        let Err(err) = tokenizer("banana").map(|_| ()) else {
            panic!("expected an error");
        };
        let message = err.to_string();
        assert!(message.contains("banana"));
        assert!(message.contains("approx"));
    }
}
