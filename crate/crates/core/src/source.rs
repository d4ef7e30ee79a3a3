//! Source files as fed to the parser.

use std::path::Path;

use crate::error::{Error, Result};

/// A single source file, addressed by its repository-relative path.
///
/// Paths always use forward slashes, regardless of platform. `line_count`
/// is the number of newline-delimited lines in `text`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub repo_relative_path: String,
    pub text: String,
    pub line_count: u32,
}

impl SourceFile {
    /// Build a source file from in-memory text.
    pub fn new(repo_relative_path: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let line_count = text.lines().count() as u32;
        SourceFile {
            repo_relative_path: normalize_path(&repo_relative_path.into()),
            text,
            line_count,
        }
    }

    /// Read a file from disk. Non-UTF-8 content is rejected with an
    /// encoding error naming the file.
    pub fn read(disk_path: &Path, repo_relative_path: &str) -> Result<Self> {
        let bytes = std::fs::read(disk_path).map_err(|source| Error::Io {
            path: disk_path.to_path_buf(),
            source,
        })?;
        let text = String::from_utf8(bytes).map_err(|_| Error::Encoding {
            path: disk_path.to_path_buf(),
        })?;
        Ok(SourceFile::new(repo_relative_path, text))
    }

    /// Byte offset of a 1-based (line, column) cursor, where column 1 sits
    /// before the first character of the line. Errors when the position is
    /// outside the file.
    pub fn cursor_offset(&self, line: u32, column: u32) -> Result<usize> {
        let out_of_range = || Error::CursorOutOfRange {
            line,
            column,
            line_count: self.line_count,
        };
        if line == 0 || column == 0 {
            return Err(out_of_range());
        }
        let mut current = 1u32;
        let mut line_start = 0usize;
        if line > 1 {
            let mut found = false;
            for (idx, ch) in self.text.char_indices() {
                if ch == '\n' {
                    current += 1;
                    if current == line {
                        line_start = idx + 1;
                        found = true;
                        break;
                    }
                }
            }
            if !found {
                return Err(out_of_range());
            }
        }
        let line_end = self.text[line_start..]
            .find('\n')
            .map(|i| line_start + i)
            .unwrap_or(self.text.len());
        let line_text = &self.text[line_start..line_end];
        let mut chars = 1u32;
        for (idx, _) in line_text.char_indices() {
            if chars == column {
                return Ok(line_start + idx);
            }
            chars += 1;
        }
        if chars == column {
            return Ok(line_end);
        }
        Err(out_of_range())
    }

    /// The file truncated at a 1-based (line, column) cursor: everything
    /// the completion model would see.
    pub fn truncated_at(&self, line: u32, column: u32) -> Result<SourceFile> {
        let offset = self.cursor_offset(line, column)?;
        Ok(SourceFile::new(
            self.repo_relative_path.clone(),
            &self.text[..offset],
        ))
    }
}

/// Normalize a repository-relative path to forward slashes.
pub fn normalize_path(path: &str) -> String {
    path.replace('\\', "/")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_count_matches_lines() {
        assert_eq!(SourceFile::new("a.py", "").line_count, 0);
        assert_eq!(SourceFile::new("a.py", "x = 1").line_count, 1);
        assert_eq!(SourceFile::new("a.py", "x = 1\ny = 2\n").line_count, 2);
    }

    #[test]
    fn cursor_offsets() {
        let f = SourceFile::new("a.py", "ab\ncd\n");
        assert_eq!(f.cursor_offset(1, 1).unwrap(), 0);
        assert_eq!(f.cursor_offset(1, 3).unwrap(), 2);
        assert_eq!(f.cursor_offset(2, 2).unwrap(), 4);
        assert_eq!(f.cursor_offset(2, 3).unwrap(), 5);
        assert!(f.cursor_offset(4, 1).is_err());
        assert!(f.cursor_offset(1, 9).is_err());
        assert!(f.cursor_offset(0, 1).is_err());
    }

    #[test]
    fn truncation_keeps_prefix() {
        let f = SourceFile::new("a.py", "ab\ncd\n");
        let t = f.truncated_at(2, 2).unwrap();
        assert_eq!(t.text, "ab\nc");
        assert_eq!(t.line_count, 2);
    }
}
