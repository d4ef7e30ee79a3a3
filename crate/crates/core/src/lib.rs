//! Repository context engine for code completion.
//!
//! Indexes a Python repository into a context graph — code entities
//! (modules, classes, functions, variables), their containment and import
//! structure, and type-sensitive dataflow between names — and retrieves the
//! entities most relevant to an unfinished file, assembling them into a
//! budgeted background-knowledge prompt for a completion model.

pub mod dataflow;
pub mod entity;
pub mod error;
pub mod eval;
pub mod graph;
pub mod index;
pub mod prompt;
pub mod render;
pub mod retrieval;
pub mod source;
pub mod syntax;
pub mod tokens;

pub use error::{Error, Result};
