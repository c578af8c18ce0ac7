//! STEP (ISO 10303-21) ingestion: tokenizer, entity graph, B-rep resolution.

mod lexer;
mod parser;
mod resolve;

use std::path::Path;

pub use lexer::{print_tokens, tokenize_part21, Token, TokenKind};
pub use parser::{parse_part21, EntityGraph, HeaderRecord, Part21Entity, Value};
pub use resolve::{resolve_brep, CHORD_TOL, EDGE_SAMPLES, INVERSION_TOL};

use crate::brep::Solid;

#[derive(Debug, thiserror::Error)]
pub enum StepError {
    #[error("{line}:{col}: lexical error: {msg}")]
    Lex { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: syntax error: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: duplicate entity id #{id}")]
    DuplicateId { id: u64, line: usize, col: usize },
    #[error("line {line}: #{from} references undefined #{to}")]
    DanglingReference { from: u64, to: u64, line: usize },
    #[error("unsupported entity {0}")]
    UnsupportedEntity(String),
    #[error("edge #{entity}: UV inversion error {error:.3e} exceeds tolerance")]
    InversionFailure { entity: u64, error: f64 },
    #[error("{0}")]
    Resolve(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Tokenizes, parses and resolves a STEP file into a [`Solid`].
pub fn read_step(path: impl AsRef<Path>) -> Result<Solid, StepError> {
    let bytes = std::fs::read(path)?;
    parse_step_bytes(&bytes)
}

pub fn parse_step_bytes(bytes: &[u8]) -> Result<Solid, StepError> {
    let tokens = tokenize_part21(bytes)?;
    let graph = parse_part21(&tokens)?;
    resolve_brep(&graph)
}
