//! Serialization: LP and free MPS for canonical forms, JSON documents for
//! typed models, and a reader for the LP/MPS subset written here.

mod document;
mod lp;
mod mps;

pub use document::{parse_model, write_model, SCHEMA_VERSION};
pub use lp::{emit_lp, parse_lp};
pub use mps::{emit_mps, parse_mps};

use crate::lowering::CanonicalForm;
use crate::model::{Diagnostic, NodeId};
use crate::rational::Rational;

/// Significant digits allowed in emitted numbers.
pub const MAX_DECIMAL_DIGITS: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmitError {
    #[error("{value} in {context} has no decimal form within {MAX_DECIMAL_DIGITS} significant digits")]
    NonDecimalCoefficient { value: Rational, context: String },
    #[error("unsupported dialect: {0}")]
    UnsupportedDialect(String),
    #[error("line {line}, column {col}: {message}")]
    ParseError { line: usize, col: usize, message: String },
    #[error("schema version {found:?} is not supported (expected {expected:?})")]
    SchemaMismatch { found: String, expected: String },
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("document describes an invalid model: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

impl EmitError {
    pub fn code(&self) -> &'static str {
        match self {
            EmitError::NonDecimalCoefficient { .. } => "NonDecimalCoefficient",
            EmitError::UnsupportedDialect(_) => "UnsupportedDialect",
            EmitError::ParseError { .. } => "ParseError",
            EmitError::SchemaMismatch { .. } => "SchemaMismatch",
            EmitError::MalformedDocument(_) => "MalformedDocument",
            EmitError::Invalid(_) => "ValidationFailed",
        }
    }

    fn parse(line: usize, col: usize, message: impl Into<String>) -> Self {
        EmitError::ParseError { line, col, message: message.into() }
    }
}

fn decimal(value: Rational, context: impl FnOnce() -> String) -> Result<String, EmitError> {
    value
        .to_decimal(MAX_DECIMAL_DIGITS)
        .ok_or_else(|| EmitError::NonDecimalCoefficient { value, context: context() })
}

fn row_name(index: usize) -> String {
    format!("c{index}")
}

/// Provenance attached to each row as a comment.
fn provenance(index: usize, source: usize, node: Option<NodeId>) -> String {
    let node = node.map_or_else(|| "-".to_string(), |n| n.to_string());
    format!("{} source={source} omt={node}", row_name(index))
}

/// Inverse of [`provenance`]: `(row index, source, node)`.
fn parse_provenance(text: &str) -> Option<(usize, usize, Option<NodeId>)> {
    let mut parts = text.split_whitespace();
    let index = parts.next()?.strip_prefix('c')?.parse().ok()?;
    let source = parts.next()?.strip_prefix("source=")?.parse().ok()?;
    let node = match parts.next()?.strip_prefix("omt=")? {
        "-" => None,
        n => Some(n.parse().ok()?),
    };
    parts.next().is_none().then_some((index, source, node))
}

/// Splits a line into whitespace-separated tokens with 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

/// Parses either format, telling them apart by the first keyword.
pub fn parse_canonical(text: &str) -> Result<CanonicalForm, EmitError> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('\\') && !l.starts_with('*'));
    match first.map(|l| l.split_whitespace().next().unwrap_or("")) {
        Some("Maximize" | "Minimize") => parse_lp(text),
        Some("NAME" | "ROWS" | "OBJSENSE") => parse_mps(text),
        Some(_) => Err(EmitError::UnsupportedDialect("unrecognized file header".into())),
        None => Err(EmitError::parse(1, 1, "empty file")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_round_trip() {
        assert_eq!(parse_provenance(&provenance(3, 1, Some(11))), Some((3, 1, Some(11))));
        assert_eq!(parse_provenance(&provenance(0, 0, None)), Some((0, 0, None)));
        assert_eq!(parse_provenance("c0 source=x omt=1"), None);
    }

    #[test]
    fn token_columns() {
        assert_eq!(tokens("  c0: x1  <= 2"), vec![(3, "c0:"), (7, "x1"), (11, "<="), (14, "2")]);
    }

    #[test]
    fn dispatch() {
        assert!(matches!(parse_canonical(""), Err(EmitError::ParseError { .. })));
        assert!(matches!(parse_canonical("hello"), Err(EmitError::UnsupportedDialect(_))));
    }
}
