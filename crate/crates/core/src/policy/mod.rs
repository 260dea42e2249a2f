//! Attribute-based curation policies.
//!
//! A policy is a list of prioritized allow/deny rules per target (share,
//! upload, retain), an optional default per target and an optional advisory
//! discard budget. For each target the matching rule with the highest
//! priority decides; equal priorities go to the earlier rule.

mod ast;
mod attrs;
mod eval;
mod lexer;
mod parser;

use thiserror::Error;

pub use ast::{Action, Comparison, ConfidenceSubject, Expr, Policy, Rule, Target, Term};
pub use attrs::{AttributeSource, ImageAttributes};
pub use eval::{
    curate, evaluate, write_decisions, CurationDecision, CurationReport, CurationStats,
    CurationWarning, TargetDecision, DECISIONS_HEADER,
};
pub use parser::parse_policy;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("syntax error at {line}:{col}: {message}")]
    SyntaxError {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("duplicate default for target '{0}'")]
    DuplicateDefault(Target),
    #[error("unknown identifier '{name}' at {line}:{col}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("priority {0} is used by more than one rule")]
    DuplicatePriority(i64),
    #[error("invalid attributes: {0}")]
    InvalidAttributes(String),
    #[error("I/O error: {0}")]
    Io(String),
}
