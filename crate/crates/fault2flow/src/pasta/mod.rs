//! The PASTA fault-tree DSL: grammar, parser, canonical serializer,
//! self-checking and direct evaluation.
//!
//! The DSL is line-oriented, UTF-8, with `#` comments and case-sensitive
//! identifiers matching `[a-z_][a-z0-9_]*`:
//!
//! ```text
//! tree <id>
//! param <id> unit "<text>"
//! ratio <id> = <id> / <id>
//! basic <id> : <param-id> <op> <number>          # op: < <= > >=
//! gate <id> = and(<id-list>) | or(<id-list>) | kofn(<k>; <id-list>)
//! top <fault_class_id> = <id>
//! ```
//!
//! Canonical form (what `emit_pasta` produces) is LF-terminated, schema
//! first, every gate defined before its first use, top events in declaration
//! order. `parse_pasta(emit_pasta(t))` is structurally equal to `t`, and
//! `emit_pasta` is the identity on canonical sources.

mod ast;
mod check;
mod emit;
mod eval;
mod parse;

pub use ast::{
    Assignment, CmpOp, Condition, FaultTree, GateKind, Node, NodeId, ParamKind, ParamSpec,
};
pub use check::{self_check, self_check_with, CheckReport, Finding, SelfCheckOptions, Severity};
pub use emit::emit_pasta;
pub use eval::evaluate;
pub use parse::parse_pasta;

use thiserror::Error;

/// Errors from parsing, constructing or evaluating fault trees.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum PastaError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    SyntaxError { line: usize, column: usize, message: String },
    #[error("duplicate identifier `{id}`")]
    DuplicateId { id: String },
    #[error("unresolved reference `{id}` (referenced by `{referrer}`)")]
    UnresolvedReference { id: String, referrer: String },
    #[error("cycle detected through `{id}`")]
    CycleDetected { id: String },
    #[error("derived parameter `{id}` references non-measured parameter `{via}`")]
    DerivedOverDerived { id: String, via: String },
    #[error("non-finite value for `{name}`")]
    NonFiniteValue { name: String },
    #[error("division by zero computing derived parameter `{param}`")]
    DivisionByZero { param: String },
    #[error("missing measured parameter `{param}` in input assignment")]
    MissingParameter { param: String },
}
