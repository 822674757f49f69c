use thiserror::Error;

use crate::sexp::Pos;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        SyntaxError {
            pos,
            message: message.into(),
        }
    }
}

/// Errors raised while turning program text into a validated [`crate::Program`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: unknown class `{name}`")]
    UnknownClass { name: String, pos: Pos },
    #[error("{pos}: duplicate class `{name}`")]
    DuplicateClass { name: String, pos: Pos },
    #[error("{pos}: duplicate field `{name}` in class `{class}`")]
    DuplicateField { class: String, name: String, pos: Pos },
    #[error("{pos}: duplicate method `{name}` in class `{class}` (overloading is not supported)")]
    DuplicateMethod { class: String, name: String, pos: Pos },
    #[error("{pos}: label `{label}` is not defined in method `{method}`")]
    DanglingLabel { method: String, label: String, pos: Pos },
    #[error("{pos}: label `{label}` is defined twice in method `{method}`")]
    DuplicateLabel { method: String, label: String, pos: Pos },
    #[error("inheritance cycle through `{name}`")]
    InheritanceCycle { name: String },
    #[error("{pos}: register `{name}` is reserved and cannot be assigned")]
    ReservedRegister { name: String, pos: Pos },
}

/// Method lookup failed after walking the whole superclass chain.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("method `{method}` not found; searched {}", chain.join(" -> "))]
pub struct ResolveError {
    pub method: String,
    pub chain: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredicateError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: unknown predicate primitive `{name}`")]
    UnknownPrimitive { name: String, pos: Pos },
    #[error("{pos}: color string must not be empty")]
    EmptyColor { pos: Pos },
    #[error("{pos}: {message}")]
    Malformed { message: String, pos: Pos },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("entry point `{0}` is not defined")]
    EntryNotFound(String),
    #[error("entry point `{0}` must be written CLASS/METHOD")]
    BadEntrySyntax(String),
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
