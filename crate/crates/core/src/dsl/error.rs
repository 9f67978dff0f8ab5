// SPDX-License-Identifier: MIT
use std::fmt;

use serde::Serialize;

use super::NodeRole;

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DslErrorKind {
    Syntax(String),
    Json(String),
    InvalidIdentifier(String),
    DuplicateNode(String),
    DuplicateAssumption(String),
    DuplicateEdge { from: String, to: String },
    DuplicateRole { role: NodeRole, name: String },
    DuplicateMechanism(String),
    DuplicateAttribute(String),
    UnknownEndpoint(String),
    UnknownTrace(String),
    UnknownAttribute(String),
    UnknownMechanismNode(String),
    MissingAttribute(String),
    SelfLoop(String),
    InvalidValue { key: String, message: String },
}

/// A diagnostic produced while reading a model. DSL input carries a position;
/// JSON input and whole-document checks may not.
#[derive(Debug, Clone, PartialEq)]
pub struct DslError {
    pub position: Option<Position>,
    pub kind: DslErrorKind,
}

impl DslError {
    pub(crate) fn at(position: Position, kind: DslErrorKind) -> Self {
        DslError {
            position: Some(position),
            kind,
        }
    }

    /// The identifier the diagnostic is about, when there is one.
    pub fn identifier(&self) -> Option<&str> {
        use DslErrorKind::*;
        match &self.kind {
            Syntax(_) | Json(_) => None,
            InvalidIdentifier(s)
            | DuplicateNode(s)
            | DuplicateAssumption(s)
            | DuplicateMechanism(s)
            | DuplicateAttribute(s)
            | UnknownEndpoint(s)
            | UnknownTrace(s)
            | UnknownAttribute(s)
            | UnknownMechanismNode(s)
            | MissingAttribute(s)
            | SelfLoop(s) => Some(s),
            DuplicateEdge { from, .. } => Some(from),
            DuplicateRole { name, .. } => Some(name),
            InvalidValue { key, .. } => Some(key),
        }
    }

    /// Short machine-readable code, used in JSON diagnostics.
    pub fn code(&self) -> &'static str {
        use DslErrorKind::*;
        match &self.kind {
            Syntax(_) => "syntax",
            Json(_) => "json",
            InvalidIdentifier(_) => "invalid_identifier",
            DuplicateNode(_) => "duplicate_node",
            DuplicateAssumption(_) => "duplicate_assumption",
            DuplicateEdge { .. } => "duplicate_edge",
            DuplicateRole { .. } => "duplicate_role",
            DuplicateMechanism(_) => "duplicate_mechanism",
            DuplicateAttribute(_) => "duplicate_attribute",
            UnknownEndpoint(_) => "unknown_endpoint",
            UnknownTrace(_) => "unknown_trace",
            UnknownAttribute(_) => "unknown_attribute",
            UnknownMechanismNode(_) => "unknown_mechanism_node",
            MissingAttribute(_) => "missing_attribute",
            SelfLoop(_) => "self_loop",
            InvalidValue { .. } => "invalid_value",
        }
    }

    pub fn message(&self) -> String {
        use DslErrorKind::*;
        match &self.kind {
            Syntax(m) => format!("syntax error: {m}"),
            Json(m) => format!("invalid JSON model: {m}"),
            InvalidIdentifier(s) => format!("`{s}` is not a valid identifier"),
            DuplicateNode(s) => format!("duplicate node `{s}`"),
            DuplicateAssumption(s) => format!("duplicate assumption tag `{s}`"),
            DuplicateEdge { from, to } => format!("duplicate edge `{from} -> {to}`"),
            DuplicateRole { role, name } => {
                format!("node `{name}` is a second {role}; at most one is allowed")
            }
            DuplicateMechanism(s) => format!("node `{s}` has more than one mechanism"),
            DuplicateAttribute(s) => format!("attribute `{s}` given twice"),
            UnknownEndpoint(s) => format!("unknown node `{s}`"),
            UnknownTrace(s) => format!("trace tag `{s}` does not name an assumption"),
            UnknownAttribute(s) => format!("unknown attribute `{s}`"),
            UnknownMechanismNode(s) => format!("mechanism for undeclared node `{s}`"),
            MissingAttribute(s) => format!("missing required attribute `{s}`"),
            SelfLoop(s) => format!("self-loop on `{s}`: a variable cannot cause itself"),
            InvalidValue { key, message } => format!("invalid value for `{key}`: {message}"),
        }
    }
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.position {
            Some(p) => write!(f, "{p}: {}", self.message()),
            None => f.write_str(&self.message()),
        }
    }
}

impl std::error::Error for DslError {}
