// SPDX-License-Identifier: MIT
//! The causal-model description language.
//!
//! A model is written either as `.cdag` text (the human format) or as JSON
//! (the machine interchange format). Both decode to the same
//! [`ModelDocument`], and both writers round-trip field-for-field.
//!
//! ```text
//! model "chain" {
//!   assume PK1 "A drives B"
//!   node A { kind: observed, role: exposure, traces: [PK1] }
//!   node B { kind: latent }
//!   edge A -> B { traces: [PK1], mechanism: "temperature" }
//!   disturbance U_B -> B
//!   mechanism A linear_gaussian { intercept: 0, noise_sd: 1 }
//! }
//! ```

mod error;
mod lexer;
mod parser;
mod writer;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use error::{DslError, DslErrorKind, Position};
pub use parser::parse;
pub use writer::serialize;

/// Output format for [`serialize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Dsl,
    Json,
}

/// A tagged piece of prior knowledge (a functional requirement, a domain rule).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assumption {
    pub tag: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Observed,
    Latent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Exposure,
    Outcome,
    Covariate,
    Disturbance,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Observed => "observed",
            NodeKind::Latent => "latent",
        }
    }
}

impl NodeRole {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Exposure => "exposure",
            NodeRole::Outcome => "outcome",
            NodeRole::Covariate => "covariate",
            NodeRole::Disturbance => "disturbance",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for NodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDecl {
    pub name: String,
    pub kind: NodeKind,
    #[serde(default = "default_role")]
    pub role: NodeRole,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Overrides the default "parentless nodes are controllable in tests" rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controllable: Option<bool>,
}

fn default_role() -> NodeRole {
    NodeRole::Covariate
}

impl NodeDecl {
    pub fn new(name: impl Into<String>, kind: NodeKind) -> Self {
        NodeDecl {
            name: name.into(),
            kind,
            role: NodeRole::Covariate,
            traces: Vec::new(),
            label: None,
            controllable: None,
        }
    }

    pub fn with_role(mut self, role: NodeRole) -> Self {
        self.role = role;
        self
    }

    pub fn with_traces<I, S>(mut self, traces: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.traces = traces.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDecl {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanism_tag: Option<String>,
}

impl EdgeDecl {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        EdgeDecl {
            from: from.into(),
            to: to.into(),
            traces: Vec::new(),
            mechanism_tag: None,
        }
    }
}

/// A structural equation for one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanismDecl {
    /// `value = intercept + sum(weight * parent) + noise_sd * N(0, 1)`
    LinearGaussian {
        intercept: f64,
        noise_sd: f64,
        #[serde(default)]
        weights: BTreeMap<String, f64>,
    },
    /// `P(value = 1) = sigmoid(intercept + sum(weight * parent))`
    LogisticBinary {
        intercept: f64,
        #[serde(default)]
        weights: BTreeMap<String, f64>,
    },
    /// Conditional probability table over `levels` outcomes. Rows are indexed
    /// by the parents' values in mixed radix, first parent most significant.
    TableCpd {
        levels: u32,
        #[serde(default)]
        parents: Vec<String>,
        rows: Vec<Vec<f64>>,
    },
}

impl MechanismDecl {
    pub fn type_name(&self) -> &'static str {
        match self {
            MechanismDecl::LinearGaussian { .. } => "linear_gaussian",
            MechanismDecl::LogisticBinary { .. } => "logistic_binary",
            MechanismDecl::TableCpd { .. } => "table_cpd",
        }
    }

    /// Names of the parents this mechanism refers to.
    pub fn referenced_parents(&self) -> Vec<&str> {
        match self {
            MechanismDecl::LinearGaussian { weights, .. }
            | MechanismDecl::LogisticBinary { weights, .. } => {
                weights.keys().map(String::as_str).collect()
            }
            MechanismDecl::TableCpd { parents, .. } => parents.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub name: String,
    #[serde(default)]
    pub assumptions: Vec<Assumption>,
    #[serde(default)]
    pub nodes: Vec<NodeDecl>,
    #[serde(default)]
    pub edges: Vec<EdgeDecl>,
    /// Structural equations keyed by node; empty when the model has none.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub mechanisms: BTreeMap<String, MechanismDecl>,
}

impl ModelDocument {
    pub fn new(name: impl Into<String>) -> Self {
        ModelDocument {
            name: name.into(),
            assumptions: Vec::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
            mechanisms: BTreeMap::new(),
        }
    }

    /// Decodes the JSON interchange form and checks every document invariant.
    pub fn from_json(text: &str) -> Result<Self, DslError> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| DslError {
            position: Some(Position {
                line: e.line(),
                column: e.column(),
            }),
            kind: DslErrorKind::Json(e.to_string()),
        })?;
        doc.validate()?;
        Ok(doc)
    }

    /// Parses either format, choosing JSON when the first non-blank character is `{`.
    pub fn parse_any(text: &str) -> Result<Self, DslError> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            parse(text)
        }
    }

    pub fn node(&self, name: &str) -> Option<&NodeDecl> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn node_mut(&mut self, name: &str) -> Option<&mut NodeDecl> {
        self.nodes.iter_mut().find(|n| n.name == name)
    }

    /// Node declared with the given role, if any.
    pub fn node_with_role(&self, role: NodeRole) -> Option<&NodeDecl> {
        self.nodes.iter().find(|n| n.role == role)
    }

    /// Checks the document invariants that do not need a graph: unique tags and
    /// names, resolvable edge endpoints and trace tags, no self loops, at most one
    /// exposure and one outcome, and mechanisms attached to declared nodes.
    pub fn validate(&self) -> Result<(), DslError> {
        let err = |kind| {
            Err(DslError {
                position: None,
                kind,
            })
        };

        let mut tags = HashSet::new();
        for a in &self.assumptions {
            if !is_identifier(&a.tag) {
                return err(DslErrorKind::InvalidIdentifier(a.tag.clone()));
            }
            if !tags.insert(a.tag.as_str()) {
                return err(DslErrorKind::DuplicateAssumption(a.tag.clone()));
            }
        }

        let mut names: HashMap<&str, &NodeDecl> = HashMap::new();
        let mut exposure: Option<&str> = None;
        let mut outcome: Option<&str> = None;
        for n in &self.nodes {
            if !is_identifier(&n.name) {
                return err(DslErrorKind::InvalidIdentifier(n.name.clone()));
            }
            if names.insert(n.name.as_str(), n).is_some() {
                return err(DslErrorKind::DuplicateNode(n.name.clone()));
            }
            for t in &n.traces {
                if !tags.contains(t.as_str()) {
                    return err(DslErrorKind::UnknownTrace(t.clone()));
                }
            }
            let slot = match n.role {
                NodeRole::Exposure => Some(&mut exposure),
                NodeRole::Outcome => Some(&mut outcome),
                _ => None,
            };
            if let Some(slot) = slot {
                if slot.is_some() {
                    return err(DslErrorKind::DuplicateRole {
                        role: n.role,
                        name: n.name.clone(),
                    });
                }
                *slot = Some(&n.name);
            }
        }

        let mut seen_edges = HashSet::new();
        for e in &self.edges {
            for end in [&e.from, &e.to] {
                if !names.contains_key(end.as_str()) {
                    return err(DslErrorKind::UnknownEndpoint(end.clone()));
                }
            }
            if e.from == e.to {
                return err(DslErrorKind::SelfLoop(e.from.clone()));
            }
            if !seen_edges.insert((e.from.as_str(), e.to.as_str())) {
                return err(DslErrorKind::DuplicateEdge {
                    from: e.from.clone(),
                    to: e.to.clone(),
                });
            }
            for t in &e.traces {
                if !tags.contains(t.as_str()) {
                    return err(DslErrorKind::UnknownTrace(t.clone()));
                }
            }
        }

        for (node, m) in &self.mechanisms {
            if !names.contains_key(node.as_str()) {
                return err(DslErrorKind::UnknownMechanismNode(node.clone()));
            }
            for p in m.referenced_parents() {
                if !names.contains_key(p) {
                    return err(DslErrorKind::UnknownEndpoint(p.to_string()));
                }
            }
            check_mechanism_values(node, m).map_err(|kind| DslError {
                position: None,
                kind,
            })?;
        }
        Ok(())
    }
}

pub(crate) fn check_mechanism_values(node: &str, m: &MechanismDecl) -> Result<(), DslErrorKind> {
    let bad = |message: String| {
        Err(DslErrorKind::InvalidValue {
            key: node.to_string(),
            message,
        })
    };
    match m {
        MechanismDecl::LinearGaussian {
            intercept,
            noise_sd,
            weights,
        } => {
            if !intercept.is_finite() || weights.values().any(|w| !w.is_finite()) {
                return bad("coefficients must be finite".into());
            }
            if !(noise_sd.is_finite() && *noise_sd > 0.0) {
                return bad(format!("noise_sd must be positive, got {noise_sd}"));
            }
        }
        MechanismDecl::LogisticBinary { intercept, weights } => {
            if !intercept.is_finite() || weights.values().any(|w| !w.is_finite()) {
                return bad("coefficients must be finite".into());
            }
        }
        MechanismDecl::TableCpd {
            levels,
            parents,
            rows,
        } => {
            if *levels < 2 {
                return bad(format!("table_cpd needs at least 2 levels, got {levels}"));
            }
            let mut seen = HashSet::new();
            for p in parents {
                if !seen.insert(p) {
                    return bad(format!("parent `{p}` listed twice"));
                }
            }
            if rows.is_empty() {
                return bad("table_cpd needs at least one row".into());
            }
            for row in rows {
                if row.len() != *levels as usize {
                    return bad(format!(
                        "table_cpd row has {} entries, expected {levels}",
                        row.len()
                    ));
                }
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return bad("table_cpd probabilities must be finite and non-negative".into());
                }
            }
        }
    }
    Ok(())
}

/// Identifiers: a letter or `_`, then letters, digits, `_`, or `-` followed by
/// another identifier character (so `FR-1` is one identifier but `A->B` is not).
pub fn is_identifier(s: &str) -> bool {
    let chars: Vec<char> = s.chars().collect();
    let Some(first) = chars.first() else {
        return false;
    };
    if !(first.is_ascii_alphabetic() || *first == '_') {
        return false;
    }
    for (i, c) in chars.iter().enumerate().skip(1) {
        match c {
            c if c.is_ascii_alphanumeric() || *c == '_' => {}
            '-' => {
                let next = chars.get(i + 1);
                if !matches!(next, Some(n) if n.is_ascii_alphanumeric() || *n == '_') {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests;
