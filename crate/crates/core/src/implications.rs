// SPDX-License-Identifier: MIT
//! Conditional-independence statements implied by a DAG.
//!
//! The module only ever claims graph-implied independence. A pair that is not
//! separated is reported as "not implied independent", never as dependent.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{combinations, d_separated, AnalysisError, SeparationQuery};
use crate::graph::{CausalDag, NodeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    LocalMarkov,
    MinimalSeparator,
    UserAsserted,
}

/// `x ⊥ y | given`, stored with `x < y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CiStatement {
    pub x: String,
    pub y: String,
    pub given: NodeSet,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImplicationError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("scope must contain at least two nodes, got {0}")]
    ScopeTooSmall(usize),
    #[error("cannot read `{0}` as an independence statement")]
    Malformed(String),
}

impl CiStatement {
    /// Builds a statement in canonical order.
    pub fn new(
        x: impl Into<String>,
        y: impl Into<String>,
        given: NodeSet,
        provenance: Provenance,
    ) -> Self {
        let (x, y) = (x.into(), y.into());
        let (x, y) = if y < x { (y, x) } else { (x, y) };
        CiStatement {
            x,
            y,
            given,
            provenance,
        }
    }

    /// Same pair and conditioning set, regardless of provenance.
    pub fn same_claim(&self, other: &CiStatement) -> bool {
        self.x == other.x && self.y == other.y && self.given == other.given
    }

    pub fn variables(&self) -> NodeSet {
        let mut s = self.given.clone();
        s.insert(self.x.clone());
        s.insert(self.y.clone());
        s
    }

    pub fn involves(&self, node: &str) -> bool {
        self.x == node || self.y == node
    }

    /// The other member of the pair, if `node` is one of them.
    pub fn partner(&self, node: &str) -> Option<&str> {
        if self.x == node {
            Some(&self.y)
        } else if self.y == node {
            Some(&self.x)
        } else {
            None
        }
    }

    pub fn query(&self) -> SeparationQuery {
        SeparationQuery::new(self.x.clone(), self.y.clone(), self.given.clone())
    }

    /// Reads `X ⊥ Y | A, B` (also `_||_` or `_|_` for the symbol; the
    /// conditioning part is optional).
    pub fn parse(text: &str, provenance: Provenance) -> Result<Self, ImplicationError> {
        let malformed = || ImplicationError::Malformed(text.to_string());
        let normalized = text.replace("_||_", "⊥").replace("_|_", "⊥");
        let (pair, given) = match normalized.split_once('|') {
            Some((p, g)) => (p, NodeSet::parse_list(g)),
            None => (normalized.as_str(), NodeSet::new()),
        };
        let (x, y) = pair.split_once('⊥').ok_or_else(malformed)?;
        let (x, y) = (x.trim(), y.trim());
        let ident = |s: &str| crate::dsl::is_identifier(s);
        if !ident(x) || !ident(y) || x == y || !given.iter().all(|g| ident(g)) {
            return Err(malformed());
        }
        if given.contains(x) || given.contains(y) {
            return Err(malformed());
        }
        Ok(CiStatement::new(x, y, given, provenance))
    }

    fn sort_key(&self) -> (&str, &str, usize, &NodeSet) {
        (&self.x, &self.y, self.given.len(), &self.given)
    }
}

impl PartialOrd for CiStatement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CiStatement {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then(self.provenance.cmp(&other.provenance))
    }
}

impl fmt::Display for CiStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⊥ {}", self.x, self.y)?;
        if !self.given.is_empty() {
            let g: Vec<&str> = self.given.iter().map(String::as_str).collect();
            write!(f, " | {}", g.join(", "))?;
        }
        Ok(())
    }
}

/// Pairwise expansion of the local Markov condition: each node is independent
/// of every non-descendant non-parent given its parents.
pub fn local_markov_basis(dag: &CausalDag) -> Vec<CiStatement> {
    let mut out: Vec<CiStatement> = Vec::new();
    for node in dag.nodes() {
        let name = &node.name;
        let parents = dag.parents(name).expect("node exists");
        let descendants = dag.descendants(name).expect("node exists");
        for other in dag.nodes() {
            let o = &other.name;
            if o == name || parents.contains(o) || descendants.contains(o) {
                continue;
            }
            let s = CiStatement::new(
                name.clone(),
                o.clone(),
                parents.clone(),
                Provenance::LocalMarkov,
            );
            if !out.iter().any(|e| e.same_claim(&s)) {
                out.push(s);
            }
        }
    }
    out.sort();
    out
}

/// Shrinks a statement's conditioning set to a smallest subset that still
/// separates the pair (ties broken lexicographically). Statements the graph
/// does not imply are returned unchanged.
pub fn minimize(dag: &CausalDag, statement: &CiStatement) -> Result<CiStatement, ImplicationError> {
    let members = statement.given.to_vec();
    for size in 0..=members.len() {
        for combo in combinations(members.len(), size) {
            let given: NodeSet = combo.iter().map(|&i| members[i].clone()).collect();
            let q = SeparationQuery::new(statement.x.clone(), statement.y.clone(), given.clone());
            if d_separated(dag, &q)? {
                return Ok(CiStatement {
                    given,
                    ..statement.clone()
                });
            }
        }
    }
    Ok(statement.clone())
}

/// Every minimal separating set, of size at most `max_given`, for every
/// nonadjacent pair in `scope`. Conditioning sets are drawn from the scope.
/// Output is sorted by pair, then set size, then lexicographically.
pub fn implied_independencies(
    dag: &CausalDag,
    scope: &NodeSet,
    max_given: usize,
) -> Result<Vec<CiStatement>, ImplicationError> {
    if scope.len() < 2 {
        return Err(ImplicationError::ScopeTooSmall(scope.len()));
    }
    for s in scope {
        dag.index_of(s).map_err(AnalysisError::from)?;
    }
    let names = scope.to_vec();
    let mut out = Vec::new();
    for (i, x) in names.iter().enumerate() {
        for y in &names[i + 1..] {
            if dag.adjacent(x, y) {
                continue;
            }
            let rest: Vec<&String> = names.iter().filter(|n| *n != x && *n != y).collect();
            let mut minimal: Vec<NodeSet> = Vec::new();
            for size in 0..=max_given.min(rest.len()) {
                for combo in combinations(rest.len(), size) {
                    let given: NodeSet = combo.iter().map(|&k| rest[k].clone()).collect();
                    if minimal.iter().any(|m| m.is_subset(&given)) {
                        continue;
                    }
                    if d_separated(dag, &SeparationQuery::new(x, y, given.clone()))? {
                        minimal.push(given);
                    }
                }
            }
            out.extend(
                minimal.into_iter().map(|g| {
                    CiStatement::new(x.clone(), y.clone(), g, Provenance::MinimalSeparator)
                }),
            );
        }
    }
    out.sort();
    Ok(out)
}

/// Whether the graph implies the statement.
pub fn verify(dag: &CausalDag, statement: &CiStatement) -> Result<bool, ImplicationError> {
    Ok(d_separated(dag, &statement.query())?)
}

/// Statements recorded as assumptions in the model (an assumption whose text
/// reads as `X ⊥ Y | Z`), keyed by their tag.
pub fn asserted(dag: &CausalDag) -> Vec<(String, CiStatement)> {
    dag.assumptions()
        .iter()
        .filter_map(|a| {
            CiStatement::parse(&a.text, Provenance::UserAsserted)
                .ok()
                .filter(|s| s.variables().iter().all(|v| dag.contains(v)))
                .map(|s| (a.tag.clone(), s))
        })
        .collect()
}
