// SPDX-License-Identifier: MIT
//! Structural causal models attached to a DAG: ancestral sampling, the
//! factorized log-density, and conditional-independence tests on data.

mod citest;
mod dataset;
mod density;
mod sample;
pub mod stats;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::dsl::{check_mechanism_values, DslError, MechanismDecl, ModelDocument};
use crate::graph::{CausalDag, GraphError};
use crate::implications::ImplicationError;

pub use citest::{
    ci_test, validate_model, validate_statements, CiMethod, CiTestResult, ValidationReport,
    G_TEST_BINS,
};
pub use dataset::{Column, Dataset};
pub use density::log_density;
pub use sample::{sample, sample_sequential, BLOCK_ROWS};

/// Structural equations use the same representation as the model file.
pub type Mechanism = MechanismDecl;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScmError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Implication(#[from] ImplicationError),
    #[error("model has no mechanism blocks")]
    NoMechanisms,
    #[error("node `{0}` has no mechanism")]
    MissingMechanism(String),
    #[error("mechanism of `{node}`: {message}")]
    InvalidMechanism { node: String, message: String },
    #[error("no value for `{0}`")]
    MissingValue(String),
    #[error("value {value} of `{node}` is outside its levels")]
    OutOfLevels { node: String, value: f64 },
    #[error("{n} samples are too few for a test conditioning on {given} variables")]
    InsufficientSamples { n: usize, given: usize },
    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("conditioning columns are collinear")]
    Singular,
    #[error("column `{0}` is not in the dataset")]
    UnknownColumn(String),
    #[error("column `{0}` is not categorical")]
    NotCategorical(String),
    #[error("invalid dataset: {0}")]
    Data(String),
}

impl From<AnalysisError> for ScmError {
    fn from(e: AnalysisError) -> Self {
        ScmError::Implication(ImplicationError::Analysis(e))
    }
}

// Mechanism resolved to node indices.
#[derive(Debug, Clone)]
pub(crate) enum Compiled {
    Linear {
        intercept: f64,
        sd: f64,
        terms: Vec<(usize, f64)>,
    },
    Logistic {
        intercept: f64,
        terms: Vec<(usize, f64)>,
    },
    Table {
        parents: Vec<usize>,
        radix: Vec<u32>,
        rows: Vec<Vec<f64>>,
    },
}

impl Compiled {
    /// Number of categories, or `None` for a continuous node.
    fn levels(&self) -> Option<u32> {
        match self {
            Compiled::Linear { .. } => None,
            Compiled::Logistic { .. } => Some(2),
            Compiled::Table { rows, .. } => Some(rows[0].len() as u32),
        }
    }
}

/// A DAG with one structural equation per node.
#[derive(Debug, Clone)]
pub struct ScmSpec {
    dag: CausalDag,
    mechanisms: BTreeMap<String, Mechanism>,
    compiled: Vec<Compiled>,
}

impl ScmSpec {
    /// Checks that every node has a mechanism whose parents are exactly the
    /// node's parents in the graph (a zero weight is fine, a missing key is not).
    pub fn new(dag: CausalDag, mechanisms: BTreeMap<String, Mechanism>) -> Result<Self, ScmError> {
        for name in mechanisms.keys() {
            dag.index_of(name)?;
        }
        let mut compiled: Vec<Option<Compiled>> = vec![None; dag.len()];
        // compile in topological order so table parents' levels are known
        for &i in dag.topo_ids() {
            let name = dag.name_of(i).to_string();
            let m = mechanisms
                .get(&name)
                .ok_or_else(|| ScmError::MissingMechanism(name.clone()))?;
            let invalid = |message: String| ScmError::InvalidMechanism {
                node: name.clone(),
                message,
            };
            check_mechanism_values(&name, m).map_err(|kind| {
                invalid(
                    DslError {
                        position: None,
                        kind,
                    }
                    .message(),
                )
            })?;
            let parents = dag.parents(&name)?;
            let mut declared: Vec<&str> = m.referenced_parents();
            declared.sort_unstable();
            if declared != parents.iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(invalid(format!(
                    "refers to {{{}}} but the graph parents are {parents}",
                    declared.join(", ")
                )));
            }
            let terms = |weights: &BTreeMap<String, f64>| -> Vec<(usize, f64)> {
                weights
                    .iter()
                    .map(|(p, w)| (dag.index_of(p).expect("checked"), *w))
                    .collect()
            };
            let c = match m {
                MechanismDecl::LinearGaussian {
                    intercept,
                    noise_sd,
                    weights,
                } => Compiled::Linear {
                    intercept: *intercept,
                    sd: *noise_sd,
                    terms: terms(weights),
                },
                MechanismDecl::LogisticBinary { intercept, weights } => Compiled::Logistic {
                    intercept: *intercept,
                    terms: terms(weights),
                },
                MechanismDecl::TableCpd {
                    levels,
                    parents: order,
                    rows,
                } => {
                    let mut ids = Vec::new();
                    let mut radix = Vec::new();
                    for p in order {
                        let pi = dag.index_of(p)?;
                        let l = compiled[pi]
                            .as_ref()
                            .expect("parents compile first")
                            .levels()
                            .ok_or_else(|| invalid(format!("parent `{p}` is not categorical")))?;
                        ids.push(pi);
                        radix.push(l);
                    }
                    let expected: usize = radix.iter().map(|&l| l as usize).product();
                    if rows.len() != expected {
                        return Err(invalid(format!(
                            "table has {} rows, the parent configurations need {expected}",
                            rows.len()
                        )));
                    }
                    for row in rows {
                        let sum: f64 = row.iter().sum();
                        if (sum - 1.0).abs() > 1e-9 {
                            return Err(invalid(format!("row sums to {sum}, not 1")));
                        }
                    }
                    debug_assert!(rows.iter().all(|r| r.len() == *levels as usize));
                    Compiled::Table {
                        parents: ids,
                        radix,
                        rows: rows.clone(),
                    }
                }
            };
            compiled[i] = Some(c);
        }
        Ok(ScmSpec {
            dag,
            mechanisms,
            compiled: compiled
                .into_iter()
                .map(|c| c.expect("all compiled"))
                .collect(),
        })
    }

    /// Builds the graph and the model from a document with mechanism blocks.
    pub fn from_document(doc: &ModelDocument) -> Result<Self, ScmError> {
        if doc.mechanisms.is_empty() {
            return Err(ScmError::NoMechanisms);
        }
        let mechanisms = doc.mechanisms.clone();
        ScmSpec::new(CausalDag::build(doc)?, mechanisms)
    }

    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn mechanisms(&self) -> &BTreeMap<String, Mechanism> {
        &self.mechanisms
    }

    /// Whether the node takes integer category values.
    pub fn is_categorical(&self, name: &str) -> bool {
        self.dag
            .index_of(name)
            .is_ok_and(|i| self.compiled[i].levels().is_some())
    }

    /// Copy with an extra edge `from -> to` entering `to`'s equation with `weight`.
    pub fn with_added_edge(&self, from: &str, to: &str, weight: f64) -> Result<ScmSpec, ScmError> {
        let dag = self.dag.with_edge(from, to)?;
        let mut mechanisms = self.mechanisms.clone();
        match mechanisms.get_mut(to) {
            Some(MechanismDecl::LinearGaussian { weights, .. })
            | Some(MechanismDecl::LogisticBinary { weights, .. }) => {
                weights.insert(from.to_string(), weight);
            }
            Some(MechanismDecl::TableCpd { .. }) => {
                return Err(ScmError::InvalidMechanism {
                    node: to.to_string(),
                    message: "cannot add a weighted parent to a table".into(),
                })
            }
            None => return Err(ScmError::MissingMechanism(to.to_string())),
        }
        ScmSpec::new(dag, mechanisms)
    }

    pub(crate) fn compiled(&self, i: usize) -> &Compiled {
        &self.compiled[i]
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
