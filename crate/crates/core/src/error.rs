// SPDX-License-Identifier: MIT
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::derivation::DerivationError;
use crate::dsl::DslError;
use crate::graph::GraphError;
use crate::implications::ImplicationError;
use crate::monitor::MonitorError;
use crate::scm::ScmError;

/// Any failure surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Implication(#[from] ImplicationError),
    #[error(transparent)]
    Derivation(#[from] DerivationError),
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// The graph error underneath, however deeply it is wrapped.
    pub fn graph(&self) -> Option<&crate::graph::GraphError> {
        match self {
            Error::Graph(g)
            | Error::Analysis(AnalysisError::Graph(g))
            | Error::Implication(ImplicationError::Analysis(AnalysisError::Graph(g)))
            | Error::Derivation(DerivationError::Analysis(AnalysisError::Graph(g)))
            | Error::Derivation(DerivationError::Implication(ImplicationError::Analysis(
                AnalysisError::Graph(g),
            ))) => Some(g),
            _ => None,
        }
    }

    /// Unknown node names count as usage errors for exit-code purposes.
    pub fn is_usage(&self) -> bool {
        use crate::graph::GraphError::UnknownNode;
        matches!(
            self,
            Error::Dsl(_)
                | Error::Usage(_)
                | Error::Io(_)
                | Error::Graph(UnknownNode(_))
                | Error::Analysis(AnalysisError::Graph(UnknownNode(_)))
                | Error::Analysis(AnalysisError::InvalidQuery(_))
        )
    }
}
