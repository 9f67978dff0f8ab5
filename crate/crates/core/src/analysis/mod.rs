// SPDX-License-Identifier: MIT
//! Graphical causal analysis: paths, d-separation, back-door adjustment,
//! instruments and observability of the variables needed for adjustment.

mod dsep;
mod paths;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{CausalDag, GraphError, NodeSet};

pub use dsep::{d_separated, SeparationQuery};
pub use paths::{
    enumerate_paths, enumerate_paths_capped, InnerRole, PathReport, PathStatus, Step,
    DEFAULT_PATH_CAP,
};

pub(crate) use paths::report_for;

/// Exhaustive adjustment search is limited to this many candidates.
pub const MAX_ADJUSTMENT_CANDIDATES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("more than {cap} paths; use d-separation instead of enumeration")]
    PathOverflow { cap: usize },
    #[error("candidate set contains the exposure or outcome `{0}`")]
    CandidateIsEndpoint(String),
    #[error("{count} adjustment candidates exceed the exhaustive-search limit of {limit}")]
    TooManyCandidates { count: usize, limit: usize },
}

/// Paths between an exposure and an outcome, split by their role.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExposurePaths {
    /// Directed exposure -> ... -> outcome paths.
    pub causal: Vec<PathReport>,
    /// Non-directed paths that are open given the empty set.
    pub biasing_open: Vec<PathReport>,
    /// Non-directed paths already blocked (by a collider).
    pub blocked: Vec<PathReport>,
}

pub fn classify_exposure_paths(
    dag: &CausalDag,
    exposure: &str,
    outcome: &str,
) -> Result<ExposurePaths, AnalysisError> {
    let all = enumerate_paths(dag, exposure, outcome, &NodeSet::new())?;
    let mut out = ExposurePaths {
        causal: Vec::new(),
        biasing_open: Vec::new(),
        blocked: Vec::new(),
    };
    for p in all {
        if p.directed {
            out.causal.push(p);
        } else if p.is_open() {
            out.biasing_open.push(p);
        } else {
            out.blocked.push(p);
        }
    }
    Ok(out)
}

/// A set of variables satisfying the back-door criterion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdjustmentSet {
    pub members: NodeSet,
    pub minimal: bool,
}

/// Back-door check: `set` holds no descendant of the exposure and blocks every
/// path that starts with an edge into the exposure.
pub fn satisfies_backdoor(
    dag: &CausalDag,
    exposure: &str,
    outcome: &str,
    set: &NodeSet,
) -> Result<bool, AnalysisError> {
    let descendants = dag.descendants(exposure)?;
    if set.iter().any(|s| descendants.contains(s)) {
        return Ok(false);
    }
    backdoor_blocked(&dag.without_outgoing(exposure)?, exposure, outcome, set)
}

// In the graph without the exposure's outgoing edges, only back-door paths remain.
fn backdoor_blocked(
    mutilated: &CausalDag,
    exposure: &str,
    outcome: &str,
    set: &NodeSet,
) -> Result<bool, AnalysisError> {
    d_separated(
        mutilated,
        &SeparationQuery::new(exposure, outcome, set.clone()),
    )
}

/// All minimal back-door adjustment sets drawn from `candidates`, smallest
/// first, with at most `max_size` members.
///
/// Candidates that descend from the exposure are dropped before the search.
/// An empty result means no admissible set exists within the size limit; a
/// graph without back-door paths yields the single empty set.
pub fn backdoor_sets(
    dag: &CausalDag,
    exposure: &str,
    outcome: &str,
    candidates: &NodeSet,
    max_size: usize,
) -> Result<Vec<AdjustmentSet>, AnalysisError> {
    dag.index_of(exposure)?;
    dag.index_of(outcome)?;
    if exposure == outcome {
        return Err(AnalysisError::InvalidQuery(
            "exposure and outcome must differ".into(),
        ));
    }
    for c in candidates {
        dag.index_of(c)?;
        if c == exposure || c == outcome {
            return Err(AnalysisError::CandidateIsEndpoint(c.clone()));
        }
    }
    let descendants = dag.descendants(exposure)?;
    let pool: Vec<String> = candidates
        .iter()
        .filter(|c| !descendants.contains(c))
        .cloned()
        .collect();
    if pool.len() > MAX_ADJUSTMENT_CANDIDATES {
        return Err(AnalysisError::TooManyCandidates {
            count: pool.len(),
            limit: MAX_ADJUSTMENT_CANDIDATES,
        });
    }

    let mutilated = dag.without_outgoing(exposure)?;
    let mut found: Vec<NodeSet> = Vec::new();
    for size in 0..=max_size.min(pool.len()) {
        for combo in combinations(pool.len(), size) {
            let set: NodeSet = combo.iter().map(|&i| pool[i].clone()).collect();
            // a superset of a valid set is never minimal
            if found.iter().any(|f| f.is_subset(&set)) {
                continue;
            }
            if backdoor_blocked(&mutilated, exposure, outcome, &set)? {
                found.push(set);
            }
        }
    }
    Ok(found
        .into_iter()
        .map(|members| AdjustmentSet {
            members,
            minimal: true,
        })
        .collect())
}

/// Index combinations of `k` out of `n`, in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        // advance
        let next = {
            let mut c = out.clone();
            let mut i = k;
            loop {
                if i == 0 {
                    break None;
                }
                i -= 1;
                if c[i] < n - k + i {
                    c[i] += 1;
                    for j in i + 1..k {
                        c[j] = c[j - 1] + 1;
                    }
                    break Some(c);
                }
            }
        };
        current = next;
        Some(out)
    })
}

/// Candidates that satisfy the unconditioned graphical instrument criterion:
/// d-connected to the exposure, and d-separated from the outcome once the
/// exposure's outgoing edges are removed.
pub fn find_instruments(
    dag: &CausalDag,
    exposure: &str,
    outcome: &str,
    candidates: &NodeSet,
) -> Result<NodeSet, AnalysisError> {
    dag.index_of(exposure)?;
    dag.index_of(outcome)?;
    let mutilated = dag.without_outgoing(exposure)?;
    let mut out = NodeSet::new();
    for z in candidates {
        dag.index_of(z)?;
        if z == exposure || z == outcome {
            return Err(AnalysisError::CandidateIsEndpoint(z.clone()));
        }
        let relevant = !d_separated(dag, &SeparationQuery::new(z, exposure, NodeSet::new()))?;
        let excluded = d_separated(
            &mutilated,
            &SeparationQuery::new(z, outcome, NodeSet::new()),
        )?;
        if relevant && excluded {
            out.insert(z.clone());
        }
    }
    Ok(out)
}

/// Admissible blockers of a path: its non-collider inner nodes that do not
/// descend from the exposure (conditioning on those would bias the estimate).
pub fn admissible_blockers(
    dag: &CausalDag,
    exposure: &str,
    path: &PathReport,
) -> Result<NodeSet, AnalysisError> {
    let descendants = dag.descendants(exposure)?;
    Ok(path
        .blockers
        .iter()
        .filter(|b| !descendants.contains(b))
        .cloned()
        .collect())
}

/// Latent variables that would have to be observed to block an open biasing
/// path: for every such path whose admissible blockers are all latent, those
/// blockers are returned.
pub fn observability_gaps(
    dag: &CausalDag,
    exposure: &str,
    outcome: &str,
) -> Result<NodeSet, AnalysisError> {
    let paths = classify_exposure_paths(dag, exposure, outcome)?;
    let mut gaps = NodeSet::new();
    for p in &paths.biasing_open {
        let blockers = admissible_blockers(dag, exposure, p)?;
        if !blockers.iter().any(|b| dag.is_observed(b)) {
            gaps.extend(blockers.iter().cloned());
        }
    }
    Ok(gaps)
}

#[cfg(test)]
mod tests;
