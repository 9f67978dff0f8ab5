// SPDX-License-Identifier: MIT
//! Simple-path enumeration with per-node chain/fork/collider classification.

use serde::Serialize;

use super::AnalysisError;
use crate::graph::{CausalDag, NodeSet};

/// Paths beyond this count abort enumeration with [`AnalysisError::PathOverflow`].
pub const DEFAULT_PATH_CAP: usize = 10_000;

/// Direction of one edge along a path, read from the path's start to its end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    /// `a -> b`
    Forward,
    /// `a <- b`
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerRole {
    /// `-> v ->` or `<- v <-`
    Chain,
    /// `<- v ->`
    Fork,
    /// `-> v <-`
    Collider,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatus {
    Open,
    Blocked,
}

/// One simple undirected path between two nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathReport {
    pub nodes: Vec<String>,
    pub steps: Vec<Step>,
    pub inner_roles: Vec<InnerRole>,
    /// Every edge points from the start toward the end.
    pub directed: bool,
    /// The conditioning set `status` refers to.
    pub given: NodeSet,
    pub status: PathStatus,
    /// Non-collider inner nodes; conditioning on any of them blocks the path.
    pub blockers: NodeSet,
}

impl PathReport {
    pub fn is_open(&self) -> bool {
        self.status == PathStatus::Open
    }

    /// Whether the path starts with an edge pointing into its first node.
    pub fn starts_backward(&self) -> bool {
        self.steps.first() == Some(&Step::Backward)
    }

    pub fn inner(&self) -> &[String] {
        if self.nodes.len() < 2 {
            &[]
        } else {
            &self.nodes[1..self.nodes.len() - 1]
        }
    }

    pub fn node_set(&self) -> NodeSet {
        self.nodes.iter().cloned().collect()
    }

    /// `A <- B -> C` style rendering.
    pub fn render(&self) -> String {
        let mut s = self.nodes[0].clone();
        for (step, n) in self.steps.iter().zip(&self.nodes[1..]) {
            s.push_str(match step {
                Step::Forward => " -> ",
                Step::Backward => " <- ",
            });
            s.push_str(n);
        }
        s
    }

    /// Re-evaluates the path's status under another conditioning set.
    pub fn status_given(&self, dag: &CausalDag, given: &NodeSet) -> PathStatus {
        status_of(dag, &self.nodes, &self.inner_roles, given)
    }
}

fn status_of(
    dag: &CausalDag,
    nodes: &[String],
    roles: &[InnerRole],
    given: &NodeSet,
) -> PathStatus {
    for (v, role) in nodes[1..nodes.len() - 1].iter().zip(roles) {
        let blocks = match role {
            InnerRole::Chain | InnerRole::Fork => given.contains(v),
            InnerRole::Collider => {
                !given.contains(v)
                    && !dag
                        .descendants(v)
                        .map(|d| d.iter().any(|n| given.contains(n)))
                        .unwrap_or(false)
            }
        };
        if blocks {
            return PathStatus::Blocked;
        }
    }
    PathStatus::Open
}

/// Builds the report for an explicit node sequence whose consecutive nodes are adjacent.
pub(crate) fn report_for(dag: &CausalDag, nodes: Vec<String>, given: &NodeSet) -> PathReport {
    let steps: Vec<Step> = nodes
        .windows(2)
        .map(|w| {
            if dag.has_edge(&w[0], &w[1]) {
                Step::Forward
            } else {
                Step::Backward
            }
        })
        .collect();
    let inner_roles: Vec<InnerRole> = steps
        .windows(2)
        .map(|s| match (s[0], s[1]) {
            (Step::Forward, Step::Backward) => InnerRole::Collider,
            (Step::Backward, Step::Forward) => InnerRole::Fork,
            _ => InnerRole::Chain,
        })
        .collect();
    let directed = steps.iter().all(|s| *s == Step::Forward);
    let blockers: NodeSet = nodes[1..nodes.len().saturating_sub(1).max(1)]
        .iter()
        .zip(&inner_roles)
        .filter(|(_, r)| **r != InnerRole::Collider)
        .map(|(n, _)| n.clone())
        .collect();
    let status = status_of(dag, &nodes, &inner_roles, given);
    PathReport {
        nodes,
        steps,
        inner_roles,
        directed,
        given: given.clone(),
        status,
        blockers,
    }
}

/// All simple undirected paths from `x` to `y`, sorted lexicographically by
/// node sequence, with status relative to `given`.
pub fn enumerate_paths(
    dag: &CausalDag,
    x: &str,
    y: &str,
    given: &NodeSet,
) -> Result<Vec<PathReport>, AnalysisError> {
    enumerate_paths_capped(dag, x, y, given, DEFAULT_PATH_CAP)
}

pub fn enumerate_paths_capped(
    dag: &CausalDag,
    x: &str,
    y: &str,
    given: &NodeSet,
    cap: usize,
) -> Result<Vec<PathReport>, AnalysisError> {
    let xi = dag.index_of(x)?;
    let yi = dag.index_of(y)?;
    for g in given {
        dag.index_of(g)?;
    }
    if xi == yi {
        return Err(AnalysisError::InvalidQuery(format!(
            "path endpoints must differ, both are `{x}`"
        )));
    }

    let n = dag.len();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut nb: Vec<usize> = dag
                .parent_ids(v)
                .iter()
                .chain(dag.child_ids(v))
                .copied()
                .collect();
            nb.sort_by(|a, b| dag.name_of(*a).cmp(dag.name_of(*b)));
            nb
        })
        .collect();

    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut on_path = vec![false; n];
    let mut path = vec![xi];
    on_path[xi] = true;
    let mut stack: Vec<usize> = vec![0];
    while let Some(pos) = stack.last_mut() {
        let v = *path.last().unwrap();
        if let Some(&w) = neighbours[v].get(*pos) {
            *pos += 1;
            if on_path[w] {
                continue;
            }
            if w == yi {
                if found.len() == cap {
                    return Err(AnalysisError::PathOverflow { cap });
                }
                let mut p = path.clone();
                p.push(w);
                found.push(p);
                continue;
            }
            on_path[w] = true;
            path.push(w);
            stack.push(0);
        } else {
            stack.pop();
            let v = path.pop().unwrap();
            on_path[v] = false;
        }
    }

    let mut reports: Vec<PathReport> = found
        .into_iter()
        .map(|p| {
            let names = p.into_iter().map(|i| dag.name_of(i).to_string()).collect();
            report_for(dag, names, given)
        })
        .collect();
    reports.sort_by(|a, b| a.nodes.cmp(&b.nodes));
    Ok(reports)
}
