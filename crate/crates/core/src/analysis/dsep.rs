// SPDX-License-Identifier: MIT
//! d-separation by reachability ("Bayes ball"), linear in the graph size.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::graph::{CausalDag, NodeSet};

/// Is `x` independent of `y` given `given`, according to the graph?
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationQuery {
    pub x: String,
    pub y: String,
    #[serde(default)]
    pub given: NodeSet,
}

impl SeparationQuery {
    pub fn new(x: impl Into<String>, y: impl Into<String>, given: NodeSet) -> Self {
        SeparationQuery {
            x: x.into(),
            y: y.into(),
            given,
        }
    }

    pub fn check(&self, dag: &CausalDag) -> Result<(), AnalysisError> {
        dag.index_of(&self.x)?;
        dag.index_of(&self.y)?;
        for g in &self.given {
            dag.index_of(g)?;
        }
        if self.x == self.y {
            return Err(AnalysisError::InvalidQuery(format!(
                "`{}` cannot be separated from itself",
                self.x
            )));
        }
        if self.given.contains(&self.x) || self.given.contains(&self.y) {
            return Err(AnalysisError::InvalidQuery(
                "the conditioning set must not contain the queried nodes".into(),
            ));
        }
        Ok(())
    }
}

pub fn d_separated(dag: &CausalDag, q: &SeparationQuery) -> Result<bool, AnalysisError> {
    q.check(dag)?;
    let x = dag.index_of(&q.x)?;
    let y = dag.index_of(&q.y)?;
    let z = dag.ids_of(&q.given)?;
    Ok(!reachable(dag, x, &z)[y])
}

/// Nodes d-connected to `x` given `z` (the "reachable" set of the standard
/// two-phase algorithm). Entry `x` itself is set.
pub(crate) fn reachable(dag: &CausalDag, x: usize, z: &[usize]) -> Vec<bool> {
    let n = dag.len();
    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    // Z and its ancestors: a collider is active iff it is in this set.
    let active_collider = dag.ancestor_mask(z);

    // visited[v][0]: reached from a child (travelling up)
    // visited[v][1]: reached from a parent (travelling down)
    let mut visited = vec![[false; 2]; n];
    let mut reach = vec![false; n];
    let mut queue = VecDeque::new();
    queue.push_back((x, 0usize));
    while let Some((v, dir)) = queue.pop_front() {
        if visited[v][dir] {
            continue;
        }
        visited[v][dir] = true;
        if !in_z[v] {
            reach[v] = true;
        }
        let up = dir == 0;
        if up && !in_z[v] {
            for &p in dag.parent_ids(v) {
                queue.push_back((p, 0));
            }
            for &c in dag.child_ids(v) {
                queue.push_back((c, 1));
            }
        } else if !up {
            if !in_z[v] {
                for &c in dag.child_ids(v) {
                    queue.push_back((c, 1));
                }
            }
            if active_collider[v] {
                for &p in dag.parent_ids(v) {
                    queue.push_back((p, 0));
                }
            }
        }
    }
    reach
}
