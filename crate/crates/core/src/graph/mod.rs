// SPDX-License-Identifier: MIT
//! Validated causal DAG built from a [`ModelDocument`].
//!
//! Node identity in every public method is the node name. Indices are an
//! internal detail; they follow declaration order, so building the same
//! document twice yields the same layout.

mod dot;
mod nodeset;

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::dsl::{Assumption, ModelDocument, NodeKind, NodeRole};

pub use dot::to_dot;
pub use nodeset::NodeSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("cycle detected: {}", .witness.join(" -> "))]
    Cycle { witness: Vec<String> },
    #[error("edge endpoint `{0}` is not a declared node")]
    DanglingEndpoint(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("disturbance node `{node}` has a parent `{parent}`")]
    DisturbanceWithParent { node: String, parent: String },
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub role: NodeRole,
    pub traces: Vec<String>,
    pub label: Option<String>,
    /// Explicit override from the model; see [`CausalDag::is_controllable`].
    pub controllable: Option<bool>,
}

impl Node {
    pub fn is_observed(&self) -> bool {
        self.kind == NodeKind::Observed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub traces: Vec<String>,
    pub mechanism_tag: Option<String>,
}

/// An immutable, acyclic causal graph.
#[derive(Debug, Clone)]
pub struct CausalDag {
    name: String,
    assumptions: Vec<Assumption>,
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    edge_index: HashMap<(usize, usize), usize>,
    // adjacency lists, each sorted by node name
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl CausalDag {
    /// Builds and validates the graph: endpoints must exist, there must be no
    /// directed cycle, and disturbance nodes must be roots.
    pub fn build(doc: &ModelDocument) -> Result<Self, GraphError> {
        let mut index = HashMap::with_capacity(doc.nodes.len());
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for (i, n) in doc.nodes.iter().enumerate() {
            if index.insert(n.name.clone(), i).is_some() {
                return Err(GraphError::DuplicateNode(n.name.clone()));
            }
            nodes.push(Node {
                name: n.name.clone(),
                kind: n.kind,
                role: n.role,
                traces: n.traces.clone(),
                label: n.label.clone(),
                controllable: n.controllable,
            });
        }

        let mut children = vec![Vec::new(); nodes.len()];
        let mut parents = vec![Vec::new(); nodes.len()];
        let mut edges = Vec::with_capacity(doc.edges.len());
        let mut edge_index = HashMap::with_capacity(doc.edges.len());
        for e in &doc.edges {
            let a = *index
                .get(&e.from)
                .ok_or_else(|| GraphError::DanglingEndpoint(e.from.clone()))?;
            let b = *index
                .get(&e.to)
                .ok_or_else(|| GraphError::DanglingEndpoint(e.to.clone()))?;
            if a == b {
                return Err(GraphError::Cycle {
                    witness: vec![e.from.clone(), e.from.clone()],
                });
            }
            if edge_index.insert((a, b), edges.len()).is_some() {
                continue;
            }
            children[a].push(b);
            parents[b].push(a);
            edges.push(Edge {
                from: e.from.clone(),
                to: e.to.clone(),
                traces: e.traces.clone(),
                mechanism_tag: e.mechanism_tag.clone(),
            });
        }
        for list in children.iter_mut().chain(parents.iter_mut()) {
            list.sort_by(|x, y| nodes[*x].name.cmp(&nodes[*y].name));
        }

        let mut dag = CausalDag {
            name: doc.name.clone(),
            assumptions: doc.assumptions.clone(),
            nodes,
            index,
            edges,
            edge_index,
            children,
            parents,
            topo: Vec::new(),
        };
        if let Some(witness) = dag.find_cycle() {
            return Err(GraphError::Cycle { witness });
        }
        dag.topo = dag.kahn_order();

        for (i, n) in dag.nodes.iter().enumerate() {
            if n.role == NodeRole::Disturbance {
                if let Some(&p) = dag.parents[i].first() {
                    return Err(GraphError::DisturbanceWithParent {
                        node: n.name.clone(),
                        parent: dag.nodes[p].name.clone(),
                    });
                }
            }
        }
        Ok(dag)
    }

    /// Depth-first search; the first back edge found closes the witness cycle,
    /// reported as `[a, b, .., a]`.
    fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let n = self.nodes.len();
        let mut mark = vec![Mark::White; n];
        for root in 0..n {
            if mark[root] != Mark::White {
                continue;
            }
            // stack of (node, next child position); `path` mirrors the grey nodes
            let mut stack = vec![(root, 0usize)];
            mark[root] = Mark::Grey;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if let Some(&c) = self.children[v].get(*next) {
                    *next += 1;
                    match mark[c] {
                        Mark::White => {
                            mark[c] = Mark::Grey;
                            stack.push((c, 0));
                        }
                        Mark::Grey => {
                            let start = stack.iter().position(|(u, _)| *u == c).unwrap();
                            let mut witness: Vec<String> = stack[start..]
                                .iter()
                                .map(|(u, _)| self.nodes[*u].name.clone())
                                .collect();
                            witness.push(self.nodes[c].name.clone());
                            return Some(witness);
                        }
                        Mark::Black => {}
                    }
                } else {
                    mark[v] = Mark::Black;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Kahn's algorithm with ties broken by node name.
    fn kahn_order(&self) -> Vec<usize> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<(&str, usize)> = indegree
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == 0)
            .map(|(i, _)| (self.nodes[i].name.as_str(), i))
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(first) = ready.pop_first() {
            let v = first.1;
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert((self.nodes[c].name.as_str(), c));
                }
            }
        }
        order
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn assumptions(&self) -> &[Assumption] {
        &self.assumptions
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in declaration order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, name: &str) -> Result<&Node, GraphError> {
        self.index_of(name).map(|i| &self.nodes[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edge(from, to).is_some()
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&Edge> {
        let a = *self.index.get(from)?;
        let b = *self.index.get(to)?;
        self.edge_index.get(&(a, b)).map(|&i| &self.edges[i])
    }

    pub fn adjacent(&self, a: &str, b: &str) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    pub fn node_with_role(&self, role: NodeRole) -> Option<&Node> {
        self.nodes.iter().find(|n| n.role == role)
    }

    pub fn is_observed(&self, name: &str) -> bool {
        self.index
            .get(name)
            .is_some_and(|&i| self.nodes[i].is_observed())
    }

    /// Whether a test can set this variable directly: the model's explicit
    /// `controllable` flag, or else "observed and parentless".
    pub fn is_controllable(&self, name: &str) -> bool {
        let Some(&i) = self.index.get(name) else {
            return false;
        };
        let n = &self.nodes[i];
        n.controllable.unwrap_or(
            n.is_observed() && n.role != NodeRole::Disturbance && self.parents[i].is_empty(),
        )
    }

    pub fn observed(&self) -> NodeSet {
        self.nodes
            .iter()
            .filter(|n| n.is_observed())
            .map(|n| n.name.clone())
            .collect()
    }

    pub fn all_nodes(&self) -> NodeSet {
        self.nodes.iter().map(|n| n.name.clone()).collect()
    }

    pub fn parents(&self, name: &str) -> Result<NodeSet, GraphError> {
        let i = self.index_of(name)?;
        Ok(self.names(&self.parents[i]))
    }

    pub fn children(&self, name: &str) -> Result<NodeSet, GraphError> {
        let i = self.index_of(name)?;
        Ok(self.names(&self.children[i]))
    }

    /// All proper ancestors of `name`.
    pub fn ancestors(&self, name: &str) -> Result<NodeSet, GraphError> {
        let i = self.index_of(name)?;
        let mask = self.closure(&[i], &self.parents);
        Ok(self.mask_names(&mask, Some(i)))
    }

    /// All proper descendants of `name`.
    pub fn descendants(&self, name: &str) -> Result<NodeSet, GraphError> {
        let i = self.index_of(name)?;
        let mask = self.closure(&[i], &self.children);
        Ok(self.mask_names(&mask, Some(i)))
    }

    pub fn topological_order(&self) -> Vec<String> {
        self.topo
            .iter()
            .map(|&i| self.nodes[i].name.clone())
            .collect()
    }

    /// Copy of the graph without the edges leaving `name`.
    pub fn without_outgoing(&self, name: &str) -> Result<CausalDag, GraphError> {
        self.index_of(name)?;
        let mut doc = self.to_document();
        doc.edges.retain(|e| e.from != name);
        CausalDag::build(&doc)
    }

    /// Copy of the graph with one extra edge; fails if it closes a cycle.
    pub fn with_edge(&self, from: &str, to: &str) -> Result<CausalDag, GraphError> {
        self.index_of(from)?;
        self.index_of(to)?;
        let mut doc = self.to_document();
        if !self.has_edge(from, to) {
            doc.edges.push(crate::dsl::EdgeDecl::new(from, to));
        }
        CausalDag::build(&doc)
    }

    /// Reconstructs a document (without mechanisms) describing this graph.
    pub fn to_document(&self) -> ModelDocument {
        let mut doc = ModelDocument::new(self.name.clone());
        doc.assumptions = self.assumptions.clone();
        doc.nodes = self
            .nodes
            .iter()
            .map(|n| crate::dsl::NodeDecl {
                name: n.name.clone(),
                kind: n.kind,
                role: n.role,
                traces: n.traces.clone(),
                label: n.label.clone(),
                controllable: n.controllable,
            })
            .collect();
        doc.edges = self
            .edges
            .iter()
            .map(|e| crate::dsl::EdgeDecl {
                from: e.from.clone(),
                to: e.to.clone(),
                traces: e.traces.clone(),
                mechanism_tag: e.mechanism_tag.clone(),
            })
            .collect();
        doc
    }

    pub(crate) fn index_of(&self, name: &str) -> Result<usize, GraphError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub(crate) fn name_of(&self, i: usize) -> &str {
        &self.nodes[i].name
    }

    pub(crate) fn parent_ids(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub(crate) fn child_ids(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub(crate) fn topo_ids(&self) -> &[usize] {
        &self.topo
    }

    pub(crate) fn ids_of(&self, set: &NodeSet) -> Result<Vec<usize>, GraphError> {
        set.iter().map(|n| self.index_of(n)).collect()
    }

    /// Reflexive closure of `seeds` along `adj`, as a membership mask.
    pub(crate) fn closure(&self, seeds: &[usize], adj: &[Vec<usize>]) -> Vec<bool> {
        let mut mask = vec![false; self.nodes.len()];
        let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
        for &s in seeds {
            mask[s] = true;
        }
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !mask[w] {
                    mask[w] = true;
                    queue.push_back(w);
                }
            }
        }
        mask
    }

    pub(crate) fn ancestor_mask(&self, seeds: &[usize]) -> Vec<bool> {
        self.closure(seeds, &self.parents)
    }

    fn names(&self, ids: &[usize]) -> NodeSet {
        ids.iter().map(|&i| self.nodes[i].name.clone()).collect()
    }

    fn mask_names(&self, mask: &[bool], skip: Option<usize>) -> NodeSet {
        mask.iter()
            .enumerate()
            .filter(|(i, m)| **m && Some(*i) != skip)
            .map(|(i, _)| self.nodes[i].name.clone())
            .collect()
    }
}
