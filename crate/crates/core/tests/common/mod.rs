// SPDX-License-Identifier: MIT
//! Oracles and generators shared by the integration tests. Nothing here calls
//! into the library's graph algorithms: the oracles work on plain adjacency
//! matrices so they can be compared against it.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;

use causal_spec::dsl::{
    Assumption, EdgeDecl, MechanismDecl, ModelDocument, NodeDecl, NodeKind, NodeRole,
};
use causal_spec::monitor::{MonitorError, StreamSample};
use causal_spec::scm::{log_density, Dataset, ScmSpec};
use causal_spec::{d_separated, CausalDag, NodeSet, SeparationQuery};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `adj[i][j]` means an edge `i -> j`.
#[derive(Debug, Clone)]
pub struct Adjacency {
    pub names: Vec<String>,
    pub adj: Vec<Vec<bool>>,
}

impl Adjacency {
    /// A random DAG: a random node order, each forward pair joined with probability `p`.
    pub fn random(rng: &mut impl Rng, n: usize, p: f64) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut adj = vec![vec![false; n]; n];
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(p) {
                    adj[order[a]][order[b]] = true;
                }
            }
        }
        Adjacency {
            names: (0..n).map(|i| format!("V{i}")).collect(),
            adj,
        }
    }

    /// Every labelled DAG on `n` nodes (fine up to n = 5: 29281 graphs).
    pub fn all(n: usize) -> Vec<Self> {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << pairs.len()) {
            let mut adj = vec![vec![false; n]; n];
            for (k, &(i, j)) in pairs.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    adj[i][j] = true;
                }
            }
            let g = Adjacency {
                names: (0..n).map(|i| format!("V{i}")).collect(),
                adj,
            };
            if g.is_acyclic() {
                out.push(g);
            }
        }
        out
    }

    /// The graph of a document, nodes in declaration order.
    pub fn from_document(doc: &ModelDocument) -> Self {
        let names: Vec<String> = doc.nodes.iter().map(|n| n.name.clone()).collect();
        let idx = |n: &str| names.iter().position(|m| m == n).unwrap();
        let mut adj = vec![vec![false; names.len()]; names.len()];
        for e in &doc.edges {
            adj[idx(&e.from)][idx(&e.to)] = true;
        }
        Adjacency { names, adj }
    }

    pub fn index(&self, name: &str) -> usize {
        self.names.iter().position(|n| n == name).unwrap()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_acyclic(&self) -> bool {
        let n = self.len();
        let mut indeg: Vec<usize> = (0..n)
            .map(|j| (0..n).filter(|&i| self.adj[i][j]).count())
            .collect();
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = ready.pop() {
            seen += 1;
            for w in 0..n {
                if self.adj[v][w] {
                    indeg[w] -= 1;
                    if indeg[w] == 0 {
                        ready.push(w);
                    }
                }
            }
        }
        seen == n
    }

    pub fn parents(&self, j: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.adj[i][j]).collect()
    }

    /// Reflexive descendants.
    pub fn descendants(&self, v: usize) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![v];
        seen[v] = true;
        while let Some(u) = stack.pop() {
            for w in 0..self.len() {
                if self.adj[u][w] && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    pub fn to_document(&self, name: &str) -> ModelDocument {
        let mut doc = ModelDocument::new(name);
        doc.nodes = self
            .names
            .iter()
            .map(|n| NodeDecl::new(n.clone(), NodeKind::Observed))
            .collect();
        for i in 0..self.len() {
            for j in 0..self.len() {
                if self.adj[i][j] {
                    doc.edges
                        .push(EdgeDecl::new(self.names[i].clone(), self.names[j].clone()));
                }
            }
        }
        doc
    }

    /// Every simple path in the skeleton from `x` to `y`, as node index lists.
    pub fn simple_paths(&self, x: usize, y: usize) -> Vec<Vec<usize>> {
        fn walk(
            g: &Adjacency,
            y: usize,
            path: &mut Vec<usize>,
            on: &mut Vec<bool>,
            out: &mut Vec<Vec<usize>>,
        ) {
            let u = *path.last().unwrap();
            if u == y {
                out.push(path.clone());
                return;
            }
            for w in 0..g.len() {
                if !on[w] && (g.adj[u][w] || g.adj[w][u]) {
                    on[w] = true;
                    path.push(w);
                    walk(g, y, path, on, out);
                    path.pop();
                    on[w] = false;
                }
            }
        }
        let mut out = Vec::new();
        let mut on = vec![false; self.len()];
        on[x] = true;
        walk(self, y, &mut vec![x], &mut on, &mut out);
        out
    }

    /// Textbook d-separation: no simple path is active, where a path is active
    /// when every collider has itself or a descendant in `z` and no other
    /// inner node is in `z`.
    pub fn d_separated(&self, x: usize, y: usize, z: &[bool]) -> bool {
        let opens = |path: &Vec<usize>| {
            path.windows(3).all(|w| {
                let (a, v, b) = (w[0], w[1], w[2]);
                let collider = self.adj[a][v] && self.adj[b][v];
                if collider {
                    self.descendants(v).iter().zip(z).any(|(d, zz)| *d && *zz)
                } else {
                    !z[v]
                }
            })
        };
        !self.simple_paths(x, y).iter().any(opens)
    }

    /// Back-door criterion checked by brute force: no member descends from
    /// `x`, and every path from `x` to `y` that starts with an edge into `x`
    /// is blocked by `z`.
    pub fn satisfies_backdoor(&self, x: usize, y: usize, z: &[bool]) -> bool {
        let desc = self.descendants(x);
        if (0..self.len()).any(|v| z[v] && desc[v]) {
            return false;
        }
        self.simple_paths(x, y).iter().all(|p| {
            let into_x = self.adj[p[1]][p[0]];
            if !into_x {
                return true;
            }
            !p.windows(3).all(|w| {
                let (a, v, b) = (w[0], w[1], w[2]);
                if self.adj[a][v] && self.adj[b][v] {
                    self.descendants(v).iter().zip(z).any(|(d, zz)| *d && *zz)
                } else {
                    !z[v]
                }
            })
        })
    }
}

/// Linear-Gaussian parameters on an [`Adjacency`]: `w[i][j]` is the weight of `i -> j`.
pub struct LinearGaussian {
    pub intercept: Vec<f64>,
    pub sd: Vec<f64>,
    pub w: Vec<Vec<f64>>,
}

impl LinearGaussian {
    pub fn random(g: &Adjacency, rng: &mut impl Rng) -> Self {
        let n = g.len();
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if g.adj[i][j] {
                    w[i][j] = rng.random_range(-2.0..2.0);
                }
            }
        }
        LinearGaussian {
            intercept: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            sd: (0..n).map(|_| rng.random_range(0.3..2.0)).collect(),
            w,
        }
    }

    pub fn mechanisms(&self, g: &Adjacency) -> BTreeMap<String, MechanismDecl> {
        (0..g.len())
            .map(|j| {
                let weights = g
                    .parents(j)
                    .into_iter()
                    .map(|i| (g.names[i].clone(), self.w[i][j]))
                    .collect();
                (
                    g.names[j].clone(),
                    MechanismDecl::LinearGaussian {
                        intercept: self.intercept[j],
                        noise_sd: self.sd[j],
                        weights,
                    },
                )
            })
            .collect()
    }

    /// Log density of `x` under the implied joint normal: mean `(I - B)^-1 c`,
    /// covariance `(I - B)^-1 D (I - B)^-T` with `B[j][i] = w[i][j]`.
    pub fn joint_log_density(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let mut i_minus_b = DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                i_minus_b[(j, i)] -= self.w[i][j];
            }
        }
        let a = i_minus_b
            .try_inverse()
            .expect("I - B is unit triangular up to permutation");
        let d = DMatrix::from_diagonal(&DVector::from_iterator(n, self.sd.iter().map(|s| s * s)));
        let cov = &a * d * a.transpose();
        let mean = &a * DVector::from_column_slice(&self.intercept);
        let diff = DVector::from_column_slice(x) - mean;
        let chol = cov.cholesky().expect("covariance is positive definite");
        let l = chol.l();
        let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let sol = chol.solve(&diff);
        let quad = diff.dot(&sol);
        -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad)
    }
}

const WORDS: &[&str] = &[
    "node", "edge", "model", "kind", "latent", "role", "x", "Temp", "flux-2", "_a", "B_1", "q-q",
];
const TEXT_CHARS: &[char] = &[
    'a', 'Z', ' ', '"', '\\', '\n', '\t', '⊥', 'é', '{', '}', ':', ',', '|', '/', '0', '→',
];

fn ident(rng: &mut impl Rng, i: usize) -> String {
    let base = WORDS[rng.random_range(0..WORDS.len())];
    format!("{base}{i}")
}

fn text(rng: &mut impl Rng) -> String {
    let len = rng.random_range(0..12);
    (0..len)
        .map(|_| TEXT_CHARS[rng.random_range(0..TEXT_CHARS.len())])
        .collect()
}

fn number(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..5) {
        0 => 0.0,
        1 => rng.random_range(-3.0..3.0),
        2 => rng.random_range(-1e12..1e12),
        3 => rng.random_range(-1.0..1.0) * 1e-200,
        _ => f64::from(rng.random_range(-5i32..5)),
    }
}

/// A random document that passes validation: unique names and tags, known
/// endpoints and traces, edges following a random order, optional mechanisms.
pub fn random_document(rng: &mut impl Rng) -> ModelDocument {
    let mut doc = ModelDocument::new(text(rng));
    let n_assume = rng.random_range(0..4);
    for i in 0..n_assume {
        doc.assumptions.push(Assumption {
            tag: ident(rng, i),
            text: text(rng),
        });
    }
    let tags: Vec<String> = doc.assumptions.iter().map(|a| a.tag.clone()).collect();
    let pick_traces = |rng: &mut ChaCha8Rng| -> Vec<String> {
        tags.iter()
            .filter(|_| rng.random_bool(0.3))
            .cloned()
            .collect()
    };
    let mut local = ChaCha8Rng::seed_from_u64(rng.random());

    let n = rng.random_range(1..8);
    let mut roles = vec![NodeRole::Exposure, NodeRole::Outcome];
    for i in 0..n {
        let kind = if rng.random_bool(0.5) {
            NodeKind::Observed
        } else {
            NodeKind::Latent
        };
        let mut node = NodeDecl::new(ident(rng, i), kind);
        node.role = match rng.random_range(0..5) {
            0 if !roles.is_empty() => roles.remove(0),
            1 => NodeRole::Disturbance,
            _ => NodeRole::Covariate,
        };
        node.traces = pick_traces(&mut local);
        if rng.random_bool(0.4) {
            node.label = Some(text(rng));
        }
        if rng.random_bool(0.2) {
            node.controllable = Some(rng.random_bool(0.5));
        }
        doc.nodes.push(node);
    }
    let names: Vec<String> = doc.nodes.iter().map(|n| n.name.clone()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.35) {
                let mut e = EdgeDecl::new(names[order[a]].clone(), names[order[b]].clone());
                e.traces = pick_traces(&mut local);
                if rng.random_bool(0.3) {
                    e.mechanism_tag = Some(text(rng));
                }
                doc.edges.push(e);
            }
        }
    }
    if rng.random_bool(0.5) {
        let mut mechs = BTreeMap::new();
        for name in &names {
            if rng.random_bool(0.3) {
                continue;
            }
            let parents: Vec<String> = doc
                .edges
                .iter()
                .filter(|e| &e.to == name)
                .map(|e| e.from.clone())
                .collect();
            let weights = parents.iter().map(|p| (p.clone(), number(rng))).collect();
            let m = match rng.random_range(0..3) {
                0 => MechanismDecl::LinearGaussian {
                    intercept: number(rng),
                    noise_sd: rng.random_range(0.01..10.0),
                    weights,
                },
                1 => MechanismDecl::LogisticBinary {
                    intercept: number(rng),
                    weights,
                },
                _ => {
                    let levels = rng.random_range(2..4u32);
                    let rows = (0..rng.random_range(1..3))
                        .map(|_| {
                            let mut row: Vec<f64> =
                                (0..levels).map(|_| rng.random_range(0.0..1.0)).collect();
                            let s: f64 = row.iter().sum();
                            row.iter_mut().for_each(|v| *v /= s);
                            row
                        })
                        .collect();
                    MechanismDecl::TableCpd {
                        levels,
                        parents: Vec::new(),
                        rows,
                    }
                }
            };
            mechs.insert(name.clone(), m);
        }
        doc.mechanisms = mechs;
    }
    doc
}

/// Compares every pair and every conditioning subset on one graph. Returns the
/// number of queries checked.
pub fn dsep_agreement(g: &Adjacency) -> usize {
    let dag = CausalDag::build(&g.to_document("g")).unwrap();
    let n = g.len();
    let mut checked = 0;
    for x in 0..n {
        for y in x + 1..n {
            let others: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
            for mask in 0u32..(1 << others.len()) {
                let mut z = vec![false; n];
                let mut given = NodeSet::new();
                for (k, &v) in others.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        z[v] = true;
                        given.insert(g.names[v].clone());
                    }
                }
                let q = SeparationQuery::new(g.names[x].clone(), g.names[y].clone(), given);
                let fast = d_separated(&dag, &q).unwrap();
                assert_eq!(fast, g.d_separated(x, y, &z), "{q:?} on {:?}", g.adj);
                // symmetric
                let flipped = SeparationQuery::new(q.y.clone(), q.x.clone(), q.given.clone());
                assert_eq!(d_separated(&dag, &flipped).unwrap(), fast);
                checked += 1;
            }
        }
    }
    checked
}

pub const DENSITY_TOLERANCE: f64 = 1e-8;

/// Largest absolute gap between the factorized and the joint-normal log density
/// over every labelled DAG with `n` nodes.
pub fn density_gap(n: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for g in Adjacency::all(n) {
        let params = LinearGaussian::random(&g, &mut rng);
        let dag = CausalDag::build(&g.to_document("lg")).unwrap();
        let scm = ScmSpec::new(dag, params.mechanisms(&g)).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let values: BTreeMap<String, f64> =
            g.names.iter().cloned().zip(x.iter().copied()).collect();
        let ours = log_density(&scm, &values).unwrap();
        let joint = params.joint_log_density(&x);
        worst = worst.max((ours - joint).abs());
    }
    worst
}

pub fn motor_scm() -> ScmSpec {
    ScmSpec::from_document(&causal_spec::parse(causal_spec::MOTOR_FIXTURE).unwrap()).unwrap()
}

/// The motor model with environmental temperature also driving mechanical faults.
pub fn mutated_motor_scm() -> ScmSpec {
    motor_scm()
        .with_added_edge("T_E", "MechFault", 0.5)
        .unwrap()
}

pub fn stream(data: &Dataset) -> impl Iterator<Item = Result<StreamSample, MonitorError>> + '_ {
    (0..data.n).map(|i| {
        Ok(StreamSample {
            timestamp: i as u64,
            values: data.row(i),
        })
    })
}
