// SPDX-License-Identifier: MIT
//! Ancestral sampling.
//!
//! Random numbers come from ChaCha8. Each node draws from its own stream,
//! selected by the FNV-1a hash of its name, so the output does not depend on
//! declaration order. Rows are produced in blocks of [`BLOCK_ROWS`]; block `b`
//! starts at word position `b << 36` of every node stream, which lets blocks
//! be generated on any thread and still give the sequential result.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::stats::fnv1a;
use super::{sigmoid, Column, Compiled, Dataset, ScmSpec};

pub const BLOCK_ROWS: usize = 4096;
const BLOCK_WORDS_LOG2: u32 = 36;

fn node_rng(seed: u64, name: &str, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name.as_bytes()));
    rng.set_word_pos((block as u128) << BLOCK_WORDS_LOG2);
    rng
}

fn draw_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k as f64;
        }
    }
    // round-off: fall back to the last level with positive mass
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0) as f64
}

/// Rows `start..start + len` for every node, indexed like the graph.
#[allow(clippy::needless_range_loop)] // row r of several parent columns
fn sample_block(scm: &ScmSpec, seed: u64, block: usize, len: usize) -> Vec<Vec<f64>> {
    let dag = scm.dag();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); dag.len()];
    for &i in dag.topo_ids() {
        let mut rng = node_rng(seed, dag.name_of(i), block);
        let mut out = Vec::with_capacity(len);
        match scm.compiled(i) {
            Compiled::Linear {
                intercept,
                sd,
                terms,
            } => {
                for r in 0..len {
                    let mean = intercept + terms.iter().map(|(p, w)| w * cols[*p][r]).sum::<f64>();
                    let e: f64 = rng.sample(StandardNormal);
                    out.push(mean + sd * e);
                }
            }
            Compiled::Logistic { intercept, terms } => {
                for r in 0..len {
                    let eta = intercept + terms.iter().map(|(p, w)| w * cols[*p][r]).sum::<f64>();
                    let u: f64 = rng.random();
                    out.push(if u < sigmoid(eta) { 1.0 } else { 0.0 });
                }
            }
            Compiled::Table {
                parents,
                radix,
                rows,
            } => {
                for r in 0..len {
                    let mut idx = 0usize;
                    for (p, l) in parents.iter().zip(radix) {
                        idx = idx * *l as usize + cols[*p][r] as usize;
                    }
                    out.push(draw_categorical(&mut rng, &rows[idx]));
                }
            }
        }
        cols[i] = out;
    }
    cols
}

fn assemble(scm: &ScmSpec, n: usize, seed: u64, blocks: Vec<Vec<Vec<f64>>>) -> Dataset {
    let dag = scm.dag();
    let mut columns = BTreeMap::new();
    for i in 0..dag.len() {
        let mut values = Vec::with_capacity(n);
        for b in &blocks {
            values.extend_from_slice(&b[i]);
        }
        columns.insert(
            dag.name_of(i).to_string(),
            Column {
                values,
                categorical: scm.is_categorical(dag.name_of(i)),
            },
        );
    }
    Dataset::new(columns, Some(seed)).expect("columns have equal length")
}

fn block_lens(n: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(BLOCK_ROWS))
        .map(|b| (b, BLOCK_ROWS.min(n - b * BLOCK_ROWS)))
        .collect()
}

/// Draws `n` rows; blocks are generated in parallel.
pub fn sample(scm: &ScmSpec, n: usize, seed: u64) -> Dataset {
    let blocks = block_lens(n)
        .into_par_iter()
        .map(|(b, len)| sample_block(scm, seed, b, len))
        .collect();
    assemble(scm, n, seed, blocks)
}

/// Same output as [`sample`], on the calling thread.
pub fn sample_sequential(scm: &ScmSpec, n: usize, seed: u64) -> Dataset {
    let blocks = block_lens(n)
        .into_iter()
        .map(|(b, len)| sample_block(scm, seed, b, len))
        .collect();
    assemble(scm, n, seed, blocks)
}
