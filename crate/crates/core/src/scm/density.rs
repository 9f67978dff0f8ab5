// SPDX-License-Identifier: MIT
use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::{Compiled, ScmError, ScmSpec};

// ln(sigmoid(x)) without overflow
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn category(node: &str, value: f64, levels: u32) -> Result<usize, ScmError> {
    if value.fract() != 0.0 || value < 0.0 || value >= f64::from(levels) {
        return Err(ScmError::OutOfLevels {
            node: node.to_string(),
            value,
        });
    }
    Ok(value as usize)
}

/// Sum over nodes of the log conditional density (continuous nodes) or log
/// mass (categorical nodes) of the record's value given its parents' values.
pub fn log_density(scm: &ScmSpec, record: &BTreeMap<String, f64>) -> Result<f64, ScmError> {
    let dag = scm.dag();
    let mut values = vec![0.0; dag.len()];
    for (i, v) in values.iter_mut().enumerate() {
        let name = dag.name_of(i);
        *v = *record
            .get(name)
            .ok_or_else(|| ScmError::MissingValue(name.to_string()))?;
    }
    let mut total = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let name = dag.name_of(i);
        total += match scm.compiled(i) {
            Compiled::Linear {
                intercept,
                sd,
                terms,
            } => {
                let mean = intercept + terms.iter().map(|(p, w)| w * values[*p]).sum::<f64>();
                let z = (v - mean) / sd;
                -0.5 * z * z - sd.ln() - 0.5 * (2.0 * PI).ln()
            }
            Compiled::Logistic { intercept, terms } => {
                let eta = intercept + terms.iter().map(|(p, w)| w * values[*p]).sum::<f64>();
                match category(name, v, 2)? {
                    1 => log_sigmoid(eta),
                    _ => log_sigmoid(-eta),
                }
            }
            Compiled::Table {
                parents,
                radix,
                rows,
            } => {
                let mut idx = 0usize;
                for (p, l) in parents.iter().zip(radix) {
                    idx = idx * *l as usize + category(dag.name_of(*p), values[*p], *l)?;
                }
                let row = &rows[idx];
                row[category(name, v, row.len() as u32)?].ln()
            }
        };
    }
    Ok(total)
}
