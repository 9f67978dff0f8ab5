// SPDX-License-Identifier: MIT
//! Conditional-independence tests on a dataset.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use super::stats::{pearson, quantile_bins, residuals, sum_sq_dev};
use super::{Dataset, ScmError};
use crate::graph::{CausalDag, NodeSet};
use crate::implications::{implied_independencies, CiStatement};

/// Continuous conditioning variables are cut into this many quantile bins for the G-test.
pub const G_TEST_BINS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    FisherZ,
    GTest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiTestResult {
    pub statement: CiStatement,
    pub method: CiMethod,
    pub statistic: f64,
    /// Degrees of freedom of the G-test reference distribution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
    pub p_value: f64,
    pub alpha: f64,
    pub rejected: bool,
}

/// Tests `statement` on `data`.
///
/// `FisherZ` regresses x and y on the conditioning columns, correlates the
/// residuals and compares `atanh(r) * sqrt(n - |Z| - 3)` with a standard
/// normal (two-sided). Integer-coded columns are used as numbers.
///
/// `GTest` needs categorical x and y. Continuous conditioning columns are cut
/// into [`G_TEST_BINS`] quantile bins; each stratum contributes its own
/// likelihood-ratio statistic and `(levels_x - 1) * (levels_y - 1)` degrees of
/// freedom, counting only the levels present in that stratum.
pub fn ci_test(
    data: &Dataset,
    statement: &CiStatement,
    alpha: f64,
    method: CiMethod,
) -> Result<CiTestResult, ScmError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ScmError::Data(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let (statistic, df, p_value) = match method {
        CiMethod::FisherZ => {
            let (z, p) = fisher_z(data, statement)?;
            (z, None, p)
        }
        CiMethod::GTest => {
            let (g, df, p) = g_test(data, statement)?;
            (g, Some(df), p)
        }
    };
    Ok(CiTestResult {
        statement: statement.clone(),
        method,
        statistic,
        df,
        p_value,
        alpha,
        rejected: p_value < alpha,
    })
}

fn fisher_z(data: &Dataset, s: &CiStatement) -> Result<(f64, f64), ScmError> {
    let x = data.values(&s.x)?;
    let y = data.values(&s.y)?;
    let zs: Vec<&[f64]> = s
        .given
        .iter()
        .map(|g| data.values(g))
        .collect::<Result<_, _>>()?;
    let n = data.n;
    let k = zs.len();
    if n <= k + 3 {
        return Err(ScmError::InsufficientSamples { n, given: k });
    }
    for (name, col) in [(&s.x, x), (&s.y, y)]
        .into_iter()
        .chain(s.given.iter().zip(zs.iter().copied()))
    {
        if sum_sq_dev(col) <= 0.0 {
            return Err(ScmError::ZeroVariance(name.clone()));
        }
    }
    let rx = residuals(x, &zs).ok_or(ScmError::Singular)?;
    let ry = residuals(y, &zs).ok_or(ScmError::Singular)?;
    let r = pearson(&rx, &ry).ok_or_else(|| {
        // a column fully explained by the conditioning set
        ScmError::ZeroVariance(if sum_sq_dev(&rx) <= 0.0 {
            s.x.clone()
        } else {
            s.y.clone()
        })
    })?;
    let effective = (n - k - 3) as f64;
    if r.abs() >= 1.0 {
        return Ok((f64::INFINITY.copysign(r), 0.0));
    }
    let z = r.atanh() * effective.sqrt();
    Ok((z, erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)))
}

fn codes(data: &Dataset, name: &str) -> Result<Vec<i64>, ScmError> {
    let c = data.column(name)?;
    if c.categorical {
        Ok(c.values.iter().map(|v| *v as i64).collect())
    } else {
        Ok(quantile_bins(&c.values, G_TEST_BINS)
            .into_iter()
            .map(|b| b as i64)
            .collect())
    }
}

fn g_test(data: &Dataset, s: &CiStatement) -> Result<(f64, f64, f64), ScmError> {
    for v in [&s.x, &s.y] {
        if !data.column(v)?.categorical {
            return Err(ScmError::NotCategorical(v.clone()));
        }
    }
    let x = codes(data, &s.x)?;
    let y = codes(data, &s.y)?;
    let zs: Vec<Vec<i64>> = s
        .given
        .iter()
        .map(|g| codes(data, g))
        .collect::<Result<_, _>>()?;
    if data.n == 0 {
        return Err(ScmError::InsufficientSamples {
            n: 0,
            given: zs.len(),
        });
    }

    // stratum -> (x, y) -> count
    let mut tables: BTreeMap<Vec<i64>, HashMap<(i64, i64), f64>> = BTreeMap::new();
    for i in 0..data.n {
        let key: Vec<i64> = zs.iter().map(|z| z[i]).collect();
        *tables
            .entry(key)
            .or_default()
            .entry((x[i], y[i]))
            .or_default() += 1.0;
    }
    let mut g = 0.0;
    let mut df = 0.0;
    for cells in tables.values() {
        let mut rows: BTreeMap<i64, f64> = BTreeMap::new();
        let mut cols: BTreeMap<i64, f64> = BTreeMap::new();
        let mut total = 0.0;
        for (&(a, b), &c) in cells {
            *rows.entry(a).or_default() += c;
            *cols.entry(b).or_default() += c;
            total += c;
        }
        for (&(a, b), &o) in cells {
            let e = rows[&a] * cols[&b] / total;
            g += 2.0 * o * (o / e).ln();
        }
        df += ((rows.len() - 1) * (cols.len() - 1)) as f64;
    }
    let g = g.max(0.0);
    let p = if df == 0.0 {
        1.0
    } else {
        let chi = ChiSquared::new(df).expect("positive degrees of freedom");
        (1.0 - chi.cdf(g)).clamp(0.0, 1.0)
    };
    Ok((g, df, p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub results: Vec<CiTestResult>,
    pub violations: usize,
}

/// Tests each statement; the report counts rejections.
pub fn validate_statements(
    data: &Dataset,
    statements: &[CiStatement],
    alpha: f64,
    method: CiMethod,
) -> Result<ValidationReport, ScmError> {
    let results = statements
        .iter()
        .map(|s| ci_test(data, s, alpha, method))
        .collect::<Result<Vec<_>, _>>()?;
    let violations = results.iter().filter(|r| r.rejected).count();
    Ok(ValidationReport {
        results,
        violations,
    })
}

/// Tests every statement the graph implies within `scope` (conditioning sets
/// up to `max_given`). Scopes with fewer than two variables yield no tests.
pub fn validate_model(
    dag: &CausalDag,
    data: &Dataset,
    scope: &NodeSet,
    alpha: f64,
    max_given: usize,
    method: CiMethod,
) -> Result<ValidationReport, ScmError> {
    for v in scope.iter() {
        data.column(v)?;
    }
    if scope.len() < 2 {
        return Ok(ValidationReport {
            results: Vec::new(),
            violations: 0,
        });
    }
    let statements = implied_independencies(dag, scope, max_given)?;
    validate_statements(data, &statements, alpha, method)
}
