// SPDX-License-Identifier: MIT
//! Runtime context-shift monitors.
//!
//! A monitor watches one implied independence between observed variables.
//! Samples are grouped into tumbling windows; at the end of each window the
//! correlation of the pair is computed (within strata of the conditioning
//! variable, if there is one). A window violates the monitor when the
//! magnitude exceeds the threshold, and an alarm fires once `consecutive`
//! windows in a row have violated it. A window with a constant column is
//! indeterminate and breaks the run.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::CausalDag;
use crate::implications::CiStatement;
use crate::scm::stats;

pub const DEFAULT_WINDOW: usize = 500;
pub const DEFAULT_THRESHOLD: f64 = 0.2;
pub const DEFAULT_CONSECUTIVE: usize = 3;
/// Integer-valued conditioning variables with at most this many distinct
/// values in a window are stratified by value; others by window quartiles.
pub const MAX_DISCRETE_STRATA: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonitorError {
    #[error("invalid monitor `{id}`: {message}")]
    InvalidSpec { id: String, message: String },
    #[error("sample {timestamp}: missing value for `{variable}`")]
    MissingVariable { timestamp: u64, variable: String },
    #[error("sample {timestamp}: value of `{variable}` is not finite")]
    NonFinite { timestamp: u64, variable: String },
    #[error("sample timestamp {timestamp} does not follow {previous}")]
    NonMonotonic { timestamp: u64, previous: u64 },
    #[error("input line {line}: {message}")]
    Input { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    #[default]
    Pearson,
    Spearman,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorSpec {
    pub id: String,
    pub statement: CiStatement,
    pub window: usize,
    pub threshold: f64,
    pub consecutive: usize,
    pub statistic: Statistic,
}

impl MonitorSpec {
    pub fn new(id: impl Into<String>, statement: CiStatement) -> Self {
        MonitorSpec {
            id: id.into(),
            statement,
            window: DEFAULT_WINDOW,
            threshold: DEFAULT_THRESHOLD,
            consecutive: DEFAULT_CONSECUTIVE,
            statistic: Statistic::Pearson,
        }
    }

    /// Checks the spec on its own and, if a graph is given, that every
    /// variable is an observed node of it.
    pub fn validate(&self, dag: Option<&CausalDag>) -> Result<(), MonitorError> {
        let bad = |message: String| {
            Err(MonitorError::InvalidSpec {
                id: self.id.clone(),
                message,
            })
        };
        if self.window < 30 {
            return bad(format!(
                "window must be at least 30 samples, got {}",
                self.window
            ));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            ));
        }
        if self.consecutive == 0 {
            return bad("consecutive must be at least 1".into());
        }
        if self.statement.given.len() > 1 {
            return bad("at most one stratification variable is supported".into());
        }
        if let Some(dag) = dag {
            for v in self.statement.variables().iter() {
                if !dag.is_observed(v) {
                    return bad(format!("`{v}` is not an observed variable"));
                }
            }
        }
        Ok(())
    }

    fn stratum_variable(&self) -> Option<&str> {
        self.statement.given.iter().next().map(String::as_str)
    }
}

/// One row of the runtime stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSample {
    pub timestamp: u64,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alarm {
    pub monitor: String,
    /// 1-based index of the window that completed the violating run.
    pub window: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowStatus {
    Ok,
    Violation,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowStat {
    pub monitor: String,
    pub window: usize,
    pub first_timestamp: u64,
    pub last_timestamp: u64,
    pub statistic: Option<f64>,
    pub status: WindowStatus,
}

// Running Pearson co-moments for the current window.
#[derive(Debug, Clone, Default, PartialEq)]
struct Moments {
    n: usize,
    mean_x: f64,
    mean_y: f64,
    m2x: f64,
    m2y: f64,
    cxy: f64,
}

impl Moments {
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / n;
        let dy = y - self.mean_y;
        self.mean_y += dy / n;
        self.m2x += dx * (x - self.mean_x);
        self.m2y += dy * (y - self.mean_y);
        self.cxy += dx * (y - self.mean_y);
    }

    fn correlation(&self) -> Option<f64> {
        if self.n < 2 || self.m2x <= 0.0 || self.m2y <= 0.0 {
            return None;
        }
        Some((self.cxy / (self.m2x * self.m2y).sqrt()).clamp(-1.0, 1.0))
    }
}

/// State of one monitor. Transitions are by value: [`ingest`] consumes a
/// state and returns the next one.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorState {
    spec: MonitorSpec,
    moments: Moments,
    // raw rows, kept only when the statistic needs more than co-moments
    rows: Vec<[f64; 3]>,
    first_timestamp: Option<u64>,
    last_timestamp: Option<u64>,
    completed: usize,
    run: usize,
    last_window: Option<WindowStat>,
}

impl MonitorState {
    pub fn new(spec: MonitorSpec) -> Result<Self, MonitorError> {
        spec.validate(None)?;
        Ok(MonitorState {
            spec,
            moments: Moments::default(),
            rows: Vec::new(),
            first_timestamp: None,
            last_timestamp: None,
            completed: 0,
            run: 0,
            last_window: None,
        })
    }

    pub fn spec(&self) -> &MonitorSpec {
        &self.spec
    }

    pub fn completed_windows(&self) -> usize {
        self.completed
    }

    /// Statistics of the window completed by the most recent sample, if any.
    pub fn last_window(&self) -> Option<&WindowStat> {
        self.last_window.as_ref()
    }

    fn needs_rows(&self) -> bool {
        self.spec.statistic == Statistic::Spearman || self.spec.stratum_variable().is_some()
    }

    fn in_window(&self) -> usize {
        if self.needs_rows() {
            self.rows.len()
        } else {
            self.moments.n
        }
    }

    fn window_statistic(&self) -> Option<f64> {
        if !self.needs_rows() {
            return self.moments.correlation();
        }
        let xs: Vec<f64> = self.rows.iter().map(|r| r[0]).collect();
        let ys: Vec<f64> = self.rows.iter().map(|r| r[1]).collect();
        let (xs, ys) = match self.spec.statistic {
            Statistic::Pearson => (xs, ys),
            Statistic::Spearman => (stats::ranks(&xs), stats::ranks(&ys)),
        };
        if self.spec.stratum_variable().is_none() {
            return stats::pearson(&xs, &ys);
        }
        let zs: Vec<f64> = self.rows.iter().map(|r| r[2]).collect();
        stats::pooled_within_correlation(&xs, &ys, &strata(&zs))
    }
}

/// Stratum labels for the conditioning column of one window.
fn strata(zs: &[f64]) -> Vec<usize> {
    let integral = zs.iter().all(|z| z.fract() == 0.0);
    if integral {
        let mut distinct: Vec<i64> = zs.iter().map(|z| *z as i64).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() <= MAX_DISCRETE_STRATA {
            return zs
                .iter()
                .map(|z| distinct.binary_search(&(*z as i64)).expect("value present"))
                .collect();
        }
    }
    stats::quantile_bins(zs, 4)
}

/// Adds one sample. Returns the new state and an alarm if this sample
/// completed a window that brought the violation run to `consecutive`.
pub fn ingest(
    mut state: MonitorState,
    sample: &StreamSample,
) -> Result<(MonitorState, Option<Alarm>), MonitorError> {
    if let Some(prev) = state.last_timestamp {
        if sample.timestamp <= prev {
            return Err(MonitorError::NonMonotonic {
                timestamp: sample.timestamp,
                previous: prev,
            });
        }
    }
    let get = |name: &str| -> Result<f64, MonitorError> {
        let v = *sample
            .values
            .get(name)
            .ok_or_else(|| MonitorError::MissingVariable {
                timestamp: sample.timestamp,
                variable: name.to_string(),
            })?;
        if !v.is_finite() {
            return Err(MonitorError::NonFinite {
                timestamp: sample.timestamp,
                variable: name.to_string(),
            });
        }
        Ok(v)
    };
    let x = get(&state.spec.statement.x)?;
    let y = get(&state.spec.statement.y)?;
    let z = match state.spec.stratum_variable() {
        Some(v) => get(v)?,
        None => 0.0,
    };

    state.last_timestamp = Some(sample.timestamp);
    state.first_timestamp.get_or_insert(sample.timestamp);
    state.last_window = None;
    if state.needs_rows() {
        state.rows.push([x, y, z]);
    } else {
        state.moments.push(x, y);
    }
    if state.in_window() < state.spec.window {
        return Ok((state, None));
    }

    let value = state.window_statistic();
    state.completed += 1;
    let status = match value {
        None => WindowStatus::Indeterminate,
        Some(r) if r.abs() > state.spec.threshold => WindowStatus::Violation,
        Some(_) => WindowStatus::Ok,
    };
    state.last_window = Some(WindowStat {
        monitor: state.spec.id.clone(),
        window: state.completed,
        first_timestamp: state.first_timestamp.expect("window is non-empty"),
        last_timestamp: sample.timestamp,
        statistic: value,
        status,
    });
    state.moments = Moments::default();
    state.rows.clear();
    state.first_timestamp = None;

    let mut alarm = None;
    if status == WindowStatus::Violation {
        state.run += 1;
        if state.run == state.spec.consecutive {
            let r = value.expect("violations have a value");
            alarm = Some(Alarm {
                monitor: state.spec.id.clone(),
                window: state.completed,
                statistic: r,
                threshold: state.spec.threshold,
                message: format!(
                    "{} violated: |r| = {:.3} > {} in {} consecutive windows",
                    state.spec.statement,
                    r.abs(),
                    state.spec.threshold,
                    state.spec.consecutive
                ),
            });
        }
    } else {
        state.run = 0;
    }
    Ok((state, alarm))
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct MonitorReport {
    pub samples: usize,
    pub windows: Vec<WindowStat>,
    pub alarms: Vec<Alarm>,
}

/// Runs every spec over the stream.
pub fn run_stream<I>(specs: &[MonitorSpec], source: I) -> Result<MonitorReport, MonitorError>
where
    I: IntoIterator<Item = Result<StreamSample, MonitorError>>,
{
    let mut states = specs
        .iter()
        .cloned()
        .map(MonitorState::new)
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = MonitorReport::default();
    for sample in source {
        let sample = sample?;
        report.samples += 1;
        let mut next = Vec::with_capacity(states.len());
        for state in states {
            let (state, alarm) = ingest(state, &sample)?;
            if let Some(w) = state.last_window() {
                report.windows.push(w.clone());
            }
            report.alarms.extend(alarm);
            next.push(state);
        }
        states = next;
    }
    Ok(report)
}

/// Reads CSV samples with a header row. A `timestamp` column is used if
/// present; otherwise rows are numbered from 1.
pub fn read_csv<R: std::io::Read>(
    reader: R,
) -> impl Iterator<Item = Result<StreamSample, MonitorError>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().cloned();
    let mut records = rdr.into_records();
    let mut row = 0usize;
    let mut header_error = None;
    let header = match header {
        Ok(h) => Some(h),
        Err(e) => {
            header_error = Some(MonitorError::Input {
                line: 1,
                message: e.to_string(),
            });
            None
        }
    };
    std::iter::from_fn(move || {
        if let Some(e) = header_error.take() {
            return Some(Err(e));
        }
        let header = header.as_ref()?;
        let record = records.next()?;
        row += 1;
        let line = row + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                return Some(Err(MonitorError::Input {
                    line,
                    message: e.to_string(),
                }))
            }
        };
        let mut values = BTreeMap::new();
        let mut timestamp = row as u64;
        for (name, field) in header.iter().zip(record.iter()) {
            if name == "timestamp" {
                match field.parse::<u64>() {
                    Ok(t) => timestamp = t,
                    Err(_) => {
                        return Some(Err(MonitorError::Input {
                            line,
                            message: format!("timestamp `{field}` is not a non-negative integer"),
                        }))
                    }
                }
                continue;
            }
            match field.parse::<f64>() {
                Ok(v) => {
                    values.insert(name.to_string(), v);
                }
                Err(_) => {
                    return Some(Err(MonitorError::Input {
                        line,
                        message: format!("value `{field}` of `{name}` is not a number"),
                    }))
                }
            }
        }
        Some(Ok(StreamSample { timestamp, values }))
    })
}

/// Reads newline-delimited JSON samples: either `{"timestamp": t, "values": {...}}`
/// or a flat object of numbers with an optional `timestamp` field. Blank lines
/// are skipped; rows without a timestamp are numbered by line.
pub fn read_ndjson<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<StreamSample, MonitorError>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let line_no = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                return Some(Err(MonitorError::Input {
                    line: line_no,
                    message: e.to_string(),
                }))
            }
        };
        if line.trim().is_empty() {
            return None;
        }
        Some(parse_json_sample(&line, line_no))
    })
}

fn parse_json_sample(line: &str, line_no: usize) -> Result<StreamSample, MonitorError> {
    let err = |message: String| MonitorError::Input {
        line: line_no,
        message,
    };
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| err("expected a JSON object".into()))?;
    let timestamp = match obj.get("timestamp") {
        Some(t) => t
            .as_u64()
            .ok_or_else(|| err("timestamp must be a non-negative integer".into()))?,
        None => line_no as u64,
    };
    let fields = match obj.get("values") {
        Some(v) => v
            .as_object()
            .ok_or_else(|| err("`values` must be an object".into()))?,
        None => obj,
    };
    let mut values = BTreeMap::new();
    for (k, v) in fields {
        if k == "timestamp" {
            continue;
        }
        let x = v
            .as_f64()
            .ok_or_else(|| err(format!("value of `{k}` is not a number")))?;
        values.insert(k.clone(), x);
    }
    Ok(StreamSample { timestamp, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implications::Provenance;
    use crate::{nodeset, NodeSet};

    fn spec(given: NodeSet) -> MonitorSpec {
        MonitorSpec::new(
            "MON-1",
            CiStatement::new("x", "y", given, Provenance::MinimalSeparator),
        )
    }

    fn sample(t: u64, pairs: &[(&str, f64)]) -> StreamSample {
        StreamSample {
            timestamp: t,
            values: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn identical_streams_alarm_on_third_window() {
        let samples = (0..1500u64).map(|t| {
            let v = ((t * 7919) % 101) as f64;
            Ok(sample(t + 1, &[("x", v), ("y", v)]))
        });
        let report = run_stream(&[spec(NodeSet::new())], samples).unwrap();
        assert_eq!(report.windows.len(), 3);
        assert_eq!(report.alarms.len(), 1);
        assert_eq!(report.alarms[0].window, 3);
        assert!((report.alarms[0].statistic - 1.0).abs() < 1e-12);
        assert!(report.alarms[0].message.starts_with("x ⊥ y violated"));
    }

    #[test]
    fn constant_stream_is_indeterminate() {
        let samples = (0..2000u64).map(|t| Ok(sample(t + 1, &[("x", 1.0), ("y", t as f64)])));
        let report = run_stream(&[spec(NodeSet::new())], samples).unwrap();
        assert!(report.alarms.is_empty());
        assert!(report
            .windows
            .iter()
            .all(|w| w.status == WindowStatus::Indeterminate && w.statistic.is_none()));
    }

    #[test]
    fn alarm_latches_until_the_run_breaks() {
        let samples = (0..3000u64).map(|t| {
            let v = ((t * 31) % 17) as f64;
            Ok(sample(t + 1, &[("x", v), ("y", -v)]))
        });
        let report = run_stream(&[spec(NodeSet::new())], samples).unwrap();
        assert_eq!(report.windows.len(), 6);
        assert_eq!(report.alarms.len(), 1);
    }

    #[test]
    fn stratified_monitor_removes_the_shared_cause() {
        // x and y both equal z plus distinct noise; within strata of z they are unrelated
        let samples = (0..1000u64).map(|t| {
            let z = (t % 3) as f64;
            let nx = ((t * 7) % 11) as f64 / 11.0;
            let ny = ((t * 13) % 17) as f64 / 17.0;
            Ok(sample(
                t + 1,
                &[("x", 10.0 * z + nx), ("y", 10.0 * z + ny), ("z", z)],
            ))
        });
        let marginal = run_stream(&[spec(NodeSet::new())], samples.clone()).unwrap();
        assert!(marginal
            .windows
            .iter()
            .all(|w| w.status == WindowStatus::Violation));
        let stratified = run_stream(&[spec(nodeset!["z"])], samples).unwrap();
        assert!(stratified
            .windows
            .iter()
            .all(|w| w.statistic.unwrap().abs() < 0.2));
    }

    #[test]
    fn input_errors() {
        let s = MonitorState::new(spec(NodeSet::new())).unwrap();
        let err = ingest(s.clone(), &sample(1, &[("x", 1.0)])).unwrap_err();
        assert_eq!(
            err,
            MonitorError::MissingVariable {
                timestamp: 1,
                variable: "y".into()
            }
        );
        let err = ingest(s.clone(), &sample(1, &[("x", f64::NAN), ("y", 1.0)])).unwrap_err();
        assert!(matches!(err, MonitorError::NonFinite { .. }));
        let (s, _) = ingest(s, &sample(5, &[("x", 1.0), ("y", 1.0)])).unwrap();
        let err = ingest(s, &sample(5, &[("x", 1.0), ("y", 1.0)])).unwrap_err();
        assert!(matches!(err, MonitorError::NonMonotonic { .. }));
    }

    #[test]
    fn spec_invariants() {
        let mut s = spec(NodeSet::new());
        s.window = 10;
        assert!(s.validate(None).is_err());
        let mut s = spec(NodeSet::new());
        s.threshold = 1.0;
        assert!(s.validate(None).is_err());
        assert!(spec(nodeset!["a", "b"]).validate(None).is_err());
    }

    #[test]
    fn empty_source() {
        let report = run_stream(&[spec(NodeSet::new())], std::iter::empty()).unwrap();
        assert_eq!(report, MonitorReport::default());
    }

    #[test]
    fn readers() {
        let csv = "timestamp,x,y\n1,0.5,1\n2,1.5,2\n";
        let rows: Vec<_> = read_csv(csv.as_bytes()).collect::<Result<_, _>>().unwrap();
        assert_eq!(rows[1], sample(2, &[("x", 1.5), ("y", 2.0)]));
        let csv = "x,y\n1,oops\n";
        assert!(matches!(
            read_csv(csv.as_bytes()).next().unwrap(),
            Err(MonitorError::Input { line: 2, .. })
        ));

        let nd = "{\"timestamp\": 4, \"values\": {\"x\": 1, \"y\": 2}}\n\n{\"x\": 3, \"y\": 4}\n";
        let rows: Vec<_> = read_ndjson(nd.as_bytes())
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(rows[0], sample(4, &[("x", 1.0), ("y", 2.0)]));
        assert_eq!(rows[1], sample(3, &[("x", 3.0), ("y", 4.0)]));
    }
}
