// SPDX-License-Identifier: MIT
//! Request and response shapes shared by the command line and the HTTP
//! service. Both render JSON through [`to_json`], so the same query on the
//! same model produces the same bytes from either front end.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    backdoor_sets, classify_exposure_paths, d_separated, find_instruments, observability_gaps,
    AdjustmentSet, ExposurePaths, SeparationQuery,
};
use crate::derivation::{
    requirements_report, resolve_roles, RequirementArtifact, RequirementsReport,
};
use crate::graph::{CausalDag, NodeSet};
use crate::implications::{asserted, implied_independencies, verify, CiStatement};
use crate::monitor::MonitorSpec;
use crate::Error;

/// Default largest conditioning set searched for implications.
pub const DEFAULT_MAX_GIVEN: usize = 3;

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("response types serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssertedCheck {
    pub tag: String,
    pub statement: CiStatement,
    /// Whether the graph implies the recorded statement.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub acyclic: bool,
    pub observability_gaps: NodeSet,
    pub asserted: Vec<AssertedCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub model: String,
    pub exposure: String,
    pub outcome: String,
    pub validation: Validation,
    pub paths: ExposurePaths,
    /// Minimal back-door sets over the observed variables.
    pub adjustment: Vec<AdjustmentSet>,
    pub instruments: NodeSet,
    pub implications: Vec<CiStatement>,
    pub requirements: Vec<RequirementArtifact>,
    pub monitors: Vec<MonitorSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolesRequest {
    #[serde(default)]
    pub exposure: Option<String>,
    #[serde(default)]
    pub outcome: Option<String>,
}

/// Observed variables plus the exposure: what the default implication scope covers.
pub fn default_scope(dag: &CausalDag, exposure: Option<&str>) -> NodeSet {
    let mut scope = dag.observed();
    if let Some(x) = exposure {
        scope.insert(x);
    }
    scope
}

/// Full analysis for one exposure/outcome pair.
pub fn analyze(dag: &CausalDag, req: &RolesRequest) -> Result<AnalysisReport, Error> {
    let (exposure, outcome) = resolve_roles(dag, req.exposure.as_deref(), req.outcome.as_deref())?;
    let paths = classify_exposure_paths(dag, &exposure, &outcome)?;
    let mut candidates = dag.observed();
    candidates.remove(&exposure);
    candidates.remove(&outcome);
    let adjustment = backdoor_sets(dag, &exposure, &outcome, &candidates, candidates.len())?;
    let instruments = find_instruments(dag, &exposure, &outcome, &candidates)?;
    let scope = default_scope(dag, Some(&exposure));
    let implications = if scope.len() >= 2 {
        implied_independencies(dag, &scope, DEFAULT_MAX_GIVEN)?
    } else {
        Vec::new()
    };
    let asserted = asserted(dag)
        .into_iter()
        .map(|(tag, statement)| {
            let holds = verify(dag, &statement)?;
            Ok(AssertedCheck {
                tag,
                statement,
                holds,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let report = requirements_report(dag, &exposure, &outcome)?;
    Ok(AnalysisReport {
        model: dag.name().to_string(),
        validation: Validation {
            acyclic: true,
            observability_gaps: observability_gaps(dag, &exposure, &outcome)?,
            asserted,
        },
        exposure,
        outcome,
        paths,
        adjustment,
        instruments,
        implications,
        requirements: report.artifacts,
        monitors: report.monitors,
    })
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsepRequest {
    pub x: String,
    pub y: String,
    #[serde(default)]
    pub given: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DsepResponse {
    pub x: String,
    pub y: String,
    pub given: NodeSet,
    pub separated: bool,
}

pub fn dsep(dag: &CausalDag, req: &DsepRequest) -> Result<DsepResponse, Error> {
    let given: NodeSet = req.given.iter().cloned().collect();
    let separated = d_separated(dag, &SeparationQuery::new(&req.x, &req.y, given.clone()))?;
    Ok(DsepResponse {
        x: req.x.clone(),
        y: req.y.clone(),
        given,
        separated,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImplicationsRequest {
    /// Defaults to the observed variables plus the model's exposure.
    #[serde(default)]
    pub scope: Option<Vec<String>>,
    #[serde(default)]
    pub max_given: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicationsResponse {
    pub scope: NodeSet,
    pub max_given: usize,
    pub statements: Vec<CiStatement>,
}

pub fn implications(
    dag: &CausalDag,
    req: &ImplicationsRequest,
) -> Result<ImplicationsResponse, Error> {
    let scope: NodeSet = match &req.scope {
        Some(s) => s.iter().cloned().collect(),
        None => default_scope(
            dag,
            dag.node_with_role(crate::dsl::NodeRole::Exposure)
                .map(|n| n.name.as_str()),
        ),
    };
    let max_given = req.max_given.unwrap_or(DEFAULT_MAX_GIVEN);
    let statements = implied_independencies(dag, &scope, max_given)?;
    Ok(ImplicationsResponse {
        scope,
        max_given,
        statements,
    })
}

pub fn requirements(dag: &CausalDag, req: &RolesRequest) -> Result<RequirementsReport, Error> {
    let (exposure, outcome) = resolve_roles(dag, req.exposure.as_deref(), req.outcome.as_deref())?;
    Ok(requirements_report(dag, &exposure, &outcome)?)
}
