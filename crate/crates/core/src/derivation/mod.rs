// SPDX-License-Identifier: MIT
//! Requirement artifacts derived from the graph analysis.
//!
//! Data and model requirements come from six rules:
//!
//! | rule | kind  | fires for |
//! |------|-------|-----------|
//! | R1   | data  | an open biasing path forking at a latent common cause |
//! | R2   | data  | an open biasing path not blocked by a model input; names its observed blocker |
//! | R3   | data  | disturbance nodes feeding observed sensors (one grouped artifact) |
//! | R4   | model | the input set: sensors on causal paths plus inputs that block biasing paths |
//! | R5   | model | a model input whose open paths to the exposure are all non-causal |
//! | R6   | data  | latent variables that must become observable |
//!
//! Model inputs are the observed parents of the outcome. They count as
//! conditioned on when deciding whether R2 still has work to do.

mod render;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    admissible_blockers, classify_exposure_paths, enumerate_paths, observability_gaps, report_for,
    AnalysisError, InnerRole, PathReport,
};
use crate::dsl::NodeRole;
use crate::graph::{CausalDag, GraphError, NodeSet};
use crate::implications::{implied_independencies, CiStatement, ImplicationError};
use crate::monitor::MonitorSpec;

pub use render::render_markdown;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DerivationError {
    #[error("model declares no {0} node; pass one explicitly")]
    MissingRole(&'static str),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Implication(#[from] ImplicationError),
}

impl From<GraphError> for DerivationError {
    fn from(e: GraphError) -> Self {
        DerivationError::Analysis(AnalysisError::Graph(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Data,
    Model,
    TestCase,
    Monitor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    #[serde(rename = "test_case")]
    TestCase,
    #[serde(rename = "monitor")]
    Monitor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Evidence {
    Path(PathReport),
    Statement(CiStatement),
}

impl Evidence {
    fn nodes(&self) -> NodeSet {
        match self {
            Evidence::Path(p) => p.node_set(),
            Evidence::Statement(s) => s.variables(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequirementArtifact {
    pub id: String,
    pub kind: ArtifactKind,
    pub rule: Rule,
    pub text: String,
    /// The variables the requirement is about; with `rule` this is the
    /// artifact's structural signature.
    pub variables: NodeSet,
    pub evidence: Vec<Evidence>,
    /// Assumption tags found on the evidence nodes and edges, sorted.
    pub traces: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commentary: Option<String>,
}

/// Everything derived for one exposure/outcome pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequirementsReport {
    pub exposure: String,
    pub outcome: String,
    pub artifacts: Vec<RequirementArtifact>,
    pub monitors: Vec<MonitorSpec>,
}

/// Exposure and outcome from explicit names, falling back to the declared roles.
pub fn resolve_roles(
    dag: &CausalDag,
    exposure: Option<&str>,
    outcome: Option<&str>,
) -> Result<(String, String), DerivationError> {
    let pick = |given: Option<&str>, role: NodeRole, what| -> Result<String, DerivationError> {
        match given {
            Some(name) => {
                dag.node(name)?;
                Ok(name.to_string())
            }
            None => dag
                .node_with_role(role)
                .map(|n| n.name.clone())
                .ok_or(DerivationError::MissingRole(what)),
        }
    };
    let x = pick(exposure, NodeRole::Exposure, "exposure")?;
    let y = pick(outcome, NodeRole::Outcome, "outcome")?;
    if x == y {
        return Err(AnalysisError::InvalidQuery("exposure and outcome must differ".into()).into());
    }
    Ok((x, y))
}

fn display(dag: &CausalDag, name: &str) -> String {
    match dag.node(name).ok().and_then(|n| n.label.as_deref()) {
        Some(label) => format!("{} ({name})", label.to_lowercase()),
        None => name.to_string(),
    }
}

fn join(names: &NodeSet) -> String {
    names.to_vec().join(", ")
}

fn traces_of(dag: &CausalDag, evidence: &[Evidence]) -> Vec<String> {
    let mut tags = std::collections::BTreeSet::new();
    for e in evidence {
        for n in e.nodes().iter() {
            if let Ok(node) = dag.node(n) {
                tags.extend(node.traces.iter().cloned());
            }
        }
        if let Evidence::Path(p) = e {
            for w in p.nodes.windows(2) {
                let edge = dag.edge(&w[0], &w[1]).or_else(|| dag.edge(&w[1], &w[0]));
                if let Some(edge) = edge {
                    tags.extend(edge.traces.iter().cloned());
                }
            }
        }
    }
    tags.into_iter().collect()
}

struct Draft {
    kind: ArtifactKind,
    rule: Rule,
    text: String,
    variables: NodeSet,
    evidence: Vec<Evidence>,
    commentary: Option<String>,
}

fn finish(dag: &CausalDag, prefix: &str, drafts: Vec<Draft>) -> Vec<RequirementArtifact> {
    drafts
        .into_iter()
        .enumerate()
        .map(|(i, d)| RequirementArtifact {
            id: format!("{prefix}{}", i + 1),
            kind: d.kind,
            rule: d.rule,
            traces: traces_of(dag, &d.evidence),
            text: d.text,
            variables: d.variables,
            evidence: d.evidence,
            commentary: d.commentary,
        })
        .collect()
}

/// Observed parents of the outcome.
pub fn model_inputs(dag: &CausalDag, outcome: &str) -> Result<NodeSet, GraphError> {
    Ok(dag
        .parents(outcome)?
        .iter()
        .filter(|p| dag.is_observed(p))
        .cloned()
        .collect())
}

/// Data (`RQ-D*`) and model (`RQ-M*`) requirements.
pub fn derive_requirements(
    dag: &CausalDag,
    exposure: &str,
    outcome: &str,
) -> Result<Vec<RequirementArtifact>, DerivationError> {
    let inputs = model_inputs(dag, outcome)?;
    let paths = classify_exposure_paths(dag, exposure, outcome)?;
    let exposure_name = display(dag, exposure);

    let mut data: Vec<Draft> = Vec::new();
    let mut model: Vec<Draft> = Vec::new();

    // R1: latent common causes whose effect reaches an observed sensor
    for p in &paths.biasing_open {
        for (k, role) in p.inner_roles.iter().enumerate() {
            let w = &p.nodes[k + 1];
            if *role != InnerRole::Fork || dag.is_observed(w) {
                continue;
            }
            let sensor = p.nodes[k + 2..p.nodes.len() - 1]
                .iter()
                .find(|n| dag.is_observed(n));
            let Some(sensor) = sensor else { continue };
            data.push(Draft {
                kind: ArtifactKind::Data,
                rule: Rule::R1,
                text: format!(
                    "The training data shall cover situations where {} drives {} while {} is absent.",
                    display(dag, w),
                    display(dag, sensor),
                    exposure_name
                ),
                variables: [w.clone(), sensor.clone()].into_iter().collect(),
                evidence: vec![Evidence::Path(p.clone())],
                commentary: None,
            });
        }
    }

    // R2: stratify by an observed blocker when no model input blocks the path
    let mut r2_nodes = NodeSet::new();
    let mut input_blockers = NodeSet::new();
    let mut input_blocked_paths = Vec::new();
    for p in &paths.biasing_open {
        let admissible = admissible_blockers(dag, exposure, p)?;
        let blocked_by_inputs: NodeSet = admissible.intersection(&inputs);
        if !blocked_by_inputs.is_empty() {
            input_blockers.extend(blocked_by_inputs.iter().cloned());
            input_blocked_paths.push(p.clone());
            continue;
        }
        // closest to the exposure along the path
        let Some(b) = p
            .inner()
            .iter()
            .find(|n| admissible.contains(n) && dag.is_observed(n))
        else {
            continue;
        };
        if !r2_nodes.insert(b.clone()) {
            continue;
        }
        data.push(Draft {
            kind: ArtifactKind::Data,
            rule: Rule::R2,
            text: format!(
                "The training data shall record {} across the full operating range of {}.",
                exposure_name,
                display(dag, b)
            ),
            variables: [b.clone()].into_iter().collect(),
            evidence: vec![Evidence::Path(p.clone())],
            commentary: None,
        });
    }

    // R3: sensor noise
    let mut noisy = NodeSet::new();
    let mut noise_evidence = Vec::new();
    for u in dag.nodes().filter(|n| n.role == NodeRole::Disturbance) {
        for s in dag.children(&u.name)?.iter() {
            if dag.is_observed(s) {
                noisy.insert(s.clone());
                noise_evidence.push(Evidence::Path(report_for(
                    dag,
                    vec![u.name.clone(), s.clone()],
                    &NodeSet::new(),
                )));
            }
        }
    }
    if !noisy.is_empty() {
        data.push(Draft {
            kind: ArtifactKind::Data,
            rule: Rule::R3,
            text: format!(
                "The training data shall carry the realistic disturbance present on {}.",
                join(&noisy)
            ),
            variables: noisy,
            evidence: noise_evidence,
            commentary: None,
        });
    }

    // R6: latent variables needed for adjustment
    let gaps = observability_gaps(dag, exposure, outcome)?;
    for g in gaps.iter() {
        let evidence: Vec<Evidence> = paths
            .biasing_open
            .iter()
            .filter(|p| p.nodes.contains(g))
            .cloned()
            .map(Evidence::Path)
            .collect();
        data.push(Draft {
            kind: ArtifactKind::Data,
            rule: Rule::R6,
            text: format!(
                "The system shall provide a means to observe {}, which is needed to block a non-causal path between {} and {}.",
                display(dag, g),
                exposure,
                outcome
            ),
            variables: [g.clone()].into_iter().collect(),
            evidence,
            commentary: None,
        });
    }

    // R5: inputs associated with the exposure only through non-causal paths
    for input in inputs.iter() {
        if input == exposure {
            continue;
        }
        let open: Vec<PathReport> = enumerate_paths(dag, exposure, input, &NodeSet::new())?
            .into_iter()
            .filter(|p| p.is_open())
            .collect();
        let causal = |p: &PathReport| {
            p.directed
                || p.steps
                    .iter()
                    .all(|s| *s == crate::analysis::Step::Backward)
        };
        if open.is_empty() || open.iter().any(causal) {
            continue;
        }
        model.push(Draft {
            kind: ArtifactKind::Model,
            rule: Rule::R5,
            text: format!(
                "The model shall not rely on {1} as its only evidence for {0}.",
                exposure_name,
                display(dag, input)
            ),
            variables: [input.clone()].into_iter().collect(),
            evidence: open.into_iter().map(Evidence::Path).collect(),
            commentary: Some(format!(
                "{input} carries no causal signal about {exposure}. It may still be kept as an input if the \
                 model is also meant to tell apart the other causes it reflects; that goal is not decided by the graph."
            )),
        });
    }

    // R4: input sufficiency
    let mut required = NodeSet::new();
    let mut evidence = Vec::new();
    for p in &paths.causal {
        let on_path: Vec<&String> = p.inner().iter().filter(|n| dag.is_observed(n)).collect();
        if !on_path.is_empty() {
            required.extend(on_path.into_iter().cloned());
            evidence.push(Evidence::Path(p.clone()));
        }
    }
    required.extend(input_blockers.iter().cloned());
    evidence.extend(input_blocked_paths.into_iter().map(Evidence::Path));
    if !required.is_empty() {
        model.push(Draft {
            kind: ArtifactKind::Model,
            rule: Rule::R4,
            text: format!(
                "The model shall take {} as inputs.",
                required
                    .iter()
                    .map(|n| display(dag, n))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            variables: required,
            evidence,
            commentary: None,
        });
    }

    let mut out = finish(dag, "RQ-D", data);
    out.extend(finish(dag, "RQ-M", model));
    Ok(out)
}

/// Test specifications for implied independencies between a controllable
/// variable and the outcome or one of its observed inputs.
pub fn derive_test_cases(
    dag: &CausalDag,
    exposure: &str,
    outcome: &str,
) -> Result<Vec<RequirementArtifact>, DerivationError> {
    let inputs = model_inputs(dag, outcome)?;
    let mut scope = dag.observed();
    scope.insert(exposure);
    if scope.len() < 2 {
        return Ok(Vec::new());
    }
    let mut drafts = Vec::new();
    for s in implied_independencies(dag, &scope, 3)? {
        let pick = [(&s.x, &s.y), (&s.y, &s.x)].into_iter().find(|(c, other)| {
            dag.is_controllable(c)
                && *c != exposure
                && (*other == outcome || inputs.contains(other))
        });
        let Some((c, other)) = pick else { continue };
        let text = if other == outcome {
            if s.given.is_empty() {
                format!(
                    "Vary {} across its range; the distribution of {} shall remain unchanged.",
                    display(dag, c),
                    other
                )
            } else {
                format!(
                    "Trigger {} events at varying levels of {} while acquiring {} under a fixed protocol; \
                     the hit rate of {} shall stay the same.",
                    display(dag, exposure),
                    display(dag, c),
                    join(&s.given),
                    other
                )
            }
        } else if s.given.is_empty() {
            format!(
                "Sample {} under varying {}; no association between {} and {} shall be observable.",
                other,
                display(dag, c),
                c,
                other
            )
        } else {
            format!(
                "Vary {} while holding {} fixed; the distribution of {} shall remain unchanged within each level of {}.",
                display(dag, c),
                join(&s.given),
                other,
                join(&s.given)
            )
        };
        drafts.push(Draft {
            kind: ArtifactKind::TestCase,
            rule: Rule::TestCase,
            text,
            variables: s.variables(),
            evidence: vec![Evidence::Statement(s.clone())],
            commentary: None,
        });
    }
    Ok(finish(dag, "TC-", drafts))
}

/// Runtime monitors for implied independencies among observed variables:
/// marginal ones always, single-variable stratified ones if `stratified`.
pub fn derive_monitors(
    dag: &CausalDag,
    stratified: bool,
) -> Result<Vec<MonitorSpec>, DerivationError> {
    let scope = dag.observed();
    if scope.len() < 2 {
        return Ok(Vec::new());
    }
    let max_given = if stratified { 1 } else { 0 };
    Ok(implied_independencies(dag, &scope, max_given)?
        .into_iter()
        .enumerate()
        .map(|(i, s)| MonitorSpec::new(format!("MON-{}", i + 1), s))
        .collect())
}

fn monitor_artifact(m: &MonitorSpec) -> Draft {
    let s = &m.statement;
    let text = if s.given.is_empty() {
        format!(
            "During operation, track the correlation of {} and {} over windows of {} samples; raise an alarm \
             when its magnitude exceeds {} in {} consecutive windows.",
            s.x, s.y, m.window, m.threshold, m.consecutive
        )
    } else {
        format!(
            "During operation, track the correlation of {} and {} within strata of {} over windows of {} samples; \
             raise an alarm when its magnitude exceeds {} in {} consecutive windows.",
            s.x,
            s.y,
            join(&s.given),
            m.window,
            m.threshold,
            m.consecutive
        )
    };
    Draft {
        kind: ArtifactKind::Monitor,
        rule: Rule::Monitor,
        text,
        variables: s.variables(),
        evidence: vec![Evidence::Statement(s.clone())],
        commentary: None,
    }
}

/// Requirements, test cases and monitors in one report. Monitor artifacts share
/// their ids with the matching [`MonitorSpec`].
pub fn requirements_report(
    dag: &CausalDag,
    exposure: &str,
    outcome: &str,
) -> Result<RequirementsReport, DerivationError> {
    let mut artifacts = derive_requirements(dag, exposure, outcome)?;
    artifacts.extend(derive_test_cases(dag, exposure, outcome)?);
    let monitors = derive_monitors(dag, true)?;
    let drafts = monitors.iter().map(monitor_artifact).collect();
    artifacts.extend(finish(dag, "MON-", drafts));
    Ok(RequirementsReport {
        exposure: exposure.to_string(),
        outcome: outcome.to_string(),
        artifacts,
        monitors,
    })
}
