// SPDX-License-Identifier: MIT
use super::*;
use crate::dsl::parse;
use crate::{nodeset, MOTOR_FIXTURE};

fn dag(src: &str) -> CausalDag {
    CausalDag::build(&parse(src).unwrap()).unwrap()
}

fn motor() -> CausalDag {
    dag(MOTOR_FIXTURE)
}

fn fork() -> CausalDag {
    dag(r#"model "f" { node X1 node Z node X2 edge Z -> X1 edge Z -> X2 }"#)
}

fn chain() -> CausalDag {
    dag(r#"model "c" { node A node B node C edge A -> B edge B -> C }"#)
}

fn sep(d: &CausalDag, x: &str, y: &str, given: NodeSet) -> bool {
    d_separated(d, &SeparationQuery::new(x, y, given)).unwrap()
}

#[test]
fn fork_path_has_fork_role() {
    let paths = enumerate_paths(&fork(), "X1", "X2", &NodeSet::new()).unwrap();
    assert_eq!(paths.len(), 1);
    assert_eq!(paths[0].inner_roles, vec![InnerRole::Fork]);
    assert_eq!(paths[0].render(), "X1 <- Z -> X2");
    assert!(paths[0].is_open());
    assert_eq!(paths[0].blockers, nodeset!["Z"]);
    assert_eq!(
        paths[0].status_given(&fork(), &nodeset!["Z"]),
        PathStatus::Blocked
    );
}

#[test]
fn motor_cooling_to_vibration_paths() {
    let d = motor();
    let paths = enumerate_paths(&d, "CoolingFault", "V_s", &NodeSet::new()).unwrap();
    assert!(paths
        .iter()
        .any(|p| p.render() == "CoolingFault <- Q <- MechFault -> V -> V_s"));
    let rendered: Vec<String> = paths.iter().map(|p| p.nodes.join(",")).collect();
    let mut sorted = rendered.clone();
    sorted.sort();
    assert_eq!(rendered, sorted);
}

#[test]
fn disconnected_nodes_have_no_paths() {
    let d = dag(r#"model "d" { node A node B }"#);
    assert!(enumerate_paths(&d, "A", "B", &NodeSet::new())
        .unwrap()
        .is_empty());
    assert!(sep(&d, "A", "B", NodeSet::new()));
}

#[test]
fn path_cap_overflows() {
    let d = motor();
    let err = enumerate_paths_capped(&d, "CoolingFault", "Classification", &NodeSet::new(), 2)
        .unwrap_err();
    assert_eq!(err, AnalysisError::PathOverflow { cap: 2 });
}

#[test]
fn motor_separation_examples() {
    let d = motor();
    assert!(sep(
        &d,
        "Classification",
        "T_E",
        nodeset!["H_s", "T_s", "V_s"]
    ));
    assert!(sep(&d, "V_s", "T_E", NodeSet::new()));
    assert!(!sep(&d, "H_s", "V_s", NodeSet::new()));
}

#[test]
fn query_invariants() {
    let d = motor();
    assert!(matches!(
        d_separated(&d, &SeparationQuery::new("V_s", "V_s", NodeSet::new())),
        Err(AnalysisError::InvalidQuery(_))
    ));
    assert!(matches!(
        d_separated(&d, &SeparationQuery::new("V_s", "T_E", nodeset!["T_E"])),
        Err(AnalysisError::InvalidQuery(_))
    ));
    assert_eq!(
        d_separated(&d, &SeparationQuery::new("V_s", "Nope", NodeSet::new())).unwrap_err(),
        AnalysisError::Graph(GraphError::UnknownNode("Nope".into()))
    );
}

#[test]
fn collider_opens_when_descendant_is_conditioned() {
    let d = dag(r#"model "v" { node A node B node C node D edge A -> C edge B -> C edge C -> D }"#);
    assert!(sep(&d, "A", "B", NodeSet::new()));
    assert!(!sep(&d, "A", "B", nodeset!["C"]));
    assert!(!sep(&d, "A", "B", nodeset!["D"]));
}

#[test]
fn motor_exposure_paths() {
    let d = motor();
    let p = classify_exposure_paths(&d, "CoolingFault", "Classification").unwrap();
    let causal: Vec<String> = p.causal.iter().map(|r| r.render()).collect();
    assert_eq!(causal.len(), 3);
    assert!(causal.contains(&"CoolingFault -> T -> T_s -> Classification".to_string()));
    assert!(causal.contains(&"CoolingFault -> R1 -> H -> H_s -> Classification".to_string()));
    assert!(
        causal.contains(&"CoolingFault -> R1 -> H -> PM -> T -> T_s -> Classification".to_string())
    );
    assert_eq!(p.biasing_open.len(), 2);
    assert!(p.biasing_open.iter().any(
        |r| r.nodes.contains(&"MechFault".to_string()) && r.nodes.contains(&"V_s".to_string())
    ));
    assert!(p
        .biasing_open
        .iter()
        .any(|r| r.nodes.contains(&"T_E".to_string()) && r.nodes.contains(&"T_s".to_string())));
    for r in p.causal.iter() {
        assert!(!r.inner_roles.contains(&InnerRole::Collider));
    }
}

#[test]
fn chain_exposure_paths() {
    let p = classify_exposure_paths(&chain(), "A", "C").unwrap();
    assert_eq!(
        (p.causal.len(), p.biasing_open.len(), p.blocked.len()),
        (1, 0, 0)
    );
}

#[test]
fn motor_backdoor_set() {
    let d = motor();
    let mut candidates = d.observed();
    candidates.remove("CoolingFault");
    candidates.remove("Classification");
    let sets = backdoor_sets(&d, "CoolingFault", "Classification", &candidates, 4).unwrap();
    assert_eq!(sets.len(), 1);
    assert_eq!(sets[0].members, nodeset!["T_E", "V_s"]);
    assert!(sets[0].minimal);
}

#[test]
fn fork_backdoor_set() {
    let sets = backdoor_sets(&fork(), "X1", "X2", &nodeset!["Z"], 1).unwrap();
    assert_eq!(sets.len(), 1);
    assert_eq!(sets[0].members, nodeset!["Z"]);
}

#[test]
fn chain_needs_only_the_empty_set() {
    let sets = backdoor_sets(&chain(), "A", "C", &nodeset!["B"], 1).unwrap();
    assert_eq!(sets.len(), 1);
    assert!(sets[0].members.is_empty());
}

#[test]
fn backdoor_rejects_endpoint_candidates() {
    assert_eq!(
        backdoor_sets(&chain(), "A", "C", &nodeset!["A"], 1).unwrap_err(),
        AnalysisError::CandidateIsEndpoint("A".into())
    );
}

#[test]
fn backdoor_without_valid_set() {
    // the only confounder is unobservable, so no set from {B} works
    let d = dag(r#"model "u" { node U {kind: latent} node X node Y node B
        edge U -> X edge U -> Y edge X -> B }"#);
    assert!(backdoor_sets(&d, "X", "Y", &nodeset!["B"], 1)
        .unwrap()
        .is_empty());
}

#[test]
fn combinations_enumerates_lexicographically() {
    let all: Vec<Vec<usize>> = combinations(4, 2).collect();
    assert_eq!(
        all,
        vec![
            vec![0, 1],
            vec![0, 2],
            vec![0, 3],
            vec![1, 2],
            vec![1, 3],
            vec![2, 3]
        ]
    );
    assert_eq!(combinations(3, 0).count(), 1);
    assert_eq!(combinations(2, 3).count(), 0);
}

fn iv_graph() -> CausalDag {
    dag(r#"model "iv" { node Z node X node Y node U {kind: latent}
        edge Z -> X edge X -> Y edge U -> X edge U -> Y }"#)
}

#[test]
fn instrument_examples() {
    let d = iv_graph();
    assert_eq!(
        find_instruments(&d, "X", "Y", &nodeset!["Z"]).unwrap(),
        nodeset!["Z"]
    );
    assert!(find_instruments(&d, "X", "Y", &nodeset!["U"])
        .unwrap()
        .is_empty());
    let m = motor();
    assert!(
        find_instruments(&m, "CoolingFault", "Classification", &nodeset!["T_E"])
            .unwrap()
            .is_empty()
    );
}

#[test]
fn observability_examples() {
    let d = motor();
    assert!(observability_gaps(&d, "CoolingFault", "Classification")
        .unwrap()
        .is_empty());

    let mut doc = parse(MOTOR_FIXTURE).unwrap();
    doc.node_mut("T_E").unwrap().kind = crate::dsl::NodeKind::Latent;
    let hidden = CausalDag::build(&doc).unwrap();
    assert_eq!(
        observability_gaps(&hidden, "CoolingFault", "Classification").unwrap(),
        nodeset!["T_E"]
    );

    let c = chain();
    assert!(observability_gaps(&c, "A", "C").unwrap().is_empty());
}

#[test]
fn admissible_blockers_exclude_exposure_descendants() {
    let d = motor();
    let p = classify_exposure_paths(&d, "CoolingFault", "Classification").unwrap();
    let te_path = p
        .biasing_open
        .iter()
        .find(|r| r.nodes.contains(&"T_E".to_string()))
        .unwrap();
    let blockers = admissible_blockers(&d, "CoolingFault", te_path).unwrap();
    assert_eq!(blockers, nodeset!["T_E"]);
}
