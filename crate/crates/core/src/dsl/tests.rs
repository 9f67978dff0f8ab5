// SPDX-License-Identifier: MIT
use super::*;
use crate::MOTOR_FIXTURE;

fn err(src: &str) -> DslError {
    parse(src).expect_err("expected a parse error")
}

#[test]
fn minimal_document() {
    let doc = parse(r#"model "m" { node A {kind: observed} }"#).unwrap();
    assert_eq!(doc.name, "m");
    assert_eq!(doc.nodes.len(), 1);
    assert!(doc.edges.is_empty());
    assert_eq!(doc.nodes[0].kind, NodeKind::Observed);
    assert_eq!(doc.nodes[0].role, NodeRole::Covariate);
}

#[test]
fn motor_fixture_counts() {
    let doc = parse(MOTOR_FIXTURE).unwrap();
    let disturbances = doc
        .nodes
        .iter()
        .filter(|n| n.role == NodeRole::Disturbance)
        .count();
    assert_eq!(doc.nodes.len(), 16);
    assert_eq!(disturbances, 3);
    assert_eq!(doc.edges.len(), 19);
    let non_disturbance_edges = doc
        .edges
        .iter()
        .filter(|e| !e.from.starts_with("U_"))
        .count();
    assert_eq!(non_disturbance_edges, 16);
    assert_eq!(
        doc.node_with_role(NodeRole::Exposure).unwrap().name,
        "CoolingFault"
    );
    assert_eq!(
        doc.node_with_role(NodeRole::Outcome).unwrap().name,
        "Classification"
    );
    assert_eq!(doc.mechanisms.len(), 16);
}

#[test]
fn self_loop_is_rejected() {
    let e = err(r#"model "m" { node A edge A -> A {} }"#);
    assert_eq!(e.kind, DslErrorKind::SelfLoop("A".into()));
    assert_eq!(
        e.position,
        Some(Position {
            line: 1,
            column: 25
        })
    );
}

#[test]
fn duplicate_node_reports_position() {
    let e = err("model \"m\" {\n  node A\n  node A\n}");
    assert_eq!(e.kind, DslErrorKind::DuplicateNode("A".into()));
    assert_eq!(e.position, Some(Position { line: 3, column: 8 }));
    assert_eq!(e.to_string(), "3:8: duplicate node `A`");
}

#[test]
fn unknown_edge_endpoint() {
    let e = err(r#"model "m" { node A edge A -> B }"#);
    assert_eq!(e.kind, DslErrorKind::UnknownEndpoint("B".into()));
    assert_eq!(e.identifier(), Some("B"));
}

#[test]
fn duplicate_assumption_tag() {
    let e = err(r#"model "m" { assume PK1 "a" assume PK1 "b" }"#);
    assert_eq!(e.kind, DslErrorKind::DuplicateAssumption("PK1".into()));
}

#[test]
fn unknown_trace_tag() {
    let e = err(r#"model "m" { assume PK1 "a" node A { traces: [PK1, PK9] } }"#);
    assert_eq!(e.kind, DslErrorKind::UnknownTrace("PK9".into()));
}

#[test]
fn traces_may_reference_later_assumptions() {
    let doc = parse(r#"model "m" { node A { traces: [PK1] } assume PK1 "later" }"#).unwrap();
    assert_eq!(doc.nodes[0].traces, vec!["PK1"]);
}

#[test]
fn unknown_attribute_is_strict() {
    let e = err(r#"model "m" { node A { knd: latent } }"#);
    assert_eq!(e.kind, DslErrorKind::UnknownAttribute("knd".into()));
    assert_eq!(e.position.unwrap().column, 22);
}

#[test]
fn bad_enum_value() {
    let e = err(r#"model "m" { node A { kind: hidden } }"#);
    assert!(matches!(e.kind, DslErrorKind::InvalidValue { ref key, .. } if key == "kind"));
}

#[test]
fn second_exposure_is_rejected() {
    let e = err(r#"model "m" { node A { role: exposure } node B { role: exposure } }"#);
    assert!(matches!(e.kind, DslErrorKind::DuplicateRole { ref name, .. } if name == "B"));
}

#[test]
fn syntax_error_position() {
    let e = err("model \"m\" {\n  node A {\n    kind observed\n  }\n}");
    assert!(matches!(e.kind, DslErrorKind::Syntax(_)));
    assert_eq!(
        e.position,
        Some(Position {
            line: 3,
            column: 10
        })
    );
}

#[test]
fn trailing_garbage() {
    let e = err(r#"model "m" { } extra"#);
    assert!(matches!(e.kind, DslErrorKind::Syntax(_)));
}

#[test]
fn disturbance_shorthand_expands() {
    let doc =
        parse(r#"model "m" { assume PK5 "noise" node S disturbance U -> S { traces: [PK5] } }"#)
            .unwrap();
    let u = doc.node("U").unwrap();
    assert_eq!(u.kind, NodeKind::Latent);
    assert_eq!(u.role, NodeRole::Disturbance);
    assert_eq!(u.traces, vec!["PK5"]);
    assert_eq!(doc.edges[0].from, "U");
    assert_eq!(doc.edges[0].traces, vec!["PK5"]);
}

#[test]
fn mechanism_blocks() {
    let doc = parse(
        r#"model "m" {
            node A node B node C
            edge A -> B edge B -> C
            mechanism A table_cpd { levels: 2, rows: [[0.75, 0.25]] }
            mechanism B logistic_binary { intercept: -1, weights: { A: 2 } }
            mechanism C linear_gaussian { noise_sd: 1.5, weights: { B: -0.5 } }
        }"#,
    )
    .unwrap();
    let m = &doc.mechanisms;
    assert_eq!(
        m["C"],
        MechanismDecl::LinearGaussian {
            intercept: 0.0,
            noise_sd: 1.5,
            weights: [("B".to_string(), -0.5)].into_iter().collect()
        }
    );
    assert!(matches!(m["A"], MechanismDecl::TableCpd { levels: 2, .. }));
}

#[test]
fn mechanism_errors() {
    let e = err(r#"model "m" { node A mechanism A linear_gaussian { noise_sd: 0 } }"#);
    assert!(matches!(e.kind, DslErrorKind::InvalidValue { .. }));
    let e = err(r#"model "m" { node A mechanism A linear_gaussian { intercept: 1 } }"#);
    assert_eq!(e.kind, DslErrorKind::MissingAttribute("noise_sd".into()));
    let e = err(r#"model "m" { node A mechanism B linear_gaussian { noise_sd: 1 } }"#);
    assert_eq!(e.kind, DslErrorKind::UnknownMechanismNode("B".into()));
    let e = err(
        r#"model "m" { node A mechanism A linear_gaussian { noise_sd: 1, weights: { Z: 1 } } }"#,
    );
    assert_eq!(e.kind, DslErrorKind::UnknownEndpoint("Z".into()));
    let e = err(r#"model "m" { node A mechanism A gamma { } }"#);
    assert!(matches!(e.kind, DslErrorKind::InvalidValue { .. }));
}

#[test]
fn motor_round_trips_in_both_formats() {
    let doc = parse(MOTOR_FIXTURE).unwrap();
    let dsl = serialize(&doc, Format::Dsl);
    assert_eq!(parse(&dsl).unwrap(), doc);
    let json = serialize(&doc, Format::Json);
    assert_eq!(ModelDocument::from_json(&json).unwrap(), doc);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["nodes"].as_array().unwrap().len(), 16);
}

#[test]
fn assumption_tags_survive_serialization() {
    let doc = parse(MOTOR_FIXTURE).unwrap();
    let dsl = serialize(&doc, Format::Dsl);
    for tag in ["PK1", "PK2", "PK3", "PK4", "PK5"] {
        assert!(dsl.contains(&format!("assume {tag} ")), "{tag} missing");
    }
}

#[test]
fn json_is_validated() {
    let json = r#"{"name":"m","nodes":[{"name":"A","kind":"observed"}],
        "edges":[{"from":"A","to":"A"}]}"#;
    let e = ModelDocument::from_json(json).unwrap_err();
    assert_eq!(e.kind, DslErrorKind::SelfLoop("A".into()));
    let json = r#"{"name":"m","nodes":[{"name":"A","kind":"observed","colour":"red"}]}"#;
    assert!(matches!(
        ModelDocument::from_json(json).unwrap_err().kind,
        DslErrorKind::Json(_)
    ));
}

#[test]
fn parse_any_detects_format() {
    let doc = parse(r#"model "m" { node A }"#).unwrap();
    let json = serialize(&doc, Format::Json);
    assert_eq!(ModelDocument::parse_any(&json).unwrap(), doc);
    assert_eq!(
        ModelDocument::parse_any(r#"model "m" { node A }"#).unwrap(),
        doc
    );
}

#[test]
fn identifiers() {
    assert!(is_identifier("FR-1"));
    assert!(is_identifier("T_E"));
    assert!(!is_identifier("1A"));
    assert!(!is_identifier("A-"));
    assert!(!is_identifier("A->B"));
    assert!(!is_identifier(""));
}
