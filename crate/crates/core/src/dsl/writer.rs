// SPDX-License-Identifier: MIT
use std::collections::BTreeMap;
use std::fmt::Write;

use super::{Format, MechanismDecl, ModelDocument, NodeRole};

/// Renders a document in the requested format. The output re-parses to a
/// document equal to `doc`.
pub fn serialize(doc: &ModelDocument, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc).expect("documents always serialize");
            s.push('\n');
            s
        }
        Format::Dsl => to_dsl(doc),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

// `Display` for f64 prints the shortest string that parses back to the same value.
fn num(v: f64) -> String {
    format!("{v}")
}

fn list(items: &[String]) -> String {
    format!("[{}]", items.join(", "))
}

fn weights(w: &BTreeMap<String, f64>) -> String {
    let inner: Vec<String> = w.iter().map(|(k, v)| format!("{k}: {}", num(*v))).collect();
    format!("{{ {} }}", inner.join(", "))
}

fn block(attrs: &[String]) -> String {
    if attrs.is_empty() {
        String::new()
    } else {
        format!(" {{ {} }}", attrs.join(", "))
    }
}

fn to_dsl(doc: &ModelDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {} {{", quote(&doc.name));

    for a in &doc.assumptions {
        let _ = writeln!(out, "  assume {} {}", a.tag, quote(&a.text));
    }
    if !doc.assumptions.is_empty() && !doc.nodes.is_empty() {
        out.push('\n');
    }

    for n in &doc.nodes {
        let mut attrs = vec![format!("kind: {}", n.kind)];
        if n.role != NodeRole::Covariate {
            attrs.push(format!("role: {}", n.role));
        }
        if !n.traces.is_empty() {
            attrs.push(format!("traces: {}", list(&n.traces)));
        }
        if let Some(label) = &n.label {
            attrs.push(format!("label: {}", quote(label)));
        }
        if let Some(c) = n.controllable {
            attrs.push(format!("controllable: {c}"));
        }
        let _ = writeln!(out, "  node {}{}", n.name, block(&attrs));
    }
    if !doc.edges.is_empty() {
        out.push('\n');
    }

    for e in &doc.edges {
        let mut attrs = Vec::new();
        if !e.traces.is_empty() {
            attrs.push(format!("traces: {}", list(&e.traces)));
        }
        if let Some(tag) = &e.mechanism_tag {
            attrs.push(format!("mechanism: {}", quote(tag)));
        }
        let _ = writeln!(out, "  edge {} -> {}{}", e.from, e.to, block(&attrs));
    }

    if !doc.mechanisms.is_empty() {
        out.push('\n');
    }
    for (node, m) in &doc.mechanisms {
        let attrs = match m {
            MechanismDecl::LinearGaussian {
                intercept,
                noise_sd,
                weights: w,
            } => {
                let mut a = vec![
                    format!("intercept: {}", num(*intercept)),
                    format!("noise_sd: {}", num(*noise_sd)),
                ];
                if !w.is_empty() {
                    a.push(format!("weights: {}", weights(w)));
                }
                a
            }
            MechanismDecl::LogisticBinary {
                intercept,
                weights: w,
            } => {
                let mut a = vec![format!("intercept: {}", num(*intercept))];
                if !w.is_empty() {
                    a.push(format!("weights: {}", weights(w)));
                }
                a
            }
            MechanismDecl::TableCpd {
                levels,
                parents,
                rows,
            } => {
                let mut a = vec![format!("levels: {levels}")];
                if !parents.is_empty() {
                    a.push(format!("parents: {}", list(parents)));
                }
                let rows: Vec<String> = rows
                    .iter()
                    .map(|r| list(&r.iter().map(|p| num(*p)).collect::<Vec<_>>()))
                    .collect();
                a.push(format!("rows: {}", list(&rows)));
                a
            }
        };
        let _ = writeln!(out, "  mechanism {node} {}{}", m.type_name(), block(&attrs));
    }

    out.push_str("}\n");
    out
}
