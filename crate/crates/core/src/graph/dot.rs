// SPDX-License-Identifier: MIT
//! Graphviz export. Latent nodes get a gray fill, observed nodes white;
//! the edge mechanism tag picks the edge color.

use std::fmt::Write;

use super::CausalDag;
use crate::dsl::NodeRole;

pub const LATENT_FILL: &str = "#d3d3d3";
pub const OBSERVED_FILL: &str = "#ffffff";

const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Color for a mechanism tag. Well-known tags have fixed colors; others hash
/// into a small palette so the same tag is always drawn the same way.
pub fn mechanism_color(tag: &str) -> &'static str {
    match tag {
        "temperature" => "#008000",
        "flux" => "#008080",
        "power" => "#00b0b0",
        "mechanical" => "#800000",
        "environment" => "#ff5555",
        other => {
            let h = other.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
                (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
            });
            PALETTE[(h % PALETTE.len() as u64) as usize]
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', "\\n")
}

pub fn to_dot(dag: &CausalDag) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(dag.name()));
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=ellipse, style=filled, fontname=\"Helvetica\"];\n");
    for n in dag.nodes() {
        let fill = if n.is_observed() {
            OBSERVED_FILL
        } else {
            LATENT_FILL
        };
        let mut attrs = vec![format!("fillcolor=\"{fill}\"")];
        if let Some(label) = &n.label {
            attrs.push(format!(
                "label=\"{}\\n({})\"",
                escape(label),
                escape(&n.name)
            ));
        }
        match n.role {
            NodeRole::Exposure | NodeRole::Outcome => attrs.push("peripheries=2".into()),
            NodeRole::Disturbance => attrs.push("shape=circle".into()),
            NodeRole::Covariate => {}
        }
        let _ = writeln!(out, "  \"{}\" [{}];", escape(&n.name), attrs.join(", "));
    }
    for e in dag.edges() {
        let attrs = match &e.mechanism_tag {
            Some(tag) => format!(
                " [color=\"{}\", tooltip=\"{}\"]",
                mechanism_color(tag),
                escape(tag)
            ),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\"{};",
            escape(&e.from),
            escape(&e.to),
            attrs
        );
    }
    out.push_str("}\n");
    out
}
