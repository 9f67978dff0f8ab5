// SPDX-License-Identifier: MIT
use std::fmt::Write;

use super::{Evidence, RequirementsReport, Rule};

fn rule_label(rule: Rule) -> &'static str {
    match rule {
        Rule::R1 => "R1",
        Rule::R2 => "R2",
        Rule::R3 => "R3",
        Rule::R4 => "R4",
        Rule::R5 => "R5",
        Rule::R6 => "R6",
        Rule::TestCase => "test",
        Rule::Monitor => "monitor",
    }
}

fn cell(s: &str) -> String {
    s.replace('|', "\\|")
}

/// Markdown requirements report: one table row per artifact, evidence listed below.
pub fn render_markdown(report: &RequirementsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# Requirements for {} -> {}\n",
        report.exposure, report.outcome
    );
    out.push_str("| ID | Rule | Requirement | Traces |\n");
    out.push_str("|----|------|-------------|--------|\n");
    for a in &report.artifacts {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            a.id,
            rule_label(a.rule),
            cell(&a.text),
            a.traces.join(", ")
        );
    }
    out.push_str("\n## Evidence\n");
    for a in &report.artifacts {
        let _ = writeln!(out, "\n### {}\n", a.id);
        for e in &a.evidence {
            match e {
                Evidence::Path(p) => {
                    let _ = writeln!(out, "- path `{}`", p.render());
                }
                Evidence::Statement(s) => {
                    let _ = writeln!(out, "- implied `{s}`");
                }
            }
        }
        if let Some(c) = &a.commentary {
            let _ = writeln!(out, "\nNote: {c}");
        }
    }
    out
}
