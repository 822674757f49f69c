//! Graphviz rendering of the state graph.

use std::fmt::Write as _;

use super::NodeNames;
use crate::class_table::ClassTable;
use crate::domain::{Code, Describe};
use crate::engine::AnalysisResult;
use crate::predicate::StateVerdict;

/// The instruction a state is about to execute.
pub fn head_text(ct: &ClassTable, code: &Code) -> String {
    match code {
        Code::Halt => "halt".into(),
        Code::Seq { prefix, method, pc } => match prefix.first() {
            Some(s) => s.describe(ct),
            None => ct
                .method(*method)
                .def
                .body
                .get(*pc as usize)
                .map(|s| s.to_string())
                .unwrap_or_else(|| "(end of method)".into()),
        },
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

/// Splits a verdict color at its first comma: the fill color, then any
/// further DOT attributes as written.
pub fn split_color(color: &str) -> (&str, Option<&str>) {
    match color.split_once(',') {
        Some((fill, rest)) => (fill.trim(), Some(rest.trim())),
        None => (color.trim(), None),
    }
}

pub fn export_dot(ct: &ClassTable, result: &AnalysisResult, names: &NodeNames, verdicts: &[StateVerdict]) -> String {
    let mut out = String::from("digraph states {\n");
    out.push_str("  node [shape=box, style=filled, fillcolor=white, fontname=\"monospace\"];\n");
    for i in names.order() {
        let n = &result.graph.nodes[i];
        let label = format!("{}\\n{}", escape(&head_text(ct, &n.config.code)), escape(&n.config.fp.describe(ct)));
        let mut attrs = vec![format!("label=\"{label}\"")];
        if let Some(color) = &verdicts[i].color {
            let (fill, extra) = split_color(color);
            attrs.push(format!("fillcolor=\"{}\"", escape(fill)));
            if let Some(extra) = extra.filter(|e| !e.is_empty()) {
                attrs.push(extra.to_string());
            }
        }
        if n.truncated {
            attrs.push("peripheries=2".into());
        }
        if n.root {
            attrs.push("penwidth=2".into());
        }
        let _ = writeln!(out, "  {} [{}];", names.ids[i], attrs.join(", "));
    }
    let mut edges: Vec<(&str, &str, &str)> = result
        .graph
        .edges
        .iter()
        .map(|e| (names.ids[e.from].as_str(), names.ids[e.to].as_str(), e.rule.as_str()))
        .collect();
    edges.sort();
    edges.dedup();
    for (from, to, rule) in edges {
        let _ = writeln!(out, "  {from} -> {to} [label=\"{rule}\"];");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn color_splits_at_first_comma() {
        assert_eq!(split_color("red,colorscheme=set312"), ("red", Some("colorscheme=set312")));
        assert_eq!(split_color("blue"), ("blue", None));
    }

    #[test]
    fn escapes_quotes() {
        assert_eq!(escape(r#"(const-string s "a")"#), r#"(const-string s \"a\")"#);
    }
}
