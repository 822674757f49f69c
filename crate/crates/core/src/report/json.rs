//! The JSON export read by the graph explorer (schema version 1).

use serde_json::{json, Value as Json};

use super::dot::head_text;
use super::{ApiUse, HeatMap, NodeNames, PermissionFinding};
use crate::class_table::ClassTable;
use crate::domain::Describe;
use crate::engine::{abstract_gc, AnalysisResult};
use crate::predicate::StateVerdict;

pub const SCHEMA_VERSION: u32 = 1;

pub fn export_json(
    ct: &ClassTable,
    result: &AnalysisResult,
    names: &NodeNames,
    verdicts: &[StateVerdict],
    apis: &[ApiUse],
    heat: &HeatMap,
    findings: &[PermissionFinding],
) -> Json {
    let order = names.order();
    let nodes: Vec<Json> = order
        .iter()
        .map(|&i| {
            let n = &result.graph.nodes[i];
            let store = n.store.as_deref().unwrap_or(&result.store);
            let site = n.config.code.stmt_id();
            json!({
                "id": names.ids[i],
                "key": names.keys[i],
                "head": head_text(ct, &n.config.code),
                "method": n.config.code.method().map(|m| ct.method(m).qualified.clone()),
                "pc": site.map(|s| s.pc),
                "fp": n.config.fp.describe(ct),
                "ka": n.config.ka.describe(ct),
                "root": n.root,
                "truncated": n.truncated,
                "visits": n.visits,
                "store": abstract_gc(&n.config, store).to_json(ct),
                "events": n.events.iter().map(|e| e.to_json(ct)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let mut edges: Vec<(&str, &str, &str)> = result
        .graph
        .edges
        .iter()
        .map(|e| (names.ids[e.from].as_str(), names.ids[e.to].as_str(), e.rule.as_str()))
        .collect();
    edges.sort();
    edges.dedup();
    let verdicts: Vec<Json> = order
        .iter()
        .filter(|&&i| verdicts[i].color.is_some())
        .map(|&i| {
            let v = &verdicts[i];
            json!({
                "node": names.ids[i],
                "color": v.color,
                "rule": v.matched_rule,
                "truncated": v.truncated,
            })
        })
        .collect();
    json!({
        "schema": SCHEMA_VERSION,
        "options": result.options,
        "entries": result.entries,
        "passes": result.passes,
        "incomplete": result.incomplete(),
        "cutoff": result.graph.incomplete,
        "truncated": result.graph.truncated_count(),
        "nodes": nodes,
        "edges": edges.iter().map(|(f, t, r)| json!({ "from": f, "to": t, "rule": r })).collect::<Vec<_>>(),
        "verdicts": verdicts,
        "events": result.graph.events().iter().map(|e| e.to_json(ct)).collect::<Vec<_>>(),
        "api_dump": apis,
        "heat_map": heat.entries,
        "findings": findings,
    })
}
