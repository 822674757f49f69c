//! Per-statement analysis intensity.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::class_table::ClassTable;
use crate::engine::AnalysisResult;
use crate::syntax::Stmt;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeatEntry {
    pub method: String,
    pub index: u32,
    /// From the closest preceding `(line n)` in the body.
    pub line: Option<i64>,
    pub statement: String,
    /// Distinct states whose head is this statement.
    pub states: usize,
    /// Transitions into those states, counting repeats.
    pub visits: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct HeatMap {
    pub entries: Vec<HeatEntry>,
}

/// Counts for every statement of every method with a body, zero included.
pub fn heat_map(ct: &ClassTable, result: &AnalysisResult) -> HeatMap {
    let mut counts: BTreeMap<(crate::class_table::MethodId, u32), (usize, u64)> = BTreeMap::new();
    for n in &result.graph.nodes {
        if let Some(s) = n.config.code.stmt_id() {
            let c = counts.entry((s.method, s.pc)).or_default();
            c.0 += 1;
            c.1 += n.visits;
        }
    }
    let mut entries = Vec::new();
    for (id, info) in ct.methods() {
        let mut line = None;
        for (pc, stmt) in info.def.body.iter().enumerate() {
            if let Stmt::Line(n) = stmt {
                line = Some(*n);
            }
            let (states, visits) = counts.get(&(id, pc as u32)).copied().unwrap_or_default();
            entries.push(HeatEntry {
                method: info.qualified.clone(),
                index: pc as u32,
                line,
                statement: stmt.to_string(),
                states,
                visits,
            });
        }
    }
    entries.sort_by(|a, b| a.method.cmp(&b.method).then(a.index.cmp(&b.index)));
    HeatMap { entries }
}

impl HeatMap {
    pub fn get(&self, method: &str, index: u32) -> Option<&HeatEntry> {
        self.entries.iter().find(|e| e.method == method && e.index == index)
    }

    /// Tab-separated table with a header row.
    pub fn render(&self) -> String {
        let mut out = String::from("method\tindex\tline\tstates\tvisits\tstatement\n");
        for e in &self.entries {
            let line = e.line.map(|l| l.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.method, e.index, line, e.states, e.visits, e.statement
            );
        }
        out
    }
}
