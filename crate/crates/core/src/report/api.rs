//! Every library API the analysis reached, directly or through reflection.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::NodeNames;
use crate::class_table::ClassTable;
use crate::domain::StmtId;
use crate::engine::AnalysisResult;
use crate::machine::AnalysisEvent;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ApiUse {
    pub api: String,
    pub call_sites: usize,
    /// Ids of states that make the call, sorted.
    pub witnesses: Vec<String>,
}

pub fn api_dump(ct: &ClassTable, result: &AnalysisResult, names: &NodeNames) -> Vec<ApiUse> {
    let mut acc: BTreeMap<String, (BTreeSet<StmtId>, BTreeSet<String>)> = BTreeMap::new();
    for (i, n) in result.graph.nodes.iter().enumerate() {
        for e in &n.events {
            if let AnalysisEvent::ApiCall { api, site, .. } = e {
                let entry = acc.entry(ct.method(*api).qualified.clone()).or_default();
                entry.0.insert(*site);
                entry.1.insert(names.ids[i].clone());
            }
        }
    }
    acc.into_iter()
        .map(|(api, (sites, wit))| ApiUse {
            api,
            call_sites: sites.len(),
            witnesses: wit.into_iter().collect(),
        })
        .collect()
}

/// One `api<TAB>call-sites` line per API.
pub fn render(apis: &[ApiUse]) -> String {
    apis.iter().map(|a| format!("{}\t{}\n", a.api, a.call_sites)).collect()
}
