//! Outputs built from a finished analysis: permission findings, API dump,
//! heat map, DOT graph and the JSON export.

pub mod api;
pub mod dot;
pub mod heat;
pub mod json;
pub mod permissions;

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::class_table::ClassTable;
use crate::domain::Describe;
use crate::engine::{AnalysisResult, Node};
use crate::error::ReportError;
use crate::predicate::{PredicateProgram, StateView, StateVerdict};

pub use api::{api_dump, ApiUse};
pub use heat::{heat_map, HeatEntry, HeatMap};
pub use permissions::{
    parse_manifest, permission_report, FindingKind, PermissionFinding, PermissionMap, Witness,
};

/// Canonical text of a state: its configuration, plus a digest of its own
/// store when states do not share one.
pub fn state_key(ct: &ClassTable, n: &Node) -> String {
    let cfg = n.config.describe(ct);
    match &n.store {
        None => cfg,
        Some(s) => {
            let digest = Sha256::digest(s.to_json(ct).to_string().as_bytes());
            format!("{cfg} @ {}", hex(&digest[..8]))
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Stable node identifier derived from the state key.
pub fn node_id(key: &str) -> String {
    format!("s{}", hex(&Sha256::digest(key.as_bytes())[..8]))
}

/// Per-node keys and ids, indexed like `result.graph.nodes`.
pub struct NodeNames {
    pub keys: Vec<String>,
    pub ids: Vec<String>,
}

impl NodeNames {
    pub fn new(ct: &ClassTable, result: &AnalysisResult) -> Self {
        let keys: Vec<String> = result.graph.nodes.iter().map(|n| state_key(ct, n)).collect();
        let ids = keys.iter().map(|k| node_id(k)).collect();
        NodeNames { keys, ids }
    }

    /// Node indices ordered by id.
    pub fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.ids.len()).collect();
        idx.sort_by(|&a, &b| self.ids[a].cmp(&self.ids[b]).then(self.keys[a].cmp(&self.keys[b])));
        idx
    }
}

/// The verdict of every node under `predicates`.
pub fn verdicts(ct: &ClassTable, result: &AnalysisResult, predicates: Option<&PredicateProgram>) -> Vec<StateVerdict> {
    result
        .graph
        .nodes
        .iter()
        .map(|n| match predicates {
            None => StateVerdict::default(),
            Some(p) => {
                let mut v = p.evaluate(&StateView {
                    ct,
                    config: &n.config,
                    events: &n.events,
                });
                v.truncated = n.truncated;
                v
            }
        })
        .collect()
}

/// Inputs for the permission section of a report.
#[derive(Clone, Debug, Default)]
pub struct PermissionInputs {
    pub map: PermissionMap,
    pub declared: Vec<String>,
}

/// Every output of one analysis, rendered.
#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub dot: String,
    pub json: String,
    pub api_dump: String,
    pub heat_map: String,
    pub permissions: Option<String>,
}

impl AnalysisReport {
    pub fn build(
        ct: &ClassTable,
        result: &AnalysisResult,
        predicates: Option<&PredicateProgram>,
        perms: Option<&PermissionInputs>,
    ) -> Self {
        let names = NodeNames::new(ct, result);
        let verdicts = verdicts(ct, result, predicates);
        let apis = api_dump(ct, result, &names);
        let heat = heat_map(ct, result);
        let findings = perms.map(|p| permission_report(&apis, &p.declared, &p.map));
        let dot = dot::export_dot(ct, result, &names, &verdicts);
        let json = json::export_json(
            ct,
            result,
            &names,
            &verdicts,
            &apis,
            &heat,
            findings.as_deref().unwrap_or(&[]),
        );
        AnalysisReport {
            dot,
            json: format!("{}\n", serde_json::to_string_pretty(&json).expect("serializable")),
            api_dump: api::render(&apis),
            heat_map: heat.render(),
            permissions: findings.map(|f| permissions::render(&f)),
        }
    }

    /// Writes every output into `dir`, creating it if needed.
    pub fn write_dir(&self, dir: &Path) -> Result<(), ReportError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("states.dot"), &self.dot)?;
        std::fs::write(dir.join("analysis.json"), &self.json)?;
        std::fs::write(dir.join("api-dump.txt"), &self.api_dump)?;
        std::fs::write(dir.join("heat-map.txt"), &self.heat_map)?;
        if let Some(p) = &self.permissions {
            std::fs::write(dir.join("permissions.txt"), p)?;
        }
        Ok(())
    }
}
