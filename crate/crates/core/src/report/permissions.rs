//! Permission map loading and the over/under-privilege report.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use super::ApiUse;
use crate::error::ReportError;

/// API qualified name to the permissions its use requires.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PermissionMap {
    pub map: BTreeMap<String, BTreeSet<String>>,
}

impl PermissionMap {
    /// One `api<TAB>PERMISSION` pair per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, ReportError> {
        let mut map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let malformed = |message: &str| ReportError::Malformed {
                line: i + 1,
                message: message.to_string(),
            };
            let (api, perm) = line
                .split_once('\t')
                .ok_or_else(|| malformed("expected `api<TAB>PERMISSION`"))?;
            let (api, perm) = (api.trim(), perm.trim());
            if api.is_empty() || perm.is_empty() || perm.contains('\t') {
                return Err(malformed("expected `api<TAB>PERMISSION`"));
            }
            map.entry(api.to_string()).or_default().insert(perm.to_string());
        }
        Ok(PermissionMap { map })
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn permissions_of(&self, api: &str) -> impl Iterator<Item = &String> {
        self.map.get(api).into_iter().flatten()
    }
}

/// Declared permissions, one per line; blank lines and `#` lines skipped.
pub fn parse_manifest(text: &str) -> Vec<String> {
    let set: BTreeSet<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();
    set.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingKind {
    UnusedPermission,
    MissingPermission,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub api: String,
    pub node: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PermissionFinding {
    pub kind: FindingKind,
    pub permission: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Compares the permissions the reached APIs need against `declared`.
pub fn permission_report(apis: &[ApiUse], declared: &[String], pm: &PermissionMap) -> Vec<PermissionFinding> {
    let mut used: BTreeMap<&str, Witness> = BTreeMap::new();
    for a in apis {
        for p in pm.permissions_of(&a.api) {
            used.entry(p).or_insert_with(|| Witness {
                api: a.api.clone(),
                node: a.witnesses.first().cloned().unwrap_or_default(),
            });
        }
    }
    let declared: BTreeSet<&str> = declared.iter().map(String::as_str).collect();
    let mut out: Vec<PermissionFinding> = declared
        .iter()
        .filter(|p| !used.contains_key(*p))
        .map(|p| PermissionFinding {
            kind: FindingKind::UnusedPermission,
            permission: p.to_string(),
            witness: None,
        })
        .collect();
    out.extend(
        used.into_iter()
            .filter(|(p, _)| !declared.contains(p))
            .map(|(p, w)| PermissionFinding {
                kind: FindingKind::MissingPermission,
                permission: p.to_string(),
                witness: Some(w),
            }),
    );
    out
}

pub fn render(findings: &[PermissionFinding]) -> String {
    findings
        .iter()
        .map(|f| match (&f.kind, &f.witness) {
            (FindingKind::UnusedPermission, _) => format!("unused-permission\t{}\n", f.permission),
            (FindingKind::MissingPermission, Some(w)) => {
                format!("missing-permission\t{}\t{}\t{}\n", f.permission, w.api, w.node)
            }
            (FindingKind::MissingPermission, None) => format!("missing-permission\t{}\n", f.permission),
        })
        .collect()
}
