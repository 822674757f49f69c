//! Entry-point discovery.

use serde::Serialize;

use crate::class_table::{ClassTable, MethodId};
use crate::error::ConfigError;

pub const DEFAULT_LIFECYCLE: &[&str] = &[
    "onCreate",
    "onStart",
    "onResume",
    "onPause",
    "onStop",
    "onDestroy",
    "onClick",
    "onReceive",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscoveryReason {
    Lifecycle,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct EntryPoint {
    #[serde(skip)]
    pub method: MethodId,
    pub class: String,
    pub name: String,
    pub reason: DiscoveryReason,
}

impl EntryPoint {
    pub fn qualified(&self) -> String {
        format!("{}/{}", self.class, self.name)
    }
}

/// Looks up an explicitly requested `CLASS/METHOD` entry.
pub fn explicit_entry(ct: &ClassTable, spec: &str) -> Result<EntryPoint, ConfigError> {
    let (class, method) = spec
        .rsplit_once('/')
        .filter(|(c, m)| !c.is_empty() && !m.is_empty())
        .ok_or_else(|| ConfigError::BadEntrySyntax(spec.to_string()))?;
    let m = ct
        .resolve_by_name(class, method)
        .map_err(|_| ConfigError::EntryNotFound(spec.to_string()))?;
    Ok(EntryPoint {
        method: m,
        class: class.to_string(),
        name: method.to_string(),
        reason: DiscoveryReason::Explicit,
    })
}

/// Public lifecycle methods of non-library classes plus the explicit
/// entries, in class then method order.
pub fn find_entry_points(
    ct: &ClassTable,
    lifecycle: &[String],
    explicit: &[String],
) -> Result<Vec<EntryPoint>, ConfigError> {
    let mut out: Vec<EntryPoint> = Vec::new();
    for (mid, info) in ct.methods() {
        let class = ct.class(info.class);
        if class.stub {
            continue;
        }
        if info.def.is_public() && lifecycle.contains(&info.def.name) {
            out.push(EntryPoint {
                method: mid,
                class: class.def.name.clone(),
                name: info.def.name.clone(),
                reason: DiscoveryReason::Lifecycle,
            });
        }
    }
    for spec in explicit {
        let e = explicit_entry(ct, spec)?;
        if !out.iter().any(|o| o.method == e.method) {
            out.push(e);
        }
    }
    out.sort_by_key(|e| e.method);
    Ok(out)
}

pub fn default_lifecycle() -> Vec<String> {
    DEFAULT_LIFECYCLE.iter().map(|s| s.to_string()).collect()
}
