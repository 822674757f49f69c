//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use proptest::prelude::*;

use oobc_core::class_table::{ClassId, ClassTable, MethodId};
use oobc_core::domain::{
    AbstractValue, Addr, AllocSite, Atom, Code, Context, Flat, FramePointer, Kont, KontAddr,
    ObjectPointer, ObjectValue, StmtId, Store,
};
use oobc_core::engine::{analyze_all_entries, AnalysisOptions, AnalysisResult};
use oobc_core::frontend::parse_program;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Corpus program names without extension, sorted.
pub fn corpus_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "oobc").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

pub fn corpus_text(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(format!("{name}.oobc"))).expect("corpus program")
}

pub fn load(name: &str) -> ClassTable {
    load_src(&corpus_text(name))
}

pub fn load_src(text: &str) -> ClassTable {
    ClassTable::new(&parse_program(text).expect("parses")).expect("well-formed")
}

pub fn analyze(ct: &ClassTable, options: AnalysisOptions) -> AnalysisResult {
    analyze_all_entries(ct, options).expect("entries resolve")
}

pub fn widened(k: usize) -> AnalysisOptions {
    AnalysisOptions { k, ..Default::default() }
}

pub fn per_state(k: usize, gc: bool) -> AnalysisOptions {
    AnalysisOptions {
        k,
        widen: false,
        gc,
        ..Default::default()
    }
}

// Generators over a deliberately small universe so joins collide often.

fn flat<T: std::fmt::Debug + Clone + 'static>(s: impl Strategy<Value = T> + 'static) -> BoxedStrategy<Flat<T>> {
    prop_oneof![
        1 => Just(Flat::Bot),
        6 => s.prop_map(Flat::Exactly),
        1 => Just(Flat::Top),
    ]
    .boxed()
}

fn stmt_id() -> impl Strategy<Value = StmtId> {
    (0u32..2, 0u32..3).prop_map(|(m, pc)| StmtId { method: MethodId(m), pc })
}

fn context() -> impl Strategy<Value = Context> {
    prop::collection::vec(stmt_id(), 0..2).prop_map(Context)
}

fn frame_pointer() -> impl Strategy<Value = FramePointer> {
    prop_oneof![
        Just(FramePointer::Root),
        (0u32..2, context()).prop_map(|(m, ctx)| FramePointer::Frame { method: MethodId(m), ctx }),
    ]
}

fn object_pointer() -> impl Strategy<Value = ObjectPointer> {
    (stmt_id(), context()).prop_map(|(s, ctx)| ObjectPointer { site: AllocSite::Stmt(s), ctx })
}

fn kont_addr() -> impl Strategy<Value = KontAddr> {
    prop_oneof![
        Just(KontAddr::Halt),
        (stmt_id(), context()).prop_map(|(site, ctx)| KontAddr::Call { site, ctx }),
    ]
}

pub fn atom() -> impl Strategy<Value = Atom> {
    prop_oneof![
        (object_pointer(), 0u32..3).prop_map(|(ptr, c)| Atom::Object(ObjectValue { ptr, class: ClassId(c) })),
        flat(prop::sample::select(vec!["a".to_string(), "b".into(), "c".into()])).prop_map(Atom::Str),
        flat(-3i64..3).prop_map(Atom::Int),
        flat(any::<bool>()).prop_map(Atom::Bool),
        Just(Atom::Null),
        Just(Atom::Void),
        Just(Atom::Kont(Kont::Halt)),
        (frame_pointer(), 0u32..2, kont_addr()).prop_map(|(fp, m, next)| Atom::Kont(Kont::Fun {
            fp,
            resume: Code::at(MethodId(m), 1),
            next,
        })),
        (0u32..3).prop_map(|m| Atom::Method(MethodId(m))),
    ]
}

pub fn value() -> impl Strategy<Value = AbstractValue> {
    prop::collection::vec(atom(), 0..5).prop_map(AbstractValue::from_atoms)
}

pub fn addr() -> impl Strategy<Value = Addr> {
    prop_oneof![
        (frame_pointer(), prop::sample::select(vec!["x", "y", "ret"]))
            .prop_map(|(fp, r)| Addr::Reg(fp, r.to_string())),
        (object_pointer(), prop::sample::select(vec!["f", "g"]))
            .prop_map(|(op, f)| Addr::Field(op, f.to_string())),
        kont_addr().prop_map(Addr::Kont),
    ]
}

pub fn store() -> impl Strategy<Value = Store> {
    prop::collection::vec((addr(), value()), 0..6).prop_map(|bs| bs.into_iter().collect())
}

/// The published export schema.
pub fn export_schema() -> serde_json::Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schema/export-v1.json");
    serde_json::from_str(&std::fs::read_to_string(path).expect("schema file")).expect("schema parses")
}

fn type_matches(t: &str, v: &serde_json::Value) -> bool {
    match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "integer" => v.is_i64() || v.is_u64(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        _ => false,
    }
}

/// Checks `v` against the subset of JSON Schema the export schema uses:
/// type, required, properties, items, prefixItems, enum and const.
pub fn validate(schema: &serde_json::Value, v: &serde_json::Value, path: &str) -> Result<(), String> {
    if let Some(t) = schema.get("type") {
        let ok = match t {
            serde_json::Value::String(s) => type_matches(s, v),
            serde_json::Value::Array(ts) => ts.iter().any(|t| type_matches(t.as_str().unwrap_or(""), v)),
            _ => true,
        };
        if !ok {
            return Err(format!("{path}: expected {t}, found {v}"));
        }
    }
    if let Some(c) = schema.get("const") {
        if c != v {
            return Err(format!("{path}: expected {c}"));
        }
    }
    if let Some(opts) = schema.get("enum").and_then(|e| e.as_array()) {
        if !opts.contains(v) {
            return Err(format!("{path}: {v} not in {opts:?}"));
        }
    }
    if let (Some(req), Some(obj)) = (schema.get("required").and_then(|r| r.as_array()), v.as_object()) {
        for r in req {
            let key = r.as_str().unwrap_or("");
            if !obj.contains_key(key) {
                return Err(format!("{path}: missing `{key}`"));
            }
        }
    }
    if let (Some(props), Some(obj)) = (schema.get("properties").and_then(|p| p.as_object()), v.as_object()) {
        for (k, sub) in props {
            if let Some(x) = obj.get(k) {
                validate(sub, x, &format!("{path}.{k}"))?;
            }
        }
    }
    if let Some(arr) = v.as_array() {
        let prefix = schema.get("prefixItems").and_then(|p| p.as_array());
        for (i, x) in arr.iter().enumerate() {
            let sub = prefix.and_then(|p| p.get(i)).or_else(|| schema.get("items"));
            if let Some(sub) = sub {
                validate(sub, x, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}
