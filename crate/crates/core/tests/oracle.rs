mod common;

use std::sync::Arc;

use common::{analyze, corpus_names, load, load_src, widened};
use oobc_core::domain::{AbstractState, AbstractValue, Addr, Code, Lattice, Store};
use oobc_core::engine::{explicit_entry, find_entry_points, default_lifecycle};
use oobc_core::oracle::*;
use oobc_core::syntax::RET;

const RETURN_FIVE: &str = "(public class T extends java/lang/Object ()
  ((method public static main () int (throws) (limit 1)
     (assign x 5)
     (return x))))";

#[test]
fn assign_then_return_takes_three_states() {
    let ct = load_src(RETURN_FIVE);
    let (trace, _) = run_concrete(&ct, &explicit_entry(&ct, "T/main").unwrap(), 100);
    assert_eq!(trace.outcome, Outcome::Halted);
    assert_eq!(trace.states.len(), 3);
    let last = trace.states.last().unwrap();
    assert!(last.code.is_halt());
    assert_eq!(last.store.get(&CAddr::Reg(last.fp, RET.into())), Some(&CValue::Int(5)));
}

#[test]
fn reflective_snippet_enters_the_stub() {
    let ct = load("reflect_env");
    let (trace, _) = run_concrete(&ct, &explicit_entry(&ct, "com/example/ReflectEnv/onCreate").unwrap(), 100);
    assert_eq!(trace.outcome, Outcome::Halted);
    // const-string, forName, move-result, const-string, getMethod, move-result,
    // then invoke lands in the callee.
    let target = ct
        .resolve_by_name("android/os/Environment", "getExternalStorageDirectory")
        .unwrap();
    assert_eq!(trace.states[7].code, Code::at(target, 0));
    assert!(trace.states[..7].iter().all(|s| s.code.method() != Some(target)));
}

#[test]
fn fuel_exhaustion_is_flagged() {
    let ct = load("loop");
    let entry = &find_entry_points(&ct, &default_lifecycle(), &[]).unwrap()[0];
    let (trace, _) = run_concrete(&ct, entry, 1);
    assert_eq!(trace.outcome, Outcome::OutOfFuel);
    assert_eq!(trace.states.len(), 2);
}

#[test]
fn non_boolean_guard_is_a_runtime_error() {
    let ct = load_src(
        "(public class T extends java/lang/Object ()
          ((method public static main () void (throws) (limit 1)
             (assign x 3)
             (if x (goto l))
             (label l)
             (return void))))",
    );
    let (trace, _) = run_concrete(&ct, &explicit_entry(&ct, "T/main").unwrap(), 100);
    assert!(matches!(trace.outcome, Outcome::Error(_)));
}

#[test]
fn runs_are_deterministic() {
    for name in corpus_names() {
        let ct = load(&name);
        let entries = find_entry_points(&ct, &default_lifecycle(), &[]).unwrap();
        let (a, _) = run_entries(&ct, &entries, 500);
        let (b, _) = run_entries(&ct, &entries, 500);
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn abstraction_of_a_state_abstracts_it() {
    let ct = load("straight");
    let entry = &find_entry_points(&ct, &default_lifecycle(), &[]).unwrap()[0];
    let (trace, prov) = run_concrete(&ct, entry, 100);
    for k in 0..3 {
        let alpha = Abstraction { prov: &prov, k };
        for s in &trace.states {
            let abs = AbstractState {
                config: alpha.config(s),
                store: Arc::new(alpha.store(&s.store)),
            };
            assert!(abstracts(&abs, s, &alpha));
        }
    }
}

#[test]
fn top_covers_a_constant_and_missing_bindings_do_not() {
    let ct = load_src(RETURN_FIVE);
    let (trace, prov) = run_concrete(&ct, &explicit_entry(&ct, "T/main").unwrap(), 100);
    let alpha = Abstraction { prov: &prov, k: 0 };
    let s = &trace.states[1];
    let x = Addr::Reg(alpha.fp(s.fp), "x".into());
    let mut store = alpha.store(&s.store);
    assert!(AbstractValue::int(5).leq(store.get(&x)));
    store.bind(x.clone(), &AbstractValue::top_int());
    let abs = AbstractState { config: alpha.config(s), store: Arc::new(store.clone()) };
    assert!(abstracts(&abs, s, &alpha));
    let without: Store = store.iter().filter(|(a, _)| **a != x).map(|(a, v)| (a.clone(), v.clone())).collect();
    let abs = AbstractState { config: alpha.config(s), store: Arc::new(without) };
    assert!(!abstracts(&abs, s, &alpha));
}

#[test]
fn checker_notices_a_missing_binding() {
    let ct = load("fields");
    let mut result = analyze(&ct, widened(0));
    let (traces, prov) = run_entries(&ct, &result.entries, 500);
    assert!(check_soundness(&ct, &result, &traces, &prov).is_sound());
    let victim = result.store.iter().find(|(a, _)| matches!(a, Addr::Field(..))).map(|(a, _)| a.clone()).unwrap();
    result.store = result.store.iter().filter(|(a, _)| **a != victim).map(|(a, v)| (a.clone(), v.clone())).collect();
    let report = check_soundness(&ct, &result, &traces, &prov);
    assert!(!report.is_sound());
    assert!(report.failures[0].contains("store not covered"), "{}", report.failures[0]);
}

#[test]
fn trace_json_lists_every_state() {
    let ct = load_src(RETURN_FIVE);
    let (trace, _) = run_concrete(&ct, &explicit_entry(&ct, "T/main").unwrap(), 100);
    let j = trace.to_json(&ct);
    assert_eq!(j["states"].as_array().unwrap().len(), 3);
    assert_eq!(j["outcome"]["kind"], "halted");
    assert_eq!(j["states"][0]["statement"], "(assign x 5)");
}
