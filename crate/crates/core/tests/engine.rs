mod common;

use common::{analyze, load, load_src, per_state, widened};
use oobc_core::class_table::ClassTable;
use oobc_core::domain::{
    AbstractValue, Addr, AllocSite, Config, Context, FramePointer, KontAddr, Lattice, ObjectPointer,
    StmtId, Store,
};
use oobc_core::engine::*;
use oobc_core::oracle::{run_entries, CAddr};

fn entries(ct: &ClassTable) -> Vec<EntryPoint> {
    find_entry_points(ct, &default_lifecycle(), &[]).unwrap()
}

#[test]
fn lifecycle_callbacks_are_entries() {
    let ct = load("multi_entry");
    let names: Vec<String> = entries(&ct).iter().map(EntryPoint::qualified).collect();
    assert_eq!(names, ["com/example/Tracker/onCreate", "com/example/Tracker/onClick"]);
}

#[test]
fn explicit_entry_is_used() {
    let ct = load_src(SPIN);
    let found = find_entry_points(&ct, &default_lifecycle(), &["T/spin".to_string()]).unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].reason, DiscoveryReason::Explicit);
}

#[test]
fn no_entries_gives_an_empty_graph() {
    let ct = load_src(SPIN);
    let r = analyze(&ct, widened(0));
    assert!(r.entries.is_empty());
    assert!(r.graph.is_empty());
    assert!(!r.incomplete());
}

#[test]
fn straight_line_method_is_a_chain() {
    let ct = load_src(
        "(public class T extends java/lang/Object ()
          ((method public static main () void (throws) (limit 2)
             (assign a 1) (assign b 2) (nop) (assign c (add a b)) (return void))))",
    );
    let opts = AnalysisOptions { entries: vec!["T/main".into()], ..widened(0) };
    let r = analyze(&ct, opts);
    assert_eq!((r.graph.len(), r.graph.edges.len()), (6, 5));
    assert!(!r.incomplete());
}

const SPIN: &str = "(public class T extends java/lang/Object ()
  ((method public static spin () void (throws) (limit 1)
     (assign i 0)
     (label head)
     (assign i (add i 1))
     (if (lt i 3) (goto head))
     (return void))))";

fn spin(opts: AnalysisOptions) -> (ClassTable, AnalysisResult) {
    let ct = load_src(SPIN);
    let r = analyze(&ct, AnalysisOptions { entries: vec!["T/spin".into()], ..opts });
    (ct, r)
}

#[test]
fn widened_loop_has_one_node_per_statement() {
    // pc 0..4 plus halt; the back edge from the `if` returns to the label.
    let (_, r) = spin(widened(0));
    assert_eq!(r.graph.len(), 6);
    assert_eq!(r.graph.edges.len(), 6);
    assert_eq!(r.store.get(&Addr::Reg(FramePointer::Root, "i".into())), &AbstractValue::top_int());
}

#[test]
fn final_store_covers_every_state() {
    let (_, r) = spin(per_state(0, false));
    assert!(!r.incomplete());
    for n in &r.graph.nodes {
        assert!(n.store.as_ref().unwrap().leq(&r.store));
    }
}

#[test]
fn cutoff_stops_after_one_transition() {
    let (_, r) = spin(AnalysisOptions { max_steps: Some(1), ..widened(0) });
    assert_eq!(r.graph.edges.len(), 1);
    assert!(r.incomplete());
}

const TWO_INDEPENDENT: &str = "(public class T extends java/lang/Object ()
  ((method public static a () void (throws) (limit 1) (assign x 1) (return void))
   (method public static b () void (throws) (limit 1) (assign y 2) (return void))))";

#[test]
fn independent_entries_join_and_settle_in_two_passes() {
    let ct = load_src(TWO_INDEPENDENT);
    let an = Analyzer::new(&ct, widened(0));
    let a = explicit_entry(&ct, "T/a").unwrap();
    let b = explicit_entry(&ct, "T/b").unwrap();
    let both = an.analyze(vec![a.clone(), b.clone()]);
    let sa = an.analyze(vec![a]).store;
    let sb = an.analyze(vec![b]).store;
    assert_eq!(both.store, sa.join(&sb));
    assert_eq!(both.passes, 2);
}

#[test]
fn single_entry_matches_plain_exploration() {
    let ct = load("loop");
    for opts in [widened(0), per_state(1, false)] {
        let an = Analyzer::new(&ct, opts);
        let e = entries(&ct).remove(0);
        let (g, s) = an.explore(&e, &Store::new());
        let r = an.analyze(vec![e]);
        assert_eq!(r.store, s);
        assert_eq!(r.graph.len(), g.len());
    }
}

#[test]
fn second_entry_reads_what_the_first_wrote() {
    let ct = load("multi_entry");
    let an = Analyzer::new(&ct, widened(0));
    let es = entries(&ct);
    let (create, click) = (es[0].clone(), es[1].clone());
    // The value the read sees when onCreate runs first, concretely.
    let (traces, _) = run_entries(&ct, &[create.clone(), click.clone()], 500);
    let read = traces[1].states.last().unwrap().store.iter().find_map(|(a, v)| match a {
        CAddr::Reg(_, r) if r == "x" => Some(v.clone()),
        _ => None,
    });
    assert_eq!(read, Some(oobc_core::oracle::CValue::Int(42)));
    let x = Addr::Reg(FramePointer::Root, "x".into());
    let forward = an.analyze(vec![create.clone(), click.clone()]);
    let backward = an.analyze(vec![click, create]);
    assert!(AbstractValue::int(42).leq(forward.store.get(&x)));
    assert_eq!(forward.store, backward.store);
}

#[test]
fn gc_drops_an_unreachable_field() {
    let site = StmtId { method: oobc_core::class_table::MethodId(0), pc: 0 };
    let dead = ObjectPointer { site: AllocSite::Stmt(site), ctx: Context::empty() };
    let cfg = Config {
        code: oobc_core::domain::Code::at(site.method, 0),
        fp: FramePointer::Root,
        ka: KontAddr::Halt,
    };
    let live = Store::new()
        .with(Addr::Reg(FramePointer::Root, "x".into()), AbstractValue::int(1))
        .with(Addr::Kont(KontAddr::Halt), AbstractValue::kont(oobc_core::domain::Kont::Halt));
    let s = live.clone().with(Addr::Field(dead, "f".into()), AbstractValue::int(2));
    assert_eq!(abstract_gc(&cfg, &s), live);
}

#[test]
fn gc_never_grows_per_state_graphs() {
    let ct = load("objects");
    let plain = analyze(&ct, per_state(0, false));
    let collected = analyze(&ct, per_state(0, true));
    assert!(collected.graph.len() <= plain.graph.len());
}

#[test]
fn worker_count_does_not_change_the_graph() {
    for name in ["forname_branch", "objects", "multi_entry"] {
        let ct = load(name);
        for base in [widened(1), per_state(1, true)] {
            let one = analyze(&ct, AnalysisOptions { workers: 1, ..base.clone() });
            let many = analyze(&ct, AnalysisOptions { workers: 4, ..base });
            assert_eq!(one.store, many.store, "{name}");
            let cfgs = |r: &AnalysisResult| r.graph.nodes.iter().map(|n| n.config.clone()).collect::<Vec<_>>();
            assert_eq!(cfgs(&one), cfgs(&many), "{name}");
            assert_eq!(one.graph.edges, many.graph.edges, "{name}");
        }
    }
}

#[test]
fn widening_never_adds_configurations() {
    for name in common::corpus_names() {
        let ct = load(&name);
        let w = analyze(&ct, widened(1));
        let p = analyze(&ct, per_state(1, false));
        assert!(w.graph.len() <= p.graph.len(), "{name}");
        assert!(p.store.leq(&w.store), "{name}");
    }
}

#[test]
fn object_pointers_are_bounded_by_sites_and_contexts() {
    for name in common::corpus_names() {
        let ct = load(&name);
        let body = || ct.methods().flat_map(|(_, m)| m.def.body.iter());
        let sites = body().filter(|s| matches!(s, oobc_core::syntax::Stmt::Assign(_, oobc_core::syntax::Rhs::New(_)) | oobc_core::syntax::Stmt::ConstString(..)) || s.invoke().is_some()).count()
            + ct.classes().count();
        let calls = body().filter(|s| s.invoke().is_some()).count();
        for k in 0..=2u32 {
            let r = analyze(&ct, widened(k as usize));
            let mut ptrs = std::collections::BTreeSet::new();
            for (a, v) in r.store.iter() {
                if let Addr::Field(p, _) = a {
                    ptrs.insert(p.clone());
                }
                ptrs.extend(v.objects().iter().map(|o| o.ptr.clone()));
            }
            let bound = sites * (0..=k).map(|j| calls.pow(j)).sum::<usize>();
            assert!(ptrs.len() <= bound, "{name} k={k}: {} > {bound}", ptrs.len());
            assert!(ptrs.iter().all(|p| p.ctx.0.len() <= k as usize));
        }
    }
}
