mod common;

use common::{analyze, load, widened};
use oobc_core::class_table::ClassTable;
use oobc_core::engine::{AnalysisResult, Analyzer};
use oobc_core::predicate::*;
use oobc_core::syntax::Stmt;

const HTTP: &str = "org/apache/http/client/HttpClient/execute";
const AREA: &str = "org/ucomb/android/testinterface/RectanglePlus/getArea";

fn listing(name: &str) -> PredicateProgram {
    let path = format!("{}/tests/data/{name}.scm", env!("CARGO_MANIFEST_DIR"));
    parse_predicates(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn rule(matcher: Matcher, action: Action) -> Rule {
    Rule { matcher, action }
}

#[test]
fn uses_api_listing() {
    assert_eq!(
        listing("uses_api").rules,
        vec![rule(Matcher::UsesApi(HTTP.into()), Action::Color("red,colorscheme=set312".into()))]
    );
}

#[test]
fn uses_name_listing() {
    assert_eq!(
        listing("uses_name").rules,
        vec![rule(Matcher::UsesName(AREA.into()), Action::Color("red,colorscheme=set312".into()))]
    );
}

#[test]
fn cond_listing_keeps_clause_order() {
    assert_eq!(
        listing("cond").rules,
        vec![
            rule(Matcher::UsesApi(HTTP.into()), Action::Color("red,colorscheme=set312".into())),
            rule(Matcher::UsesName(AREA.into()), Action::Color("8,colorscheme=set312".into())),
        ]
    );
}

#[test]
fn truncate_listing() {
    let p = listing("truncate");
    assert_eq!(
        p.rules,
        vec![rule(Matcher::Truncate(HTTP.into()), Action::Truncate("12,colorscheme=set312".into()))]
    );
    assert!(p.has_truncation());
}

fn matching(ct: &ClassTable, r: &AnalysisResult, m: &Matcher) -> Vec<usize> {
    r.graph
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| StateView { ct, config: &n.config, events: &n.events }.matches(m))
        .map(|(i, _)| i)
        .collect()
}

fn head_stmt<'a>(ct: &'a ClassTable, r: &AnalysisResult, i: usize) -> Option<&'a Stmt> {
    let s = r.graph.nodes[i].config.code.stmt_id()?;
    ct.method(s.method).def.body.get(s.pc as usize)
}

#[test]
fn uses_api_matches_the_direct_call_site_only() {
    let ct = load("direct_http");
    let r = analyze(&ct, widened(0));
    let hits = matching(&ct, &r, &Matcher::UsesApi(HTTP.into()));
    assert_eq!(hits.len(), 1);
    assert!(head_stmt(&ct, &r, hits[0]).unwrap().to_string().contains(HTTP));
}

#[test]
fn nop_uses_nothing() {
    let ct = load("straight");
    let r = analyze(&ct, widened(0));
    let nop = (0..r.graph.len()).find(|&i| head_stmt(&ct, &r, i) == Some(&Stmt::Nop)).unwrap();
    let n = &r.graph.nodes[nop];
    let v = StateView { ct: &ct, config: &n.config, events: &n.events };
    assert!(!v.uses_api(HTTP));
    assert!(!v.uses_name(AREA));
}

#[test]
fn uses_api_sees_through_reflection() {
    let ct = load("reflect_http");
    let r = analyze(&ct, widened(0));
    let hits = matching(&ct, &r, &Matcher::UsesApi(HTTP.into()));
    assert_eq!(hits.len(), 1);
    assert!(head_stmt(&ct, &r, hits[0]).unwrap().to_string().contains("java/lang/reflect/Method/invoke"));
}

#[test]
fn uses_name_matches_body_and_call_site() {
    let ct = load("interface");
    let r = analyze(&ct, widened(0));
    let hits = matching(&ct, &r, &Matcher::UsesName(AREA.into()));
    let area = ct.method_by_qualified(AREA).unwrap();
    let inside = hits.iter().filter(|&&i| r.graph.nodes[i].config.code.method() == Some(area)).count();
    let body_len = ct.method(area).def.body.len();
    assert_eq!(inside, body_len);
    assert_eq!(hits.len(), body_len + 1);
    assert!(matching(&ct, &r, &Matcher::UsesName("org/ucomb/android/testinterface/Main/onCreate/x".into())).is_empty());
}

#[test]
fn first_matching_rule_decides() {
    let ct = load("interface");
    let r = analyze(&ct, widened(0));
    let p = listing("cond");
    let colors: Vec<Option<String>> = r
        .graph
        .nodes
        .iter()
        .map(|n| p.evaluate(&StateView { ct: &ct, config: &n.config, events: &n.events }).color)
        .collect();
    assert!(colors.iter().any(|c| c.as_deref() == Some("8,colorscheme=set312")));
    assert!(colors.iter().all(|c| c.as_deref() != Some("red,colorscheme=set312")));
    let empty = PredicateProgram::default();
    let n = &r.graph.nodes[0];
    assert_eq!(empty.evaluate(&StateView { ct: &ct, config: &n.config, events: &n.events }), StateVerdict::default());
}

#[test]
fn truncation_prunes_below_the_match() {
    let ct = load("direct_http");
    let full = analyze(&ct, widened(0));
    let p = listing("truncate");
    let cut = Analyzer::new(&ct, widened(0)).with_predicates(&p).run().unwrap();
    assert!(cut.graph.len() < full.graph.len());
    assert_eq!(cut.graph.truncated_count(), 1);
    assert!(cut.incomplete());
    let t = cut.graph.nodes.iter().position(|n| n.truncated).unwrap();
    assert_eq!(cut.graph.successors(t).count(), 0);
}

#[test]
fn declarative_rules_parse() {
    let p = parse_predicates(
        r#"(rule (and (uses-API? "a/B/c") (not (uses-name? "x/Y/z"))) (color "blue"))
           (rule (truncate? "a/B/d") (truncate "gray"))"#,
    )
    .unwrap();
    assert_eq!(p.rules.len(), 2);
    assert!(matches!(p.rules[1].action, Action::Truncate(_)));
}

#[test]
fn unknown_primitive_is_rejected() {
    let err = parse_predicates(r#"(lambda (state) (if (calls? state "a/B/c") "red" #f))"#).unwrap_err();
    assert!(matches!(err, oobc_core::error::PredicateError::UnknownPrimitive { .. }), "{err}");
}
