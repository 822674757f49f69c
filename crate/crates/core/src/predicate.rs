//! Analyst predicates: rules that color states or cut exploration off at
//! them.
//!
//! A predicate file holds one or more forms. Each form is either the
//! lambda surface syntax
//!
//! ```text
//! (lambda (state)
//!   (cond [(uses-API? state "a/b/C/m" st-attr) "red,colorscheme=set312"]
//!         [else #f]))
//! ```
//!
//! or a declarative rule `(rule MATCHER (color "c"))` / `(rule MATCHER (truncate "c"))`.
//! Matchers are `uses-API?`, `uses-name?`, `truncate?`, `and`, `or` and `not`.

use serde::Serialize;

use crate::class_table::ClassTable;
use crate::domain::{Code, Config, Synth};
use crate::error::PredicateError;
use crate::machine::AnalysisEvent;
use crate::sexp::{read_all, Pos, Sexp};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "arg", rename_all = "kebab-case")]
pub enum Matcher {
    UsesApi(String),
    UsesName(String),
    Truncate(String),
    And(Vec<Matcher>),
    Or(Vec<Matcher>),
    Not(Box<Matcher>),
    Always,
}

impl Matcher {
    fn mentions_truncate(&self) -> bool {
        match self {
            Matcher::Truncate(_) => true,
            Matcher::And(ms) | Matcher::Or(ms) => ms.iter().any(Matcher::mentions_truncate),
            Matcher::Not(m) => m.mentions_truncate(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "color", rename_all = "kebab-case")]
pub enum Action {
    Color(String),
    Truncate(String),
}

impl Action {
    pub fn color(&self) -> &str {
        match self {
            Action::Color(c) | Action::Truncate(c) => c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rule {
    pub matcher: Matcher,
    pub action: Action,
}

/// Ordered rules; the first matching rule decides.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PredicateProgram {
    pub rules: Vec<Rule>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct StateVerdict {
    pub color: Option<String>,
    pub truncated: bool,
    pub matched_rule: Option<usize>,
}

/// What predicates may look at: the state's code position and the calls
/// observed when stepping it.
#[derive(Clone, Copy)]
pub struct StateView<'a> {
    pub ct: &'a ClassTable,
    pub config: &'a Config,
    pub events: &'a [AnalysisEvent],
}

impl StateView<'_> {
    /// Qualified names the head instruction calls: the syntactic target and
    /// every target resolved while stepping (including through reflection).
    fn called(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Code::Seq { prefix, method, pc } = &self.config.code {
            match prefix.first() {
                Some(Synth::CallInit { ctor, .. }) => out.push(self.ct.method(*ctor).qualified.clone()),
                Some(_) => {}
                None => {
                    let body = &self.ct.method(*method).def.body;
                    if let Some(inv) = body.get(*pc as usize).and_then(|s| s.invoke()) {
                        out.push(inv.qualified());
                    }
                }
            }
        }
        for e in self.events {
            if let AnalysisEvent::Call { target, .. } = e {
                out.push(self.ct.method(*target).qualified.clone());
            }
        }
        out
    }

    pub fn uses_api(&self, api: &str) -> bool {
        self.called().iter().any(|c| c == api)
    }

    pub fn uses_name(&self, name: &str) -> bool {
        let inside = self
            .config
            .code
            .method()
            .is_some_and(|m| self.ct.method(m).qualified == name);
        inside || self.uses_api(name)
    }

    pub fn matches(&self, m: &Matcher) -> bool {
        match m {
            Matcher::UsesApi(a) | Matcher::Truncate(a) => self.uses_api(a),
            Matcher::UsesName(n) => self.uses_name(n),
            Matcher::And(ms) => ms.iter().all(|m| self.matches(m)),
            Matcher::Or(ms) => ms.iter().any(|m| self.matches(m)),
            Matcher::Not(m) => !self.matches(m),
            Matcher::Always => true,
        }
    }
}

impl PredicateProgram {
    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn has_truncation(&self) -> bool {
        self.rules.iter().any(|r| matches!(r.action, Action::Truncate(_)))
    }

    pub fn evaluate(&self, view: &StateView<'_>) -> StateVerdict {
        for (i, r) in self.rules.iter().enumerate() {
            if view.matches(&r.matcher) {
                return StateVerdict {
                    color: Some(r.action.color().to_string()),
                    truncated: matches!(r.action, Action::Truncate(_)),
                    matched_rule: Some(i),
                };
            }
        }
        StateVerdict::default()
    }
}

pub fn parse_predicates(text: &str) -> Result<PredicateProgram, PredicateError> {
    let mut rules = Vec::new();
    for form in read_all(text)? {
        parse_form(&form, &mut rules)?;
    }
    Ok(PredicateProgram { rules })
}

fn malformed(message: impl Into<String>, pos: Pos) -> PredicateError {
    PredicateError::Malformed {
        message: message.into(),
        pos,
    }
}

fn list<'s>(s: &'s Sexp, what: &str) -> Result<&'s [Sexp], PredicateError> {
    s.as_list().ok_or_else(|| malformed(format!("expected {what}"), s.pos()))
}

fn parse_form(form: &Sexp, rules: &mut Vec<Rule>) -> Result<(), PredicateError> {
    let items = list(form, "a `lambda` or `rule` form")?;
    match form.head() {
        Some("lambda") => {
            let [_, params, body] = items else {
                return Err(malformed("expected (lambda (state) BODY)", form.pos()));
            };
            let params = list(params, "a parameter list")?;
            let [param] = params else {
                return Err(malformed("predicates take exactly one parameter", form.pos()));
            };
            if param.as_atom().is_none() {
                return Err(malformed("parameter must be a name", param.pos()));
            }
            parse_body(body, rules)
        }
        Some("rule") => {
            let [_, matcher, action] = items else {
                return Err(malformed("expected (rule MATCHER ACTION)", form.pos()));
            };
            let matcher = parse_matcher(matcher)?;
            let act = list(action, "(color \"...\") or (truncate \"...\")")?;
            let [kind, color] = act else {
                return Err(malformed("expected (color \"...\") or (truncate \"...\")", action.pos()));
            };
            let color = parse_color(color)?.ok_or_else(|| malformed("action needs a color string", color.pos()))?;
            let action = match kind.as_atom() {
                Some("color") => Action::Color(color),
                Some("truncate") => Action::Truncate(color),
                _ => return Err(malformed("action must be `color` or `truncate`", kind.pos())),
            };
            rules.push(Rule { matcher, action });
            Ok(())
        }
        Some(other) => Err(PredicateError::UnknownPrimitive {
            name: other.to_string(),
            pos: form.pos(),
        }),
        None => Err(malformed("expected a `lambda` or `rule` form", form.pos())),
    }
}

/// `Some(color)` for a color string, `None` for `#f`.
fn parse_color(s: &Sexp) -> Result<Option<String>, PredicateError> {
    match s {
        Sexp::Str(c, pos) => {
            if c.trim().is_empty() {
                Err(PredicateError::EmptyColor { pos: *pos })
            } else {
                Ok(Some(c.clone()))
            }
        }
        Sexp::Atom(a, _) if a == "#f" => Ok(None),
        _ => Err(malformed("expected a color string or #f", s.pos())),
    }
}

fn push_rule(matcher: Matcher, color: String, rules: &mut Vec<Rule>) {
    let action = if matcher.mentions_truncate() {
        Action::Truncate(color)
    } else {
        Action::Color(color)
    };
    rules.push(Rule { matcher, action });
}

/// Flattens nested `if`/`cond` bodies into first-match rules.
fn parse_body(body: &Sexp, rules: &mut Vec<Rule>) -> Result<(), PredicateError> {
    if let Some(color) = match body {
        Sexp::Str(..) | Sexp::Atom(..) => Some(parse_color(body)?),
        _ => None,
    } {
        if let Some(c) = color {
            push_rule(Matcher::Always, c, rules);
        }
        return Ok(());
    }
    let items = list(body, "a predicate body")?;
    match body.head() {
        Some("if") => {
            let [_, test, then, otherwise] = items else {
                return Err(malformed("expected (if TEST COLOR ELSE)", body.pos()));
            };
            let matcher = parse_matcher(test)?;
            if let Some(c) = parse_color(then)? {
                push_rule(matcher, c, rules);
            }
            parse_body(otherwise, rules)
        }
        Some("cond") => {
            for clause in &items[1..] {
                let parts = list(clause, "a cond clause")?;
                let [test, color] = parts else {
                    return Err(malformed("expected [TEST COLOR]", clause.pos()));
                };
                let color = parse_color(color)?;
                let matcher = if test.is_atom("else") {
                    Matcher::Always
                } else {
                    parse_matcher(test)?
                };
                if let Some(c) = color {
                    push_rule(matcher, c, rules);
                }
            }
            Ok(())
        }
        _ => Err(malformed("expected `if`, `cond` or a color", body.pos())),
    }
}

/// Removes whitespace from a qualified name, so that a stray blank inside a
/// package path does not silently disable a rule.
fn normalize_name(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn parse_matcher(s: &Sexp) -> Result<Matcher, PredicateError> {
    let items = list(s, "a predicate call")?;
    let Some(head) = s.head() else {
        return Err(malformed("expected a predicate call", s.pos()));
    };
    let name_arg = || -> Result<String, PredicateError> {
        // Arguments: an optional state parameter, the name, then optional
        // analyzer keywords such as `st-attr`, which are ignored.
        let mut strings = items[1..].iter().filter_map(|a| match a {
            Sexp::Str(v, _) => Some(v),
            _ => None,
        });
        let name = strings
            .next()
            .ok_or_else(|| malformed(format!("`{head}` needs a name string"), s.pos()))?;
        if strings.next().is_some() {
            return Err(malformed(format!("`{head}` takes one name string"), s.pos()));
        }
        if let Some(bad) = items[1..].iter().find(|a| a.as_list().is_some()) {
            return Err(malformed(format!("unexpected argument to `{head}`"), bad.pos()));
        }
        Ok(normalize_name(name))
    };
    let sub = || -> Result<Vec<Matcher>, PredicateError> { items[1..].iter().map(parse_matcher).collect() };
    Ok(match head {
        "uses-API?" => Matcher::UsesApi(name_arg()?),
        "uses-name?" => Matcher::UsesName(name_arg()?),
        "truncate?" => Matcher::Truncate(name_arg()?),
        "and" => Matcher::And(sub()?),
        "or" => Matcher::Or(sub()?),
        "not" => {
            let mut ms = sub()?;
            if ms.len() != 1 {
                return Err(malformed("`not` takes one matcher", s.pos()));
            }
            Matcher::Not(Box::new(ms.remove(0)))
        }
        other => {
            return Err(PredicateError::UnknownPrimitive {
                name: other.to_string(),
                pos: s.pos(),
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declarative_rules_parse() {
        let p = parse_predicates(
            r#"(rule (and (uses-API? "a/B/m") (not (uses-name? "a/B/n"))) (color "blue"))
               (rule (truncate? "x/Y/z") (truncate "3"))"#,
        )
        .unwrap();
        assert_eq!(p.rules.len(), 2);
        assert_eq!(
            p.rules[0].matcher,
            Matcher::And(vec![
                Matcher::UsesApi("a/B/m".into()),
                Matcher::Not(Box::new(Matcher::UsesName("a/B/n".into())))
            ])
        );
        assert_eq!(p.rules[1].action, Action::Truncate("3".into()));
    }

    #[test]
    fn nested_if_flattens_in_order() {
        let p = parse_predicates(
            r#"(lambda (s) (if (uses-API? s "a/B/m") "1" (if (uses-name? s "a/B/n") "2" "3")))"#,
        )
        .unwrap();
        let colors: Vec<&str> = p.rules.iter().map(|r| r.action.color()).collect();
        assert_eq!(colors, ["1", "2", "3"]);
        assert_eq!(p.rules[2].matcher, Matcher::Always);
    }

    #[test]
    fn unknown_primitive_is_rejected() {
        let e = parse_predicates(r#"(lambda (s) (if (calls? s "x") "red" #f))"#).unwrap_err();
        assert!(matches!(e, PredicateError::UnknownPrimitive { ref name, .. } if name == "calls?"));
    }

    #[test]
    fn empty_color_is_rejected() {
        let e = parse_predicates(r#"(lambda (s) (if (uses-API? s "x/Y/z") "" #f))"#).unwrap_err();
        assert!(matches!(e, PredicateError::EmptyColor { .. }));
    }

    #[test]
    fn names_lose_embedded_whitespace() {
        let p = parse_predicates(r#"(rule (uses-name? "a/b /C/m") (color "red"))"#).unwrap();
        assert_eq!(p.rules[0].matcher, Matcher::UsesName("a/b/C/m".into()));
    }

    #[test]
    fn empty_program_never_matches() {
        assert!(parse_predicates("").unwrap().is_empty());
    }
}
