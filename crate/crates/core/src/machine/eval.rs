//! Atomic-expression and field evaluation against an abstract store.

use crate::class_table::ClassTable;
use crate::domain::{Addr, AbstractValue, Atom, Flat, FramePointer, Lattice, ObjectValue, Store};
use crate::syntax::{AExp, AtomicOp, RET, THIS};

/// Evaluates `ae` in frame `fp`. Problems (unbound registers, ill-typed
/// operands) are pushed onto `diags` and contribute nothing to the result.
pub fn eval_atomic(
    ct: &ClassTable,
    ae: &AExp,
    fp: &FramePointer,
    store: &Store,
    diags: &mut Vec<String>,
) -> AbstractValue {
    match ae {
        AExp::True => AbstractValue::boolean(true),
        AExp::False => AbstractValue::boolean(false),
        AExp::Null => AbstractValue::null(),
        AExp::Void => AbstractValue::void(),
        AExp::Int(n) => AbstractValue::int(*n),
        AExp::This => lookup(fp, THIS, store, diags),
        AExp::Reg(r) => lookup(fp, r, store, diags),
        AExp::InstanceOf(e, class) => {
            let v = eval_atomic(ct, e, fp, store, diags);
            instance_of(ct, &v, class, diags)
        }
        AExp::Op(op, args) => {
            let vals: Vec<AbstractValue> = args
                .iter()
                .map(|a| eval_atomic(ct, a, fp, store, diags))
                .collect();
            let r = apply_op(*op, &vals);
            if r.is_empty() && vals.iter().all(|v| !v.is_empty()) {
                diags.push(format!("`{}` has no well-typed result for its operands", op.as_str()));
            }
            r
        }
    }
}

fn lookup(fp: &FramePointer, reg: &str, store: &Store, diags: &mut Vec<String>) -> AbstractValue {
    let v = store.get(&Addr::Reg(fp.clone(), reg.to_string()));
    if v.is_empty() {
        if reg != RET {
            diags.push(format!("read of unbound register `{reg}`"));
        } else {
            diags.push("read of `ret` before any call returned".to_string());
        }
    }
    v.clone()
}

fn instance_of(ct: &ClassTable, v: &AbstractValue, class: &str, diags: &mut Vec<String>) -> AbstractValue {
    if v.is_empty() {
        return AbstractValue::empty();
    }
    let Some(target) = ct.class_id(class) else {
        diags.push(format!("instance-of names unknown class `{class}`"));
        return AbstractValue::boolean(false);
    };
    let mut out = AbstractValue::empty();
    for a in v.atoms() {
        let hit = matches!(&a, Atom::Object(o) if ct.is_subclass(o.class, target));
        out.insert(Atom::Bool(Flat::Exactly(hit)));
    }
    out
}

/// Element-wise evaluation of an atomic operator over abstract operands.
pub fn apply_op(op: AtomicOp, args: &[AbstractValue]) -> AbstractValue {
    let ints = |i: usize| args[i].ints();
    let bools = |i: usize| args[i].bools();
    let int_result = |f: fn(&i64, &i64) -> Option<i64>| {
        let r = ints(0).lift2(ints(1), f);
        if r.is_bot() {
            AbstractValue::empty()
        } else {
            AbstractValue::atom(Atom::Int(r))
        }
    };
    let bool_of = |r: Flat<bool>| {
        if r.is_bot() {
            AbstractValue::empty()
        } else {
            AbstractValue::atom(Atom::Bool(r))
        }
    };
    match op {
        AtomicOp::Add => int_result(|a, b| Some(a.wrapping_add(*b))),
        AtomicOp::Sub => int_result(|a, b| Some(a.wrapping_sub(*b))),
        AtomicOp::Mul => int_result(|a, b| Some(a.wrapping_mul(*b))),
        AtomicOp::Div => int_result(|a, b| if *b == 0 { None } else { Some(a.wrapping_div(*b)) }),
        AtomicOp::Lt => bool_of(ints(0).lift2(ints(1), |a, b| Some(a < b))),
        AtomicOp::Gt => bool_of(ints(0).lift2(ints(1), |a, b| Some(a > b))),
        AtomicOp::Not => bool_of(bools(0).map(|b| !b)),
        AtomicOp::And => bool_of(bools(0).lift2(bools(1), |a, b| Some(*a && *b))),
        AtomicOp::Or => bool_of(bools(0).lift2(bools(1), |a, b| Some(*a || *b))),
        AtomicOp::Eq => {
            let mut out = Flat::Bot;
            for x in args[0].atoms() {
                for y in args[1].atoms() {
                    out = out.join(&Flat::from(atom_eq(&x, &y)));
                }
            }
            bool_of(out)
        }
    }
}

impl From<Option<bool>> for Flat<bool> {
    fn from(v: Option<bool>) -> Self {
        match v {
            Some(b) => Flat::Exactly(b),
            None => Flat::Top,
        }
    }
}

/// Equality of two atoms: `Some(answer)` when every pair of concrete values
/// they stand for compares the same way, `None` when it can go either way.
fn atom_eq(x: &Atom, y: &Atom) -> Option<bool> {
    fn flat<T: PartialEq>(a: &Flat<T>, b: &Flat<T>) -> Option<bool> {
        match (a, b) {
            (Flat::Exactly(a), Flat::Exactly(b)) => Some(a == b),
            _ => None,
        }
    }
    match (x, y) {
        (Atom::Int(a), Atom::Int(b)) => flat(a, b),
        (Atom::Bool(a), Atom::Bool(b)) => flat(a, b),
        (Atom::Str(a), Atom::Str(b)) => flat(a, b),
        (Atom::Null, Atom::Null) | (Atom::Void, Atom::Void) => Some(true),
        // One abstract pointer may stand for many concrete objects.
        (Atom::Object(a), Atom::Object(b)) => (a != b).then_some(false),
        (Atom::Kont(_), Atom::Kont(_)) | (Atom::Method(_), Atom::Method(_)) => None,
        _ => Some(false),
    }
}

/// Joins the field `field` over every object `ae_o` may denote.
pub fn eval_field(
    ct: &ClassTable,
    ae_o: &AExp,
    fp: &FramePointer,
    store: &Store,
    field: &str,
    diags: &mut Vec<String>,
) -> AbstractValue {
    let base = eval_atomic(ct, ae_o, fp, store, diags);
    field_of(&base, store, field, diags)
}

pub fn field_of(
    base: &AbstractValue,
    store: &Store,
    field: &str,
    diags: &mut Vec<String>,
) -> AbstractValue {
    if base.objects().is_empty() {
        diags.push(format!("field access `.{field}` on a value with no objects"));
        return AbstractValue::empty();
    }
    if base.objects().len() != base.len() {
        diags.push(format!("field access `.{field}` skips non-object values"));
    }
    let mut out = AbstractValue::empty();
    for ObjectValue { ptr, .. } in base.objects() {
        out.join_in_place(store.get(&Addr::Field(ptr.clone(), field.to_string())));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class_table::{ClassId, MethodId};
    use crate::domain::{AllocSite, Context, ObjectPointer, StmtId};
    use crate::frontend::parse_program;

    fn ct() -> ClassTable {
        ClassTable::new(
            &parse_program(
                "(class A extends java/lang/Object ((field f int)) ())
                 (class B extends A () ())",
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn reg(r: &str) -> Addr {
        Addr::Reg(FramePointer::Root, r.into())
    }

    fn obj(ct: &ClassTable, pc: u32, class: &str) -> ObjectValue {
        ObjectValue {
            ptr: ObjectPointer {
                site: AllocSite::Stmt(StmtId {
                    method: MethodId(0),
                    pc,
                }),
                ctx: Context::empty(),
            },
            class: ct.class_id(class).unwrap_or(ClassId(0)),
        }
    }

    fn ev(ct: &ClassTable, ae: &AExp, s: &Store) -> (AbstractValue, Vec<String>) {
        let mut d = Vec::new();
        let v = eval_atomic(ct, ae, &FramePointer::Root, s, &mut d);
        (v, d)
    }

    #[test]
    fn literals_are_singletons() {
        let ct = ct();
        assert_eq!(ev(&ct, &AExp::Int(7), &Store::new()).0, AbstractValue::int(7));
        assert_eq!(ev(&ct, &AExp::True, &Store::new()).0, AbstractValue::boolean(true));
        assert_eq!(ev(&ct, &AExp::Null, &Store::new()).0, AbstractValue::null());
    }

    #[test]
    fn addition_matches_concrete_and_top_absorbs() {
        let ct = ct();
        let add = AExp::Op(AtomicOp::Add, vec![AExp::Reg("x".into()), AExp::Reg("y".into())]);
        let s = Store::new()
            .with(reg("x"), AbstractValue::int(2))
            .with(reg("y"), AbstractValue::int(3));
        assert_eq!(ev(&ct, &add, &s).0, AbstractValue::int(2 + 3));
        let s = s.with(reg("x"), AbstractValue::int(9));
        assert_eq!(ev(&ct, &add, &s).0, AbstractValue::top_int());
    }

    #[test]
    fn unbound_register_yields_empty_and_diagnostic() {
        let ct = ct();
        let (v, d) = ev(&ct, &AExp::Reg("nope".into()), &Store::new());
        assert!(v.is_empty());
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn division_by_zero_is_bottom() {
        assert!(apply_op(AtomicOp::Div, &[AbstractValue::int(1), AbstractValue::int(0)]).is_empty());
        assert_eq!(
            apply_op(AtomicOp::Div, &[AbstractValue::top_int(), AbstractValue::int(2)]),
            AbstractValue::top_int()
        );
    }

    #[test]
    fn equality_over_mixed_atoms() {
        let ct = ct();
        let a = obj(&ct, 1, "A");
        let b = obj(&ct, 2, "A");
        let eq = |x: AbstractValue, y: AbstractValue| apply_op(AtomicOp::Eq, &[x, y]);
        assert_eq!(eq(AbstractValue::null(), AbstractValue::null()), AbstractValue::boolean(true));
        assert_eq!(eq(AbstractValue::object(a.clone()), AbstractValue::null()), AbstractValue::boolean(false));
        assert_eq!(eq(AbstractValue::object(a.clone()), AbstractValue::object(b)), AbstractValue::boolean(false));
        assert_eq!(eq(AbstractValue::object(a.clone()), AbstractValue::object(a)), AbstractValue::top_bool());
        assert_eq!(eq(AbstractValue::int(1), AbstractValue::top_int()), AbstractValue::top_bool());
    }

    #[test]
    fn instance_of_is_three_valued() {
        let ct = ct();
        let a = obj(&ct, 1, "A");
        let b = obj(&ct, 2, "B");
        let io = |v: AbstractValue, c: &str| instance_of(&ct, &v, c, &mut Vec::new());
        assert_eq!(io(AbstractValue::object(b.clone()), "A"), AbstractValue::boolean(true));
        assert_eq!(io(AbstractValue::object(a.clone()), "B"), AbstractValue::boolean(false));
        let both = AbstractValue::object(a).join(&AbstractValue::object(b));
        assert_eq!(io(both, "B"), AbstractValue::top_bool());
    }

    #[test]
    fn field_eval_joins_over_objects() {
        let ct = ct();
        let a = obj(&ct, 1, "A");
        let b = obj(&ct, 2, "A");
        let s = Store::new()
            .with(reg("o"), AbstractValue::object(a.clone()))
            .with(Addr::Field(a.ptr.clone(), "f".into()), AbstractValue::int(1))
            .with(Addr::Field(b.ptr.clone(), "f".into()), AbstractValue::int(2));
        let mut d = Vec::new();
        let one = eval_field(&ct, &AExp::Reg("o".into()), &FramePointer::Root, &s, "f", &mut d);
        assert_eq!(one, AbstractValue::int(1));
        let s = s.with(reg("o"), AbstractValue::object(b));
        let two = eval_field(&ct, &AExp::Reg("o".into()), &FramePointer::Root, &s, "f", &mut d);
        assert_eq!(two, AbstractValue::int(1).join(&AbstractValue::int(2)));
        assert_eq!(two, AbstractValue::top_int());
    }

    #[test]
    fn field_eval_on_null_is_empty_with_diagnostic() {
        let ct = ct();
        let s = Store::new().with(reg("o"), AbstractValue::null());
        let mut d = Vec::new();
        let v = eval_field(&ct, &AExp::Reg("o".into()), &FramePointer::Root, &s, "f", &mut d);
        assert!(v.is_empty());
        assert!(!d.is_empty());
    }
}
