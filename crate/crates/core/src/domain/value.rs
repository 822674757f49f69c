use std::collections::BTreeSet;

use serde_json::{json, Value as Json};

use super::addr::{Describe, Kont, ObjectValue};
use super::lattice::{Flat, Lattice};
use crate::class_table::{ClassTable, MethodId};

/// One element of an abstract value set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Object(ObjectValue),
    /// `Flat::Top` is the unknown string; `Flat::Bot` atoms are never stored.
    Str(Flat<String>),
    Int(Flat<i64>),
    Bool(Flat<bool>),
    Null,
    Void,
    Kont(Kont),
    /// A method reference held by a reflective method object.
    Method(MethodId),
}

/// A finite set of atoms kept in normal form: at most one string, integer and
/// boolean atom each, with distinct constants collapsed to Top. Structural
/// equality is therefore lattice equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AbstractValue {
    objects: BTreeSet<ObjectValue>,
    strings: Flat<String>,
    ints: Flat<i64>,
    bools: Flat<bool>,
    null: bool,
    void: bool,
    konts: BTreeSet<Kont>,
    methods: BTreeSet<MethodId>,
}

impl AbstractValue {
    pub const EMPTY: AbstractValue = AbstractValue {
        objects: BTreeSet::new(),
        strings: Flat::Bot,
        ints: Flat::Bot,
        bools: Flat::Bot,
        null: false,
        void: false,
        konts: BTreeSet::new(),
        methods: BTreeSet::new(),
    };

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn atom(a: Atom) -> Self {
        let mut v = Self::default();
        v.insert(a);
        v
    }

    pub fn int(n: i64) -> Self {
        Self::atom(Atom::Int(Flat::Exactly(n)))
    }

    pub fn top_int() -> Self {
        Self::atom(Atom::Int(Flat::Top))
    }

    pub fn boolean(b: bool) -> Self {
        Self::atom(Atom::Bool(Flat::Exactly(b)))
    }

    pub fn top_bool() -> Self {
        Self::atom(Atom::Bool(Flat::Top))
    }

    pub fn string(s: impl Into<String>) -> Self {
        Self::atom(Atom::Str(Flat::Exactly(s.into())))
    }

    pub fn top_string() -> Self {
        Self::atom(Atom::Str(Flat::Top))
    }

    pub fn null() -> Self {
        Self::atom(Atom::Null)
    }

    pub fn void() -> Self {
        Self::atom(Atom::Void)
    }

    pub fn object(o: ObjectValue) -> Self {
        Self::atom(Atom::Object(o))
    }

    pub fn kont(k: Kont) -> Self {
        Self::atom(Atom::Kont(k))
    }

    pub fn insert(&mut self, a: Atom) {
        match a {
            Atom::Object(o) => {
                self.objects.insert(o);
            }
            Atom::Str(s) => self.strings = self.strings.join(&s),
            Atom::Int(n) => self.ints = self.ints.join(&n),
            Atom::Bool(b) => self.bools = self.bools.join(&b),
            Atom::Null => self.null = true,
            Atom::Void => self.void = true,
            Atom::Kont(k) => {
                self.konts.insert(k);
            }
            Atom::Method(m) => {
                self.methods.insert(m);
            }
        }
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Self {
        let mut v = Self::default();
        for a in atoms {
            v.insert(a);
        }
        v
    }

    /// Atoms in canonical order.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out: Vec<Atom> = Vec::new();
        out.extend(self.objects.iter().cloned().map(Atom::Object));
        if !self.strings.is_bot() {
            out.push(Atom::Str(self.strings.clone()));
        }
        if !self.ints.is_bot() {
            out.push(Atom::Int(self.ints.clone()));
        }
        if !self.bools.is_bot() {
            out.push(Atom::Bool(self.bools.clone()));
        }
        if self.null {
            out.push(Atom::Null);
        }
        if self.void {
            out.push(Atom::Void);
        }
        out.extend(self.konts.iter().cloned().map(Atom::Kont));
        out.extend(self.methods.iter().copied().map(Atom::Method));
        out
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
            && self.strings.is_bot()
            && self.ints.is_bot()
            && self.bools.is_bot()
            && !self.null
            && !self.void
            && self.konts.is_empty()
            && self.methods.is_empty()
    }

    pub fn len(&self) -> usize {
        self.atoms().len()
    }

    pub fn objects(&self) -> &BTreeSet<ObjectValue> {
        &self.objects
    }

    pub fn strings(&self) -> &Flat<String> {
        &self.strings
    }

    pub fn ints(&self) -> &Flat<i64> {
        &self.ints
    }

    pub fn bools(&self) -> &Flat<bool> {
        &self.bools
    }

    pub fn has_null(&self) -> bool {
        self.null
    }

    pub fn has_void(&self) -> bool {
        self.void
    }

    pub fn konts(&self) -> &BTreeSet<Kont> {
        &self.konts
    }

    pub fn methods(&self) -> &BTreeSet<MethodId> {
        &self.methods
    }

    /// Whether the value may be a `true` boolean.
    pub fn may_be(&self, b: bool) -> bool {
        match &self.bools {
            Flat::Bot => false,
            Flat::Top => true,
            Flat::Exactly(x) => *x == b,
        }
    }

    pub fn to_json(&self, ct: &ClassTable) -> Json {
        Json::Array(self.atoms().iter().map(|a| atom_json(a, ct)).collect())
    }
}

fn flat_json<T: serde::Serialize + Clone + Eq>(kind: &str, f: &Flat<T>) -> Json {
    match f {
        Flat::Exactly(v) => json!({ "kind": kind, "value": v }),
        _ => json!({ "kind": kind, "top": true }),
    }
}

pub fn atom_json(a: &Atom, ct: &ClassTable) -> Json {
    match a {
        Atom::Object(o) => json!({
            "kind": "object",
            "pointer": o.ptr.describe(ct),
            "class": ct.class_name(o.class),
        }),
        Atom::Str(s) => flat_json("string", s),
        Atom::Int(n) => flat_json("int", n),
        Atom::Bool(b) => flat_json("bool", b),
        Atom::Null => json!({ "kind": "null" }),
        Atom::Void => json!({ "kind": "void" }),
        Atom::Kont(Kont::Halt) => json!({ "kind": "halt" }),
        Atom::Kont(Kont::Fun { fp, resume, next }) => json!({
            "kind": "fun",
            "fp": fp.describe(ct),
            "resume": resume.describe(ct),
            "next": next.describe(ct),
        }),
        Atom::Method(m) => json!({ "kind": "method", "name": ct.method(*m).qualified }),
    }
}

impl Lattice for AbstractValue {
    fn bottom() -> Self {
        Self::default()
    }

    fn join(&self, other: &Self) -> Self {
        let mut v = self.clone();
        v.join_in_place(other);
        v
    }

    fn leq(&self, other: &Self) -> bool {
        self.objects.is_subset(&other.objects)
            && self.strings.leq(&other.strings)
            && self.ints.leq(&other.ints)
            && self.bools.leq(&other.bools)
            && (!self.null || other.null)
            && (!self.void || other.void)
            && self.konts.is_subset(&other.konts)
            && self.methods.is_subset(&other.methods)
    }

    fn join_in_place(&mut self, other: &Self) -> bool {
        let mut changed = false;
        for o in &other.objects {
            if !self.objects.contains(o) {
                self.objects.insert(o.clone());
                changed = true;
            }
        }
        changed |= self.strings.join_in_place(&other.strings);
        changed |= self.ints.join_in_place(&other.ints);
        changed |= self.bools.join_in_place(&other.bools);
        if other.null && !self.null {
            self.null = true;
            changed = true;
        }
        if other.void && !self.void {
            self.void = true;
            changed = true;
        }
        for k in &other.konts {
            if !self.konts.contains(k) {
                self.konts.insert(k.clone());
                changed = true;
            }
        }
        for m in &other.methods {
            changed |= self.methods.insert(*m);
        }
        changed
    }
}

/// Least upper bound of two abstract values.
pub fn join_value(a: &AbstractValue, b: &AbstractValue) -> AbstractValue {
    a.join(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class_table::ClassId;
    use crate::domain::addr::{AllocSite, Context, ObjectPointer, StmtId};

    fn obj(pc: u32) -> ObjectValue {
        ObjectValue {
            ptr: ObjectPointer {
                site: AllocSite::Stmt(StmtId {
                    method: MethodId(0),
                    pc,
                }),
                ctx: Context::empty(),
            },
            class: ClassId(0),
        }
    }

    #[test]
    fn bottom_is_identity() {
        let x = AbstractValue::string("x");
        assert_eq!(join_value(&x, &AbstractValue::empty()), x);
    }

    #[test]
    fn distinct_ints_collapse_to_top() {
        let v = join_value(&AbstractValue::int(1), &AbstractValue::int(2));
        assert_eq!(v, AbstractValue::top_int());
        assert_eq!(v.atoms(), vec![Atom::Int(Flat::Top)]);
    }

    #[test]
    fn distinct_objects_union() {
        let v = join_value(&AbstractValue::object(obj(1)), &AbstractValue::object(obj(2)));
        assert_eq!(v.objects().len(), 2);
    }

    #[test]
    fn true_join_false_is_top_bool() {
        let v = join_value(&AbstractValue::boolean(true), &AbstractValue::boolean(false));
        assert_eq!(v, AbstractValue::top_bool());
        assert!(v.may_be(true) && v.may_be(false));
    }

    #[test]
    fn from_atoms_normalizes() {
        let v = AbstractValue::from_atoms([
            Atom::Str(Flat::Exactly("a".into())),
            Atom::Str(Flat::Exactly("b".into())),
            Atom::Null,
        ]);
        assert_eq!(v.atoms(), vec![Atom::Str(Flat::Top), Atom::Null]);
        assert!(AbstractValue::from_atoms([Atom::Int(Flat::Bot)]).is_empty());
    }
}
