//! Concrete interpreter for the same bytecode, with unbounded fresh
//! addresses and strong updates, plus the map from its states to abstract
//! ones used to check the analysis for soundness.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde_json::{json, Value as Json};

use crate::class_table::{
    internal_class_name, ClassId, ClassTable, MethodId, CLASS_CLASS, CLASS_NAME_FIELD,
    METHOD_CLASS, METHOD_FIELD, STRING_CLASS, STRING_VALUE_FIELD,
};
use crate::domain::{
    AbstractState, AbstractValue, Addr, AllocSite, Atom, Code, Config, Context, Describe, Flat,
    FramePointer, Kont, KontAddr, Lattice, ObjectPointer, ObjectValue, StmtId, Store, Synth,
};
use crate::engine::{AnalysisResult, EntryPoint};
use crate::machine::{reflect_api, ReflectApi};
use crate::syntax::{param_register, AExp, AtomicOp, InvokeKind, Invoke, Rhs, Stmt, Type, RET, THIS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CObject {
    pub id: u64,
    pub class: ClassId,
}

impl Describe for CObject {
    fn describe(&self, ct: &ClassTable) -> String {
        format!("#{}:{}", self.id, ct.class_name(self.class))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CKontAddr {
    Halt,
    Call(u64),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CKont {
    Halt,
    Fun {
        fp: u64,
        resume: Code<CObject>,
        next: CKontAddr,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CValue {
    Int(i64),
    Bool(bool),
    Str(String),
    Null,
    Void,
    Obj(CObject),
    Kont(CKont),
    Method(MethodId),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CAddr {
    Reg(u64, String),
    Field(u64, String),
    Kont(CKontAddr),
}

pub type CStore = BTreeMap<CAddr, CValue>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcreteState {
    pub code: Code<CObject>,
    pub fp: u64,
    pub ka: CKontAddr,
    pub store: Arc<CStore>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Halted,
    /// A runtime type error or missing definition stopped the run.
    Error(String),
    OutOfFuel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub entry: String,
    pub states: Vec<ConcreteState>,
    pub outcome: Outcome,
}

/// Where every fresh address came from: enough to compute its abstract
/// counterpart under any call-site depth.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance {
    /// Frame id to (method, full call-site history); entry frames have no method.
    frames: Vec<(Option<MethodId>, Vec<StmtId>)>,
    /// Object id to (allocation site, history of the allocating frame).
    objects: Vec<(AllocSite, Vec<StmtId>)>,
    /// Continuation id to (call site, history of the calling frame).
    konts: Vec<(StmtId, Vec<StmtId>)>,
}

fn default_value(ty: &Type) -> Option<CValue> {
    match ty {
        Type::Int | Type::Byte | Type::Char => Some(CValue::Int(0)),
        Type::Boolean => Some(CValue::Bool(false)),
        Type::Class(_) => Some(CValue::Null),
        Type::Void => None,
    }
}

fn opaque_value(ty: &Type) -> CValue {
    default_value(ty).unwrap_or(CValue::Void)
}

struct Step {
    code: Code<CObject>,
    fp: u64,
    ka: CKontAddr,
}

type Res<T> = Result<T, String>;

/// Runs entry points one after another over a shared heap, the way an app's
/// callbacks share their receiver.
pub struct Interpreter<'a> {
    ct: &'a ClassTable,
    store: CStore,
    prov: Provenance,
    receivers: HashMap<ClassId, CObject>,
}

impl<'a> Interpreter<'a> {
    pub fn new(ct: &'a ClassTable) -> Self {
        Interpreter {
            ct,
            store: CStore::new(),
            prov: Provenance::default(),
            receivers: HashMap::new(),
        }
    }

    pub fn provenance(&self) -> &Provenance {
        &self.prov
    }

    pub fn into_provenance(self) -> Provenance {
        self.prov
    }

    fn new_object(&mut self, class: ClassId, site: AllocSite, fp: u64) -> CObject {
        let id = self.prov.objects.len() as u64;
        self.prov.objects.push((site, self.prov.frames[fp as usize].1.clone()));
        let obj = CObject { id, class };
        for f in self.ct.all_fields(class) {
            if let Some(v) = default_value(&f.ty) {
                self.store.insert(CAddr::Field(id, f.name.clone()), v);
            }
        }
        obj
    }

    fn new_frame(&mut self, method: Option<MethodId>, history: Vec<StmtId>) -> u64 {
        self.prov.frames.push((method, history));
        (self.prov.frames.len() - 1) as u64
    }

    pub fn run_entry(&mut self, entry: &EntryPoint, fuel: usize) -> Trace {
        let ct = self.ct;
        let def = &ct.method(entry.method).def;
        let fp = self.new_frame(None, Vec::new());
        self.store.insert(CAddr::Kont(CKontAddr::Halt), CValue::Kont(CKont::Halt));
        for (i, ty) in def.params.iter().enumerate() {
            self.store.insert(CAddr::Reg(fp, param_register(i)), opaque_value(ty));
        }
        if !def.is_static() {
            let class = ct.class_id(&entry.class).unwrap_or(ct.method(entry.method).class);
            let obj = match self.receivers.get(&class) {
                Some(o) => *o,
                None => {
                    let o = self.new_object(class, AllocSite::EntryReceiver(class), fp);
                    self.receivers.insert(class, o);
                    o
                }
            };
            self.store.insert(CAddr::Reg(fp, THIS.into()), CValue::Obj(obj));
        }
        let mut cur = Step {
            code: Code::at(entry.method, 0),
            fp,
            ka: CKontAddr::Halt,
        };
        let mut states = vec![self.snapshot(&cur)];
        let mut outcome = Outcome::OutOfFuel;
        for _ in 0..fuel {
            if cur.code.is_halt() {
                outcome = Outcome::Halted;
                break;
            }
            match self.step(&cur) {
                Ok(next) => {
                    cur = next;
                    states.push(self.snapshot(&cur));
                }
                Err(e) => {
                    outcome = Outcome::Error(e);
                    break;
                }
            }
        }
        if outcome == Outcome::OutOfFuel && cur.code.is_halt() {
            outcome = Outcome::Halted;
        }
        Trace {
            entry: entry.qualified(),
            states,
            outcome,
        }
    }

    fn snapshot(&self, s: &Step) -> ConcreteState {
        ConcreteState {
            code: s.code.clone(),
            fp: s.fp,
            ka: s.ka.clone(),
            store: Arc::new(self.store.clone()),
        }
    }

    fn read(&self, a: &CAddr) -> Res<CValue> {
        self.store
            .get(a)
            .cloned()
            .ok_or_else(|| format!("read of unbound address {a:?}"))
    }

    fn eval(&self, ae: &AExp, fp: u64) -> Res<CValue> {
        Ok(match ae {
            AExp::True => CValue::Bool(true),
            AExp::False => CValue::Bool(false),
            AExp::Null => CValue::Null,
            AExp::Void => CValue::Void,
            AExp::Int(n) => CValue::Int(*n),
            AExp::This => self.read(&CAddr::Reg(fp, THIS.into()))?,
            AExp::Reg(r) => self.read(&CAddr::Reg(fp, r.clone()))?,
            AExp::InstanceOf(e, class) => {
                let target = self
                    .ct
                    .class_id(class)
                    .ok_or_else(|| format!("unknown class {class}"))?;
                match self.eval(e, fp)? {
                    CValue::Obj(o) => CValue::Bool(self.ct.is_subclass(o.class, target)),
                    _ => CValue::Bool(false),
                }
            }
            AExp::Op(op, args) => {
                let vs = args.iter().map(|a| self.eval(a, fp)).collect::<Res<Vec<_>>>()?;
                eval_op(*op, &vs)?
            }
        })
    }

    fn object(v: CValue, what: &str) -> Res<CObject> {
        match v {
            CValue::Obj(o) => Ok(o),
            other => Err(format!("{what}: expected an object, found {other:?}")),
        }
    }

    fn advanced(code: &Code<CObject>) -> Code<CObject> {
        match code {
            Code::Halt => Code::Halt,
            Code::Seq { prefix, method, pc } if !prefix.is_empty() => Code::Seq {
                prefix: prefix[1..].to_vec(),
                method: *method,
                pc: *pc,
            },
            Code::Seq { method, pc, .. } => Code::at(*method, pc + 1),
        }
    }

    fn step(&mut self, s: &Step) -> Res<Step> {
        let Code::Seq { prefix, method, pc } = &s.code else {
            return Err("step from halt".into());
        };
        let next = |code| Step {
            code,
            fp: s.fp,
            ka: s.ka.clone(),
        };
        if let Some(head) = prefix.first() {
            return match head {
                Synth::MoveResult(r) => {
                    let v = self.read(&CAddr::Reg(s.fp, RET.into()))?;
                    self.store.insert(CAddr::Reg(s.fp, r.clone()), v);
                    Ok(next(Self::advanced(&s.code)))
                }
                Synth::BindRet(o) => {
                    self.store.insert(CAddr::Reg(s.fp, RET.into()), CValue::Obj(*o));
                    Ok(next(Self::advanced(&s.code)))
                }
                Synth::CallInit { ctor, obj, site } => {
                    let resume = Self::advanced(&s.code);
                    self.apply(s, *ctor, Some(*obj), Vec::new(), resume, *site)
                }
            };
        }
        let ct = self.ct;
        let site = StmtId { method: *method, pc: *pc };
        let info = ct.method(*method);
        let Some(stmt) = info.def.body.get(*pc as usize) else {
            let v = opaque_value(&info.def.ret);
            return self.do_return(s, v);
        };
        let adv = Self::advanced(&s.code);
        let jump = |l: &str| -> Code<CObject> {
            Code::at(*method, info.labels.get(l).expect("checked label") as u32)
        };
        match stmt {
            Stmt::Label(_) | Stmt::Nop | Stmt::Line(_) => Ok(next(adv)),
            Stmt::Goto(l) => Ok(next(jump(l))),
            Stmt::If(g, l) => match self.eval(g, s.fp)? {
                CValue::Bool(true) => Ok(next(jump(l))),
                CValue::Bool(false) => Ok(next(adv)),
                other => Err(format!("`if` on non-boolean {other:?}")),
            },
            Stmt::Assign(r, Rhs::Atomic(ae)) => {
                let v = self.eval(ae, s.fp)?;
                self.store.insert(CAddr::Reg(s.fp, r.clone()), v);
                Ok(next(adv))
            }
            Stmt::Assign(r, Rhs::New(c)) => {
                let class = ct.class_id(c).ok_or_else(|| format!("unknown class {c}"))?;
                let o = self.new_object(class, AllocSite::Stmt(site), s.fp);
                self.store.insert(CAddr::Reg(s.fp, r.clone()), CValue::Obj(o));
                Ok(next(adv))
            }
            Stmt::FieldGet(r, o, f) => {
                let o = Self::object(self.eval(o, s.fp)?, "field-get")?;
                let v = self.read(&CAddr::Field(o.id, f.clone()))?;
                self.store.insert(CAddr::Reg(s.fp, r.clone()), v);
                Ok(next(adv))
            }
            Stmt::FieldPut(o, f, v) => {
                let o = Self::object(self.eval(o, s.fp)?, "field-put")?;
                let v = self.eval(v, s.fp)?;
                self.store.insert(CAddr::Field(o.id, f.clone()), v);
                Ok(next(adv))
            }
            Stmt::ConstString(r, lit) => {
                let class = ct.class_id(STRING_CLASS).expect("builtin");
                let o = self.new_object(class, AllocSite::Stmt(site), s.fp);
                self.store
                    .insert(CAddr::Field(o.id, STRING_VALUE_FIELD.into()), CValue::Str(lit.clone()));
                self.store.insert(CAddr::Reg(s.fp, r.clone()), CValue::Obj(o));
                Ok(next(adv))
            }
            Stmt::Return(ae) => {
                let v = self.eval(ae, s.fp)?;
                self.do_return(s, v)
            }
            Stmt::Invoke(inv) | Stmt::Assign(_, Rhs::Invoke(inv)) => {
                let resume = match (stmt, adv) {
                    (Stmt::Assign(r, _), Code::Seq { mut prefix, method, pc }) => {
                        prefix.insert(0, Synth::MoveResult(r.clone()));
                        Code::Seq { prefix, method, pc }
                    }
                    (_, adv) => adv,
                };
                self.invoke(s, inv, resume, site)
            }
        }
    }

    fn do_return(&mut self, s: &Step, v: CValue) -> Res<Step> {
        match self.read(&CAddr::Kont(s.ka.clone()))? {
            CValue::Kont(CKont::Halt) => {
                self.store.insert(CAddr::Reg(s.fp, RET.into()), v);
                Ok(Step {
                    code: Code::Halt,
                    fp: s.fp,
                    ka: s.ka.clone(),
                })
            }
            CValue::Kont(CKont::Fun { fp, resume, next }) => {
                self.store.insert(CAddr::Reg(fp, RET.into()), v);
                Ok(Step { code: resume, fp, ka: next })
            }
            other => Err(format!("continuation address holds {other:?}")),
        }
    }

    fn apply(
        &mut self,
        s: &Step,
        m: MethodId,
        this: Option<CObject>,
        args: Vec<CValue>,
        resume: Code<CObject>,
        site: StmtId,
    ) -> Res<Step> {
        let info = self.ct.method(m);
        if args.len() != info.def.params.len() {
            return Err(format!("arity mismatch calling {}", info.qualified));
        }
        if info.def.is_static() == this.is_some() {
            return Err(format!("receiver mismatch calling {}", info.qualified));
        }
        let mut history = self.prov.frames[s.fp as usize].1.clone();
        let caller_history = history.clone();
        history.push(site);
        let fp = self.new_frame(Some(m), history);
        let k = self.prov.konts.len() as u64;
        self.prov.konts.push((site, caller_history));
        let ka = CKontAddr::Call(k);
        self.store.insert(
            CAddr::Kont(ka.clone()),
            CValue::Kont(CKont::Fun {
                fp: s.fp,
                resume,
                next: s.ka.clone(),
            }),
        );
        if let Some(o) = this {
            self.store.insert(CAddr::Reg(fp, THIS.into()), CValue::Obj(o));
        }
        for (i, v) in args.into_iter().enumerate() {
            self.store.insert(CAddr::Reg(fp, param_register(i)), v);
        }
        Ok(Step {
            code: Code::at(m, 0),
            fp,
            ka,
        })
    }

    fn invoke(&mut self, s: &Step, inv: &Invoke, resume: Code<CObject>, site: StmtId) -> Res<Step> {
        if let Some(api) = reflect_api(inv) {
            return self.reflect(s, api, inv, resume, site);
        }
        let ct = self.ct;
        let args = inv.args.iter().map(|a| self.eval(a, s.fp)).collect::<Res<Vec<_>>>()?;
        let err = |e: crate::error::ResolveError| e.to_string();
        if inv.kind == InvokeKind::Static {
            let m = ct.resolve_by_name(&inv.class, &inv.method).map_err(err)?;
            return self.apply(s, m, None, args, resume, site);
        }
        let mut args = args.into_iter();
        let recv = Self::object(args.next().ok_or("missing receiver")?, "receiver")?;
        let m = match inv.kind {
            InvokeKind::Direct => ct.resolve_by_name(&inv.class, &inv.method).map_err(err)?,
            InvokeKind::Super => {
                let cur = ct.method(site.method).class;
                let sup = ct.class(cur).superclass.ok_or("invoke-super from the root class")?;
                ct.resolve(sup, &inv.method).map_err(err)?
            }
            _ => ct.resolve(recv.class, &inv.method).map_err(err)?,
        };
        self.apply(s, m, Some(recv), args.collect(), resume, site)
    }

    fn string_of(&self, v: CValue) -> Res<String> {
        let o = Self::object(v, "string argument")?;
        match self.read(&CAddr::Field(o.id, STRING_VALUE_FIELD.into()))? {
            CValue::Str(s) => Ok(s),
            other => Err(format!("string object holds {other:?}")),
        }
    }

    fn class_of(&self, v: CValue) -> Res<ClassId> {
        let o = Self::object(v, "class object")?;
        let name = self.read(&CAddr::Field(o.id, CLASS_NAME_FIELD.into()))?;
        let name = internal_class_name(&self.string_of(name)?);
        self.ct.class_id(&name).ok_or_else(|| format!("class not found: {name}"))
    }

    fn reflect(
        &mut self,
        s: &Step,
        api: ReflectApi,
        inv: &Invoke,
        resume: Code<CObject>,
        site: StmtId,
    ) -> Res<Step> {
        let ct = self.ct;
        let args = inv.args.iter().map(|a| self.eval(a, s.fp)).collect::<Res<Vec<_>>>()?;
        let ret = CAddr::Reg(s.fp, RET.into());
        let done = |code| Step {
            code,
            fp: s.fp,
            ka: s.ka.clone(),
        };
        match api {
            ReflectApi::ForName => {
                let [arg] = &args[..] else { return Err("forName arity".into()) };
                let name = Self::object(arg.clone(), "forName argument")?;
                let class = ct.class_id(CLASS_CLASS).expect("builtin");
                let o = self.new_object(class, AllocSite::Stmt(site), s.fp);
                self.store.insert(CAddr::Field(o.id, CLASS_NAME_FIELD.into()), CValue::Obj(name));
                self.store.insert(ret, CValue::Obj(o));
                Ok(done(resume))
            }
            ReflectApi::GetMethod => {
                if args.len() < 2 {
                    return Err("getMethod arity".into());
                }
                let class = self.class_of(args[0].clone())?;
                let name = self.string_of(args[1].clone())?;
                let m = ct.resolve(class, &name).map_err(|e| e.to_string())?;
                if !ct.method(m).def.is_public() {
                    return Err(format!("{} is not public", ct.method(m).qualified));
                }
                let mc = ct.class_id(METHOD_CLASS).expect("builtin");
                let o = self.new_object(mc, AllocSite::Stmt(site), s.fp);
                self.store.insert(CAddr::Field(o.id, METHOD_FIELD.into()), CValue::Method(m));
                self.store.insert(ret, CValue::Obj(o));
                Ok(done(resume))
            }
            ReflectApi::NewInstance => {
                let [arg] = &args[..] else { return Err("newInstance arity".into()) };
                let class = self.class_of(arg.clone())?;
                if ct.is_abstract(class) {
                    return Err("cannot instantiate an abstract class".into());
                }
                let ctor = ct.default_constructor(class);
                if ctor.is_none() && !ct.class(class).stub {
                    return Err("no default constructor".into());
                }
                let o = self.new_object(class, AllocSite::Stmt(site), s.fp);
                self.store.insert(ret, CValue::Obj(o));
                let mut synth = Vec::new();
                if let Some(ctor) = ctor {
                    synth.push(Synth::CallInit { ctor, obj: o, site });
                }
                synth.push(Synth::BindRet(o));
                let code = match resume {
                    Code::Seq { prefix, method, pc } => Code::Seq {
                        prefix: synth.into_iter().chain(prefix).collect(),
                        method,
                        pc,
                    },
                    Code::Halt => Code::Halt,
                };
                Ok(done(code))
            }
            ReflectApi::Invoke => {
                let [mo, recv, _] = &args[..] else { return Err("invoke arity".into()) };
                let mo = Self::object(mo.clone(), "method object")?;
                let CValue::Method(m) = self.read(&CAddr::Field(mo.id, METHOD_FIELD.into()))? else {
                    return Err("method object without a method".into());
                };
                let def = &ct.method(m).def;
                let params: Vec<CValue> = def.params.iter().map(opaque_value).collect();
                if def.is_static() {
                    return self.apply(s, m, None, params, resume, site);
                }
                let recv = Self::object(recv.clone(), "reflective receiver")?;
                if !ct.is_subclass(recv.class, ct.method(m).class) {
                    return Err("receiver does not have the reflected method".into());
                }
                let target = ct.resolve(recv.class, &def.name).map_err(|e| e.to_string())?;
                self.apply(s, target, Some(recv), params, resume, site)
            }
        }
    }
}

fn eval_op(op: AtomicOp, vs: &[CValue]) -> Res<CValue> {
    use CValue::{Bool, Int};
    let bad = || Err(format!("`{}` applied to {vs:?}", op.as_str()));
    Ok(match (op, vs) {
        (AtomicOp::Add, [Int(a), Int(b)]) => Int(a.wrapping_add(*b)),
        (AtomicOp::Sub, [Int(a), Int(b)]) => Int(a.wrapping_sub(*b)),
        (AtomicOp::Mul, [Int(a), Int(b)]) => Int(a.wrapping_mul(*b)),
        (AtomicOp::Div, [Int(_), Int(0)]) => return Err("division by zero".into()),
        (AtomicOp::Div, [Int(a), Int(b)]) => Int(a.wrapping_div(*b)),
        (AtomicOp::Lt, [Int(a), Int(b)]) => Bool(a < b),
        (AtomicOp::Gt, [Int(a), Int(b)]) => Bool(a > b),
        (AtomicOp::Not, [Bool(a)]) => Bool(!a),
        (AtomicOp::And, [Bool(a), Bool(b)]) => Bool(*a && *b),
        (AtomicOp::Or, [Bool(a), Bool(b)]) => Bool(*a || *b),
        (AtomicOp::Eq, [a, b]) => Bool(a == b),
        _ => return bad(),
    })
}

/// Runs one entry point on a fresh heap.
pub fn run_concrete(ct: &ClassTable, entry: &EntryPoint, fuel: usize) -> (Trace, Provenance) {
    let mut it = Interpreter::new(ct);
    let t = it.run_entry(entry, fuel);
    (t, it.into_provenance())
}

/// Runs entries in order over one heap.
pub fn run_entries(ct: &ClassTable, entries: &[EntryPoint], fuel: usize) -> (Vec<Trace>, Provenance) {
    let mut it = Interpreter::new(ct);
    let traces = entries.iter().map(|e| it.run_entry(e, fuel)).collect();
    (traces, it.into_provenance())
}

/// The abstraction map for call-site depth `k`: fresh concrete addresses go
/// to the token the abstract allocators would have produced.
pub struct Abstraction<'p> {
    pub prov: &'p Provenance,
    pub k: usize,
}

impl Abstraction<'_> {
    pub fn fp(&self, id: u64) -> FramePointer {
        match &self.prov.frames[id as usize] {
            (None, _) => FramePointer::Root,
            (Some(m), hist) => FramePointer::Frame {
                method: *m,
                ctx: Context(hist.clone()).truncated(self.k),
            },
        }
    }

    pub fn op(&self, id: u64) -> ObjectPointer {
        let (site, hist) = &self.prov.objects[id as usize];
        ObjectPointer {
            site: site.clone(),
            ctx: match site {
                AllocSite::EntryReceiver(_) => Context::empty(),
                AllocSite::Stmt(_) => Context(hist.clone()).truncated(self.k),
            },
        }
    }

    pub fn ka(&self, ka: &CKontAddr) -> KontAddr {
        match ka {
            CKontAddr::Halt => KontAddr::Halt,
            CKontAddr::Call(id) => {
                let (site, hist) = &self.prov.konts[*id as usize];
                KontAddr::Call {
                    site: *site,
                    ctx: Context(hist.clone()).truncated(self.k),
                }
            }
        }
    }

    pub fn object(&self, o: &CObject) -> ObjectValue {
        ObjectValue {
            ptr: self.op(o.id),
            class: o.class,
        }
    }

    pub fn code(&self, c: &Code<CObject>) -> Code {
        match c {
            Code::Halt => Code::Halt,
            Code::Seq { prefix, method, pc } => Code::Seq {
                prefix: prefix
                    .iter()
                    .map(|s| match s {
                        Synth::MoveResult(r) => Synth::MoveResult(r.clone()),
                        Synth::BindRet(o) => Synth::BindRet(self.object(o)),
                        Synth::CallInit { ctor, obj, site } => Synth::CallInit {
                            ctor: *ctor,
                            obj: self.object(obj),
                            site: *site,
                        },
                    })
                    .collect(),
                method: *method,
                pc: *pc,
            },
        }
    }

    pub fn value(&self, v: &CValue) -> AbstractValue {
        AbstractValue::atom(match v {
            CValue::Int(n) => Atom::Int(Flat::Exactly(*n)),
            CValue::Bool(b) => Atom::Bool(Flat::Exactly(*b)),
            CValue::Str(s) => Atom::Str(Flat::Exactly(s.clone())),
            CValue::Null => Atom::Null,
            CValue::Void => Atom::Void,
            CValue::Obj(o) => Atom::Object(self.object(o)),
            CValue::Method(m) => Atom::Method(*m),
            CValue::Kont(CKont::Halt) => Atom::Kont(Kont::Halt),
            CValue::Kont(CKont::Fun { fp, resume, next }) => Atom::Kont(Kont::Fun {
                fp: self.fp(*fp),
                resume: self.code(resume),
                next: self.ka(next),
            }),
        })
    }

    pub fn addr(&self, a: &CAddr) -> Addr {
        match a {
            CAddr::Reg(fp, r) => Addr::Reg(self.fp(*fp), r.clone()),
            CAddr::Field(o, f) => Addr::Field(self.op(*o), f.clone()),
            CAddr::Kont(ka) => Addr::Kont(self.ka(ka)),
        }
    }

    pub fn config(&self, s: &ConcreteState) -> Config {
        Config {
            code: self.code(&s.code),
            fp: self.fp(s.fp),
            ka: self.ka(&s.ka),
        }
    }

    /// Join of the abstractions of every binding.
    pub fn store(&self, s: &CStore) -> Store {
        s.iter().map(|(a, v)| (self.addr(a), self.value(v))).collect()
    }
}

/// Whether `(config, store)` over-approximates the concrete state.
pub fn abstracts_parts(config: &Config, store: &Store, conc: &ConcreteState, alpha: &Abstraction<'_>) -> bool {
    alpha.config(conc) == *config
        && conc
            .store
            .iter()
            .all(|(a, v)| alpha.value(v).leq(store.get(&alpha.addr(a))))
}

pub fn abstracts(abs: &AbstractState, conc: &ConcreteState, alpha: &Abstraction<'_>) -> bool {
    abstracts_parts(&abs.config, &abs.store, conc, alpha)
}

fn code_objects(code: &Code<CObject>) -> Vec<u64> {
    match code {
        Code::Halt => Vec::new(),
        Code::Seq { prefix, .. } => prefix
            .iter()
            .filter_map(|s| match s {
                Synth::CallInit { obj, .. } | Synth::BindRet(obj) => Some(obj.id),
                Synth::MoveResult(_) => None,
            })
            .collect(),
    }
}

/// The concrete store restricted to what the state can reach, mirroring
/// abstract garbage collection.
pub fn concrete_gc(s: &ConcreteState) -> CStore {
    let mut work: Vec<CAddr> = Vec::new();
    let mut frames = BTreeSet::new();
    let mut objects = BTreeSet::new();
    let mut keep: BTreeSet<CAddr> = BTreeSet::new();
    let regs_of = |fp: u64| {
        s.store
            .range(CAddr::Reg(fp, String::new())..)
            .take_while(move |(a, _)| matches!(a, CAddr::Reg(f, _) if *f == fp))
            .map(|(a, _)| a.clone())
            .collect::<Vec<_>>()
    };
    let fields_of = |id: u64| {
        s.store
            .range(CAddr::Field(id, String::new())..)
            .take_while(move |(a, _)| matches!(a, CAddr::Field(o, _) if *o == id))
            .map(|(a, _)| a.clone())
            .collect::<Vec<_>>()
    };
    frames.insert(s.fp);
    work.extend(regs_of(s.fp));
    work.push(CAddr::Kont(s.ka.clone()));
    for o in code_objects(&s.code) {
        if objects.insert(o) {
            work.extend(fields_of(o));
        }
    }
    while let Some(a) = work.pop() {
        let Some(v) = s.store.get(&a) else { continue };
        if !keep.insert(a) {
            continue;
        }
        match v {
            CValue::Obj(o) => {
                if objects.insert(o.id) {
                    work.extend(fields_of(o.id));
                }
            }
            CValue::Kont(CKont::Fun { fp, resume, next }) => {
                if frames.insert(*fp) {
                    work.extend(regs_of(*fp));
                }
                work.push(CAddr::Kont(next.clone()));
                for o in code_objects(resume) {
                    if objects.insert(o) {
                        work.extend(fields_of(o));
                    }
                }
            }
            _ => {}
        }
    }
    s.store
        .iter()
        .filter(|(a, _)| keep.contains(*a))
        .map(|(a, v)| (a.clone(), v.clone()))
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SoundnessReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl SoundnessReport {
    pub fn is_sound(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks that every concrete state of `traces` is over-approximated by
/// some state of the analysis result.
pub fn check_soundness(
    ct: &ClassTable,
    result: &AnalysisResult,
    traces: &[Trace],
    prov: &Provenance,
) -> SoundnessReport {
    let alpha = Abstraction {
        prov,
        k: result.options.k,
    };
    let gc = result.options.gc_active();
    let mut by_config: HashMap<&Config, Vec<usize>> = HashMap::new();
    for (i, n) in result.graph.nodes.iter().enumerate() {
        by_config.entry(&n.config).or_default().push(i);
    }
    let mut report = SoundnessReport::default();
    for t in traces {
        for (step, conc) in t.states.iter().enumerate() {
            report.checked += 1;
            let conc = if gc {
                ConcreteState {
                    store: Arc::new(concrete_gc(conc)),
                    ..conc.clone()
                }
            } else {
                conc.clone()
            };
            let cfg = alpha.config(&conc);
            let candidates = by_config.get(&cfg).map(Vec::as_slice).unwrap_or(&[]);
            let ok = candidates.iter().any(|&i| {
                let store = result.graph.nodes[i].store.as_deref().unwrap_or(&result.store);
                abstracts_parts(&cfg, store, &conc, &alpha)
            });
            if !ok {
                let why = if candidates.is_empty() {
                    "no abstract state has its configuration".to_string()
                } else {
                    let store = result.graph.nodes[candidates[0]].store.as_deref().unwrap_or(&result.store);
                    let missing: Vec<String> = conc
                        .store
                        .iter()
                        .filter(|(a, v)| !alpha.value(v).leq(store.get(&alpha.addr(a))))
                        .take(3)
                        .map(|(a, v)| format!("{} = {v:?}", alpha.addr(a).describe(ct)))
                        .collect();
                    format!("store not covered: {}", missing.join("; "))
                };
                report.failures.push(format!(
                    "{} step {step}: {}: {why}",
                    t.entry,
                    cfg.describe(ct)
                ));
            }
        }
    }
    report
}

fn value_json(v: &CValue, ct: &ClassTable) -> Json {
    match v {
        CValue::Int(n) => json!(n),
        CValue::Bool(b) => json!(b),
        CValue::Str(s) => json!({ "string": s }),
        CValue::Null => Json::Null,
        CValue::Void => json!("void"),
        CValue::Obj(o) => json!({ "object": o.describe(ct) }),
        CValue::Method(m) => json!({ "method": ct.method(*m).qualified }),
        CValue::Kont(CKont::Halt) => json!({ "kont": "halt" }),
        CValue::Kont(CKont::Fun { fp, resume, next }) => json!({
            "kont": { "fp": fp, "resume": resume.describe(ct), "next": kont_addr_str(next) }
        }),
    }
}

fn kont_addr_str(k: &CKontAddr) -> String {
    match k {
        CKontAddr::Halt => "ka0".to_string(),
        CKontAddr::Call(n) => format!("k{n}"),
    }
}

fn addr_str(a: &CAddr) -> String {
    match a {
        CAddr::Reg(fp, r) => format!("fp{fp}.{r}"),
        CAddr::Field(o, f) => format!("#{o}.{f}"),
        CAddr::Kont(k) => kont_addr_str(k),
    }
}

impl Trace {
    pub fn to_json(&self, ct: &ClassTable) -> Json {
        let outcome = match &self.outcome {
            Outcome::Halted => json!({ "kind": "halted" }),
            Outcome::Error(e) => json!({ "kind": "error", "message": e }),
            Outcome::OutOfFuel => json!({ "kind": "out-of-fuel" }),
        };
        let states: Vec<Json> = self
            .states
            .iter()
            .map(|s| {
                let site = match &s.code {
                    Code::Seq { prefix, method, pc } if prefix.is_empty() => Some(StmtId { method: *method, pc: *pc }),
                    _ => None,
                };
                json!({
                    "code": s.code.describe(ct),
                    "statement": site.and_then(|st| ct.method(st.method).def.body.get(st.pc as usize)).map(|st| st.to_string()),
                    "fp": s.fp,
                    "ka": kont_addr_str(&s.ka),
                    "store": s.store.iter().map(|(a, v)| json!([addr_str(a), value_json(v, ct)])).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({ "entry": self.entry, "outcome": outcome, "states": states })
    }
}
