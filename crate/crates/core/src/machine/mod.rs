//! The abstract transition relation over machine states.

mod alloc;
pub mod eval;
mod reflection;

use serde::Serialize;

pub use alloc::{alloc_fp, alloc_k, alloc_op, current_site, AllocationPolicy, PolicyMode};
pub use eval::{apply_op, eval_atomic, eval_field};
pub use reflection::reflect_api;

use crate::class_table::{ClassId, ClassTable, MethodId};
use crate::domain::{
    AbstractState, AbstractValue, Addr, Code, Config, Describe, FramePointer, Kont, KontAddr,
    Lattice, ObjectPointer, ObjectValue, StmtId, Store, Synth,
};
use crate::syntax::{param_register, AExp, Invoke, InvokeKind, Rhs, Stmt, Type, RET, THIS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReflectApi {
    ForName,
    GetMethod,
    NewInstance,
    Invoke,
}

impl ReflectApi {
    pub fn qualified(self) -> &'static str {
        match self {
            ReflectApi::ForName => "java/lang/Class/forName",
            ReflectApi::GetMethod => "java/lang/Class/getMethod",
            ReflectApi::NewInstance => "java/lang/Class/newInstance",
            ReflectApi::Invoke => "java/lang/reflect/Method/invoke",
        }
    }
}

/// Facts observed while stepping one state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnalysisEvent {
    /// A call reached a stub (library) method.
    ApiCall {
        api: MethodId,
        site: StmtId,
        reflective: bool,
    },
    /// A call resolved to `target`.
    Call {
        target: MethodId,
        site: StmtId,
        reflective: bool,
    },
    Alloc {
        ptr: ObjectPointer,
        class: ClassId,
    },
    Reflection {
        api: ReflectApi,
        site: StmtId,
    },
    Diagnostic {
        site: Option<StmtId>,
        message: String,
    },
}

impl AnalysisEvent {
    pub fn to_json(&self, ct: &ClassTable) -> serde_json::Value {
        use serde_json::json;
        match self {
            AnalysisEvent::ApiCall { api, site, reflective } => json!({
                "kind": "api-call",
                "api": ct.method(*api).qualified,
                "site": site.describe(ct),
                "reflective": reflective,
            }),
            AnalysisEvent::Call { target, site, reflective } => json!({
                "kind": "call",
                "target": ct.method(*target).qualified,
                "site": site.describe(ct),
                "reflective": reflective,
            }),
            AnalysisEvent::Alloc { ptr, class } => json!({
                "kind": "alloc",
                "pointer": ptr.describe(ct),
                "class": ct.class_name(*class),
            }),
            AnalysisEvent::Reflection { api, site } => json!({
                "kind": "reflection",
                "api": api.qualified(),
                "site": site.describe(ct),
            }),
            AnalysisEvent::Diagnostic { site, message } => json!({
                "kind": "diagnostic",
                "site": site.map(|s| s.describe(ct)),
                "message": message,
            }),
        }
    }
}

/// Which rule produced an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleTag {
    Advance,
    Goto,
    IfTaken,
    IfFallthrough,
    Assign,
    New,
    FieldGet,
    FieldPut,
    Invoke,
    Return,
    Halt,
    ConstString,
    ForName,
    GetMethod,
    NewInstance,
    ReflectInvoke,
    MoveResult,
    CallInit,
    BindRet,
}

impl RuleTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleTag::Advance => "advance",
            RuleTag::Goto => "goto",
            RuleTag::IfTaken => "if-taken",
            RuleTag::IfFallthrough => "if-fallthrough",
            RuleTag::Assign => "assign",
            RuleTag::New => "new",
            RuleTag::FieldGet => "field-get",
            RuleTag::FieldPut => "field-put",
            RuleTag::Invoke => "invoke",
            RuleTag::Return => "return",
            RuleTag::Halt => "halt",
            RuleTag::ConstString => "const-string",
            RuleTag::ForName => "for-name",
            RuleTag::GetMethod => "get-method",
            RuleTag::NewInstance => "new-instance",
            RuleTag::ReflectInvoke => "reflect-invoke",
            RuleTag::MoveResult => "move-result",
            RuleTag::CallInit => "call-init",
            RuleTag::BindRet => "bind-ret",
        }
    }
}

/// One successor configuration together with the bindings its rule joins
/// into the store.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Successor {
    pub config: Config,
    pub delta: Store,
    pub rule: RuleTag,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepOutcome {
    pub successors: Vec<Successor>,
    pub events: Vec<AnalysisEvent>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepResult {
    pub successors: Vec<AbstractState>,
    pub events: Vec<AnalysisEvent>,
}

/// Opaque value of a declared type: what a stub returns and what an
/// unknown argument may be.
pub fn top_of(ty: &Type) -> AbstractValue {
    match ty {
        Type::Int | Type::Byte | Type::Char => AbstractValue::top_int(),
        Type::Boolean => AbstractValue::top_bool(),
        Type::Void => AbstractValue::void(),
        Type::Class(_) => AbstractValue::null(),
    }
}

/// Value a freshly allocated field of type `ty` starts with.
pub fn default_of(ty: &Type) -> AbstractValue {
    match ty {
        Type::Int | Type::Byte | Type::Char => AbstractValue::int(0),
        Type::Boolean => AbstractValue::boolean(false),
        Type::Void => AbstractValue::empty(),
        Type::Class(_) => AbstractValue::null(),
    }
}

/// The abstract machine for one program and allocation policy.
#[derive(Clone, Copy)]
pub struct Machine<'a> {
    pub ct: &'a ClassTable,
    pub policy: AllocationPolicy,
}

impl<'a> Machine<'a> {
    pub fn new(ct: &'a ClassTable, policy: AllocationPolicy) -> Self {
        Machine { ct, policy }
    }

    /// Initial configuration for `entry`.
    pub fn inject_config(entry: MethodId) -> Config {
        Config {
            code: Code::at(entry, 0),
            fp: FramePointer::Root,
            ka: KontAddr::Halt,
        }
    }

    /// Store every injected state starts with: the halt continuation.
    pub fn inject_store() -> Store {
        Store::new().with(Addr::Kont(KontAddr::Halt), AbstractValue::kont(Kont::Halt))
    }

    pub fn inject(&self, entry: MethodId) -> AbstractState {
        AbstractState::new(Self::inject_config(entry), Self::inject_store())
    }

    /// Bindings that give every field of a new `class` object its default.
    pub fn init_object(&self, op: &ObjectPointer, class: ClassId) -> Store {
        self.ct
            .all_fields(class)
            .into_iter()
            .map(|f| (Addr::Field(op.clone(), f.name.clone()), default_of(&f.ty)))
            .collect()
    }

    pub fn step(&self, s: &AbstractState) -> StepResult {
        let out = self.step_config(&s.config, &s.store);
        StepResult {
            successors: out
                .successors
                .into_iter()
                .map(|succ| AbstractState::new(succ.config, s.store.join(&succ.delta)))
                .collect(),
            events: out.events,
        }
    }

    /// Successors of `cfg` against `store`. The successor stores are
    /// `store ⊔ delta`; they are not materialized here so that the engine
    /// can join deltas into a shared store.
    pub fn step_config(&self, cfg: &Config, store: &Store) -> StepOutcome {
        let mut st = Stepper {
            m: self,
            cfg,
            store,
            out: StepOutcome::default(),
        };
        st.run();
        st.out
    }
}

pub(crate) struct Stepper<'s, 'a> {
    pub m: &'s Machine<'a>,
    pub cfg: &'s Config,
    pub store: &'s Store,
    pub out: StepOutcome,
}

impl<'a> Stepper<'_, 'a> {
    fn ct(&self) -> &'a ClassTable {
        self.m.ct
    }

    pub fn site(&self) -> Option<StmtId> {
        current_site(&self.cfg.code)
    }

    pub fn diag(&mut self, message: impl Into<String>) {
        let site = self.site();
        self.out.events.push(AnalysisEvent::Diagnostic {
            site,
            message: message.into(),
        });
    }

    pub fn eval(&mut self, ae: &AExp) -> AbstractValue {
        let mut diags = Vec::new();
        let v = eval_atomic(self.m.ct, ae, &self.cfg.fp, self.store, &mut diags);
        for d in diags {
            self.diag(d);
        }
        v
    }

    pub fn reg(&self, name: &str) -> Addr {
        Addr::Reg(self.cfg.fp.clone(), name.to_string())
    }

    pub fn emit(&mut self, code: Code, delta: Store, rule: RuleTag) {
        self.emit_full(code, self.cfg.fp.clone(), self.cfg.ka.clone(), delta, rule);
    }

    fn emit_full(&mut self, code: Code, fp: FramePointer, ka: KontAddr, delta: Store, rule: RuleTag) {
        self.out.successors.push(Successor {
            config: Config { code, fp, ka },
            delta,
            rule,
        });
    }

    /// Code after the head instruction.
    pub fn advanced(&self) -> Code {
        match &self.cfg.code {
            Code::Halt => Code::Halt,
            Code::Seq { prefix, method, pc } if !prefix.is_empty() => Code::Seq {
                prefix: prefix[1..].to_vec(),
                method: *method,
                pc: *pc,
            },
            Code::Seq { method, pc, .. } => Code::at(*method, pc + 1),
        }
    }

    /// Code a call returns to: the next statement, preceded by a result move
    /// when the call was the right-hand side of an assignment.
    pub fn after_call(&self, stmt: &Stmt) -> Code {
        let next = self.advanced();
        match (stmt, next) {
            (Stmt::Assign(r, Rhs::Invoke(_)), Code::Seq { mut prefix, method, pc }) => {
                prefix.insert(0, Synth::MoveResult(r.clone()));
                Code::Seq { prefix, method, pc }
            }
            (_, next) => next,
        }
    }

    fn run(&mut self) {
        let (prefix, method, pc) = match &self.cfg.code {
            Code::Halt => return,
            Code::Seq { prefix, method, pc } => (prefix, *method, *pc),
        };
        if let Some(head) = prefix.first() {
            self.step_synth(&head.clone());
            return;
        }
        let body = &self.m.ct.method(method).def.body;
        match body.get(pc as usize) {
            Some(stmt) => self.step_stmt(&stmt.clone()),
            None => {
                // Falling off the end returns an opaque value of the declared
                // type; stub methods are usually written with empty bodies.
                let v = top_of(&self.ct().method(method).def.ret);
                self.do_return(v);
            }
        }
    }

    fn step_synth(&mut self, head: &Synth<ObjectValue>) {
        match head {
            Synth::MoveResult(r) => {
                let v = self.store.get(&self.reg(RET)).clone();
                if v.is_empty() {
                    self.diag("call left no value in `ret`");
                }
                let delta = Store::new().with(self.reg(r), v);
                self.emit(self.advanced(), delta, RuleTag::MoveResult);
            }
            Synth::BindRet(obj) => {
                let delta = Store::new().with(self.reg(RET), AbstractValue::object(obj.clone()));
                self.emit(self.advanced(), delta, RuleTag::BindRet);
            }
            Synth::CallInit { ctor, obj, site } => {
                self.record_call(*ctor, *site, true);
                let resume = self.advanced();
                self.apply_method(
                    *ctor,
                    Some(AbstractValue::object(obj.clone())),
                    Vec::new(),
                    resume,
                    RuleTag::CallInit,
                );
            }
        }
    }

    fn step_stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::Label(_) | Stmt::Nop | Stmt::Line(_) => {
                self.emit(self.advanced(), Store::new(), RuleTag::Advance)
            }
            Stmt::Goto(l) => {
                let code = self.jump(l);
                self.emit(code, Store::new(), RuleTag::Goto);
            }
            Stmt::If(guard, l) => {
                let v = self.eval(guard);
                let unknown = v.bools().is_bot();
                if unknown {
                    self.diag("`if` guard has no boolean value; both branches explored");
                }
                if unknown || v.may_be(true) {
                    let code = self.jump(l);
                    self.emit(code, Store::new(), RuleTag::IfTaken);
                }
                if unknown || v.may_be(false) {
                    self.emit(self.advanced(), Store::new(), RuleTag::IfFallthrough);
                }
            }
            Stmt::Assign(r, Rhs::Atomic(ae)) => {
                let v = self.eval(ae);
                let delta = Store::new().with(self.reg(r), v);
                self.emit(self.advanced(), delta, RuleTag::Assign);
            }
            Stmt::Assign(r, Rhs::New(class)) => {
                let Some(cid) = self.ct().class_id(class) else {
                    self.diag(format!("`new` of unknown class `{class}`"));
                    return;
                };
                let op = alloc_op(self.cfg, &self.m.policy);
                let obj = ObjectValue { ptr: op.clone(), class: cid };
                let mut delta = self.m.init_object(&op, cid);
                delta.bind(self.reg(r), &AbstractValue::object(obj));
                self.out.events.push(AnalysisEvent::Alloc { ptr: op, class: cid });
                self.emit(self.advanced(), delta, RuleTag::New);
            }
            Stmt::FieldGet(r, o, f) => {
                let mut diags = Vec::new();
                let v = eval_field(self.m.ct, o, &self.cfg.fp, self.store, f, &mut diags);
                for d in diags {
                    self.diag(d);
                }
                let delta = Store::new().with(self.reg(r), v);
                self.emit(self.advanced(), delta, RuleTag::FieldGet);
            }
            Stmt::FieldPut(o, f, val) => {
                let base = self.eval(o);
                let v = self.eval(val);
                if base.objects().is_empty() {
                    self.diag(format!("field-put `.{f}` on a value with no objects"));
                }
                let delta: Store = base
                    .objects()
                    .iter()
                    .map(|obj| (Addr::Field(obj.ptr.clone(), f.clone()), v.clone()))
                    .collect();
                self.emit(self.advanced(), delta, RuleTag::FieldPut);
            }
            Stmt::ConstString(r, lit) => self.const_string(r, lit),
            Stmt::Return(ae) => {
                let v = self.eval(ae);
                self.do_return(v);
            }
            Stmt::Invoke(inv) | Stmt::Assign(_, Rhs::Invoke(inv)) => {
                let resume = self.after_call(stmt);
                if !self.intercept(inv, resume.clone()) {
                    self.invoke(inv, resume);
                }
            }
        }
    }

    fn jump(&self, label: &str) -> Code {
        let m = self.cfg.code.method().expect("jump from halted code");
        let pc = self
            .ct()
            .method(m)
            .labels
            .get(label)
            .expect("labels are checked by the class table");
        Code::at(m, pc as u32)
    }

    fn do_return(&mut self, v: AbstractValue) {
        let konts = self.store.get(&Addr::Kont(self.cfg.ka.clone())).konts().clone();
        if konts.is_empty() {
            self.diag("return with no continuation");
        }
        for k in konts {
            match k {
                Kont::Fun { fp, resume, next } => {
                    let delta = Store::new().with(Addr::Reg(fp.clone(), RET.into()), v.clone());
                    self.emit_full(resume, fp, next, delta, RuleTag::Return);
                }
                Kont::Halt => {
                    let delta = Store::new().with(self.reg(RET), v.clone());
                    self.emit(Code::Halt, delta, RuleTag::Halt);
                }
            }
        }
    }

    pub fn record_call(&mut self, target: MethodId, site: StmtId, reflective: bool) {
        self.out.events.push(AnalysisEvent::Call {
            target,
            site,
            reflective,
        });
        if self.ct().is_stub_method(target) {
            self.out.events.push(AnalysisEvent::ApiCall {
                api: target,
                site,
                reflective,
            });
        }
    }

    fn invoke(&mut self, inv: &Invoke, resume: Code) {
        let site = self.site().expect("invoke at a body statement");
        let args: Vec<AbstractValue> = inv.args.iter().map(|a| self.eval(a)).collect();
        match inv.kind {
            InvokeKind::Static => match self.ct().resolve_by_name(&inv.class, &inv.method) {
                Ok(m) => {
                    self.record_call(m, site, false);
                    self.apply_method(m, None, args, resume, RuleTag::Invoke);
                }
                Err(e) => self.diag(e.to_string()),
            },
            kind => {
                let Some((recv, rest)) = args.split_first() else {
                    self.diag(format!("{} without a receiver", kind.as_str()));
                    return;
                };
                if recv.objects().is_empty() {
                    self.diag(format!("call to `{}` on a value with no objects", inv.qualified()));
                    return;
                }
                let fixed = match kind {
                    InvokeKind::Direct => Some(self.ct().resolve_by_name(&inv.class, &inv.method)),
                    InvokeKind::Super => {
                        let cur = self.ct().method(site.method).class;
                        match self.ct().class(cur).superclass {
                            Some(sup) => Some(self.ct().resolve(sup, &inv.method)),
                            None => {
                                self.diag("invoke-super from the root class");
                                return;
                            }
                        }
                    }
                    _ => None,
                };
                // Group receivers by the method they dispatch to.
                let mut groups: std::collections::BTreeMap<MethodId, AbstractValue> =
                    Default::default();
                for obj in recv.objects() {
                    let target = match &fixed {
                        Some(r) => r.clone(),
                        None => self.ct().resolve(obj.class, &inv.method),
                    };
                    match target {
                        Ok(m) => {
                            groups
                                .entry(m)
                                .or_default()
                                .join_in_place(&AbstractValue::object(obj.clone()));
                        }
                        Err(e) => self.diag(e.to_string()),
                    }
                }
                for (m, this) in groups {
                    self.record_call(m, site, false);
                    self.apply_method(m, Some(this), rest.to_vec(), resume.clone(), RuleTag::Invoke);
                }
            }
        }
    }

    /// Enters `m` with `this` and parameters bound in a fresh frame; the
    /// caller's remaining code is saved in a continuation.
    pub fn apply_method(
        &mut self,
        m: MethodId,
        this: Option<AbstractValue>,
        args: Vec<AbstractValue>,
        resume: Code,
        rule: RuleTag,
    ) {
        let def = &self.ct().method(m).def;
        if args.len() != def.params.len() {
            self.diag(format!(
                "`{}` expects {} argument(s), got {}",
                self.ct().method(m).qualified,
                def.params.len(),
                args.len()
            ));
            return;
        }
        if def.is_static() == this.is_some() {
            let what = if def.is_static() { "static" } else { "instance" };
            self.diag(format!("`{}` is an {what} method", self.ct().method(m).qualified));
            return;
        }
        let fp = alloc_fp(self.cfg, m, &self.m.policy);
        let ka = alloc_k(self.cfg, &self.m.policy);
        let mut delta = Store::new().with(
            Addr::Kont(ka.clone()),
            AbstractValue::kont(Kont::Fun {
                fp: self.cfg.fp.clone(),
                resume,
                next: self.cfg.ka.clone(),
            }),
        );
        if let Some(this) = this {
            delta.bind(Addr::Reg(fp.clone(), THIS.into()), &this);
        }
        for (i, v) in args.iter().enumerate() {
            delta.bind(Addr::Reg(fp.clone(), param_register(i)), v);
        }
        self.emit_full(Code::at(m, 0), fp, ka, delta, rule);
    }
}

