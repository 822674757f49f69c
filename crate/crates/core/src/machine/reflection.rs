//! Interceptors for the reflection API: string constants, class objects,
//! method objects, reflective instantiation and reflective invocation.

use std::collections::BTreeSet;

use super::{alloc_op, top_of, AnalysisEvent, ReflectApi, RuleTag, Stepper};
use crate::class_table::{
    internal_class_name, MethodId, CLASS_CLASS, CLASS_NAME_FIELD, METHOD_CLASS, METHOD_FIELD,
    STRING_CLASS, STRING_VALUE_FIELD,
};
use crate::domain::{AbstractValue, Addr, Code, Flat, ObjectValue, Store, Synth};
use crate::syntax::{Invoke, InvokeKind};

/// Which interceptor, if any, handles a call.
pub fn reflect_api(inv: &Invoke) -> Option<ReflectApi> {
    let api = match (inv.kind, inv.class.as_str(), inv.method.as_str()) {
        (InvokeKind::Static, CLASS_CLASS, "forName") => ReflectApi::ForName,
        (InvokeKind::Virtual, CLASS_CLASS, "getMethod") => ReflectApi::GetMethod,
        (InvokeKind::Virtual, CLASS_CLASS, "newInstance") => ReflectApi::NewInstance,
        (InvokeKind::Virtual, METHOD_CLASS, "invoke") => ReflectApi::Invoke,
        _ => return None,
    };
    Some(api)
}

impl Stepper<'_, '_> {
    pub(super) fn const_string(&mut self, r: &str, lit: &str) {
        let Some(cls) = self.m.ct.class_id(STRING_CLASS) else {
            unreachable!("java/lang/String is always present")
        };
        let op = alloc_op(self.cfg, &self.m.policy);
        let obj = ObjectValue { ptr: op.clone(), class: cls };
        let delta = Store::new()
            .with(self.reg(r), AbstractValue::object(obj))
            .with(Addr::Field(op.clone(), STRING_VALUE_FIELD.into()), AbstractValue::string(lit));
        self.out.events.push(AnalysisEvent::Alloc { ptr: op, class: cls });
        self.emit(self.advanced(), delta, RuleTag::ConstString);
    }

    /// Handles `inv` if it names a reflection API; returns false otherwise.
    pub(super) fn intercept(&mut self, inv: &Invoke, resume: Code) -> bool {
        let Some(api) = reflect_api(inv) else {
            return false;
        };
        let site = self.site().expect("invoke at a body statement");
        self.out.events.push(AnalysisEvent::Reflection { api, site });
        let expected = match api {
            ReflectApi::ForName | ReflectApi::NewInstance => 1,
            ReflectApi::GetMethod | ReflectApi::Invoke => 3,
        };
        // The argument-types array of getMethod may be omitted.
        let ok = inv.args.len() == expected || (api == ReflectApi::GetMethod && inv.args.len() == 2);
        if !ok {
            self.diag(format!("`{}` called with {} argument(s)", api.qualified(), inv.args.len()));
            return true;
        }
        match api {
            ReflectApi::ForName => self.for_name(inv, resume),
            ReflectApi::GetMethod => self.get_method(inv, resume),
            ReflectApi::NewInstance => self.new_instance(inv, resume),
            ReflectApi::Invoke => self.reflect_invoke(inv, resume),
        }
        true
    }

    fn objects_of_class(&mut self, v: &AbstractValue, class: &str, layer: &str) -> Vec<ObjectValue> {
        let cid = self.m.ct.class_id(class);
        let objs: Vec<ObjectValue> = v
            .objects()
            .iter()
            .filter(|o| Some(o.class) == cid)
            .cloned()
            .collect();
        if objs.is_empty() {
            self.diag(format!("reflection: no {layer} objects"));
        }
        objs
    }

    /// Literal contents of the given string objects; unknown contents are
    /// reported against `layer`.
    fn string_contents(&mut self, strings: &[ObjectValue], layer: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for s in strings {
            let v = self.store.get(&Addr::Field(s.ptr.clone(), STRING_VALUE_FIELD.into()));
            match v.strings() {
                Flat::Exactly(text) => {
                    out.insert(text.clone());
                }
                Flat::Top => self.diag(format!("reflection: unknown {layer} (string is Top)")),
                Flat::Bot => self.diag(format!("reflection: {layer} string has no value")),
            }
        }
        out
    }

    /// Class names reachable from class objects in `v`.
    fn class_names(&mut self, v: &AbstractValue) -> BTreeSet<String> {
        let classes = self.objects_of_class(v, CLASS_CLASS, "class");
        let mut strings = Vec::new();
        for c in &classes {
            let names = self.store.get(&Addr::Field(c.ptr.clone(), CLASS_NAME_FIELD.into()));
            strings.extend(names.objects().iter().cloned());
        }
        if !classes.is_empty() && strings.is_empty() {
            self.diag("reflection: class object without a name string");
        }
        self.string_contents(&strings, "class name")
            .into_iter()
            .map(|n| internal_class_name(&n))
            .collect()
    }

    fn for_name(&mut self, inv: &Invoke, resume: Code) {
        let arg = self.eval(&inv.args[0]);
        let strings = self.objects_of_class(&arg, STRING_CLASS, "string");
        if strings.is_empty() {
            self.emit(resume, Store::new(), RuleTag::ForName);
            return;
        }
        let cls = self.m.ct.class_id(CLASS_CLASS).expect("builtin class");
        let op = alloc_op(self.cfg, &self.m.policy);
        let names = AbstractValue::from_atoms(strings.into_iter().map(crate::domain::Atom::Object));
        let obj = ObjectValue { ptr: op.clone(), class: cls };
        let delta = Store::new()
            .with(Addr::Field(op.clone(), CLASS_NAME_FIELD.into()), names)
            .with(self.reg(crate::syntax::RET), AbstractValue::object(obj));
        self.out.events.push(AnalysisEvent::Alloc { ptr: op, class: cls });
        self.emit(resume, delta, RuleTag::ForName);
    }

    fn get_method(&mut self, inv: &Invoke, resume: Code) {
        let recv = self.eval(&inv.args[0]);
        let class_names = self.class_names(&recv);
        let name_arg = self.eval(&inv.args[1]);
        let name_strings = self.objects_of_class(&name_arg, STRING_CLASS, "method-name string");
        let method_names = self.string_contents(&name_strings, "method name");
        let mut resolved: BTreeSet<MethodId> = BTreeSet::new();
        for c in &class_names {
            let Some(cid) = self.m.ct.class_id(c) else {
                self.diag(format!("reflection: unknown class `{c}`"));
                continue;
            };
            for name in &method_names {
                match self.m.ct.resolve(cid, name) {
                    Ok(m) if self.m.ct.method(m).def.is_public() => {
                        resolved.insert(m);
                    }
                    Ok(m) => self.diag(format!(
                        "reflection: `{}` is not public",
                        self.m.ct.method(m).qualified
                    )),
                    Err(e) => self.diag(format!("reflection: {e}")),
                }
            }
        }
        if resolved.is_empty() {
            self.diag("unresolved reflective method");
            return;
        }
        let cls = self.m.ct.class_id(METHOD_CLASS).expect("builtin class");
        let op = alloc_op(self.cfg, &self.m.policy);
        let mut methods = AbstractValue::empty();
        for m in resolved {
            methods.insert(crate::domain::Atom::Method(m));
        }
        let obj = ObjectValue { ptr: op.clone(), class: cls };
        let delta = Store::new()
            .with(Addr::Field(op.clone(), METHOD_FIELD.into()), methods)
            .with(self.reg(crate::syntax::RET), AbstractValue::object(obj));
        self.out.events.push(AnalysisEvent::Alloc { ptr: op, class: cls });
        self.emit(resume, delta, RuleTag::GetMethod);
    }

    fn new_instance(&mut self, inv: &Invoke, resume: Code) {
        let recv = self.eval(&inv.args[0]);
        let site = self.site().expect("invoke at a body statement");
        for c in self.class_names(&recv) {
            let Some(cid) = self.m.ct.class_id(&c) else {
                self.diag(format!("reflection: unknown class `{c}`"));
                continue;
            };
            if self.m.ct.is_abstract(cid) {
                self.diag(format!("reflection: cannot instantiate abstract class `{c}`"));
                continue;
            }
            let ctor = self.m.ct.default_constructor(cid);
            if ctor.is_none() && !self.m.ct.class(cid).stub {
                self.diag(format!("reflection: `{c}` has no default constructor"));
                continue;
            }
            let op = alloc_op(self.cfg, &self.m.policy);
            let obj = ObjectValue { ptr: op.clone(), class: cid };
            let mut delta = self.m.init_object(&op, cid);
            delta.bind(self.reg(crate::syntax::RET), &AbstractValue::object(obj.clone()));
            self.out.events.push(AnalysisEvent::Alloc { ptr: op, class: cid });
            let mut synth = Vec::new();
            // Stub classes without a declared constructor get an empty one.
            if let Some(ctor) = ctor {
                synth.push(Synth::CallInit { ctor, obj: obj.clone(), site });
            }
            synth.push(Synth::BindRet(obj));
            let code = match resume.clone() {
                Code::Seq { prefix, method, pc } => Code::Seq {
                    prefix: synth.into_iter().chain(prefix).collect(),
                    method,
                    pc,
                },
                Code::Halt => Code::Halt,
            };
            self.emit(code, delta, RuleTag::NewInstance);
        }
    }

    fn reflect_invoke(&mut self, inv: &Invoke, resume: Code) {
        let recv = self.eval(&inv.args[0]);
        let method_objs = self.objects_of_class(&recv, METHOD_CLASS, "method");
        let mut targets: BTreeSet<MethodId> = BTreeSet::new();
        for mo in &method_objs {
            targets.extend(
                self.store
                    .get(&Addr::Field(mo.ptr.clone(), METHOD_FIELD.into()))
                    .methods()
                    .iter()
                    .copied(),
            );
        }
        if targets.is_empty() {
            if !method_objs.is_empty() {
                self.diag("reflection: method object resolves no methods");
            }
            return;
        }
        let site = self.site().expect("invoke at a body statement");
        let receivers = self.eval(&inv.args[1]);
        for m in targets {
            let def = &self.m.ct.method(m).def;
            let params: Vec<AbstractValue> = def.params.iter().map(top_of).collect();
            if def.is_static() {
                self.record_call(m, site, true);
                self.apply_method(m, None, params, resume.clone(), RuleTag::ReflectInvoke);
                continue;
            }
            let owner = self.m.ct.method(m).class;
            if receivers.objects().is_empty() {
                self.diag(format!(
                    "reflection: instance method `{}` invoked without a receiver object",
                    self.m.ct.method(m).qualified
                ));
            }
            let name = def.name.clone();
            for obj in receivers.objects().clone() {
                if !self.m.ct.is_subclass(obj.class, owner) {
                    self.diag(format!(
                        "reflection: receiver of class `{}` does not declare `{}`",
                        self.m.ct.class_name(obj.class),
                        self.m.ct.method(m).qualified
                    ));
                    continue;
                }
                match self.m.ct.resolve(obj.class, &name) {
                    Ok(target) => {
                        self.record_call(target, site, true);
                        self.apply_method(
                            target,
                            Some(AbstractValue::object(obj)),
                            params.clone(),
                            resume.clone(),
                            RuleTag::ReflectInvoke,
                        );
                    }
                    Err(e) => self.diag(e.to_string()),
                }
            }
        }
    }
}
