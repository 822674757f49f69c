//! Indexed class/method tables, label maps and method resolution.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{FrontendError, ResolveError};
use crate::sexp::Pos;
use crate::syntax::*;

pub const STRING_CLASS: &str = "java/lang/String";
pub const CLASS_CLASS: &str = "java/lang/Class";
pub const METHOD_CLASS: &str = "java/lang/reflect/Method";
/// Field of a string object holding its abstract contents.
pub const STRING_VALUE_FIELD: &str = "value";
/// Field of a class object pointing at the string naming the class.
pub const CLASS_NAME_FIELD: &str = "class-name";
/// Field of a method object holding the resolved method references.
pub const METHOD_FIELD: &str = "method";

/// Name prefixes treated as platform library code even without `stub`.
const LIBRARY_PREFIXES: &[&str] = &[
    "java/",
    "javax/",
    "android/",
    "androidx/",
    "dalvik/",
    "org/apache/",
    "org/json/",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ClassId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MethodId(pub u32);

/// Label -> index of the `(label l)` statement that starts the suffix.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelMap {
    starts: BTreeMap<String, usize>,
}

impl LabelMap {
    pub fn get(&self, label: &str) -> Option<usize> {
        self.starts.get(label).copied()
    }

    /// The statement sequence beginning at `label`.
    pub fn suffix<'b>(&self, body: &'b [Stmt], label: &str) -> Option<&'b [Stmt]> {
        self.get(label).map(|i| &body[i..])
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = (&str, usize)> {
        self.starts.iter().map(|(l, i)| (l.as_str(), *i))
    }
}

/// Builds the label map of a validated method body.
pub fn build_label_map(m: &MethodDef) -> LabelMap {
    let starts = m
        .body
        .iter()
        .enumerate()
        .filter_map(|(i, s)| match s {
            Stmt::Label(l) => Some((l.clone(), i)),
            _ => None,
        })
        .collect();
    LabelMap { starts }
}

#[derive(Clone, Debug)]
pub struct ClassInfo {
    pub def: ClassDef,
    pub superclass: Option<ClassId>,
    pub builtin: bool,
    pub stub: bool,
    pub methods: BTreeMap<String, MethodId>,
}

#[derive(Clone, Debug)]
pub struct MethodInfo {
    pub class: ClassId,
    pub def: MethodDef,
    pub labels: LabelMap,
    pub qualified: String,
}

#[derive(Clone, Debug)]
pub struct ClassTable {
    classes: Vec<ClassInfo>,
    by_name: HashMap<String, ClassId>,
    methods: Vec<MethodInfo>,
}

fn builtin_classes() -> Vec<ClassDef> {
    let class = |name: &str, sup: &str, fields: &[(&str, &str)]| ClassDef {
        attributes: [Attribute::Public, Attribute::Stub].into_iter().collect(),
        name: name.to_string(),
        superclass: sup.to_string(),
        fields: fields
            .iter()
            .map(|(f, t)| FieldDef {
                attributes: BTreeSet::new(),
                name: f.to_string(),
                ty: Type::parse(t),
                loc: Loc::default(),
            })
            .collect(),
        methods: Vec::new(),
        loc: Loc::default(),
    };
    vec![
        class(ROOT_CLASS, ROOT_CLASS, &[]),
        class(STRING_CLASS, ROOT_CLASS, &[]),
        class(CLASS_CLASS, ROOT_CLASS, &[(CLASS_NAME_FIELD, STRING_CLASS)]),
        class(METHOD_CLASS, ROOT_CLASS, &[]),
    ]
}

impl ClassTable {
    /// Indexes and validates a program. Library classes used by the reflection
    /// model are provided implicitly unless the program declares them.
    pub fn new(program: &Program) -> Result<ClassTable, FrontendError> {
        let mut table = ClassTable {
            classes: Vec::new(),
            by_name: HashMap::new(),
            methods: Vec::new(),
        };
        for c in &program.classes {
            if table.by_name.contains_key(&c.name) {
                return Err(FrontendError::DuplicateClass {
                    name: c.name.clone(),
                    pos: c.loc.0,
                });
            }
            table.add_class(c.clone(), false);
        }
        for c in builtin_classes() {
            if !table.by_name.contains_key(&c.name) {
                table.add_class(c, true);
            }
        }
        table.link()?;
        table.validate()?;
        Ok(table)
    }

    fn add_class(&mut self, def: ClassDef, builtin: bool) {
        let id = ClassId(self.classes.len() as u32);
        let stub = builtin
            || def.attributes.contains(&Attribute::Stub)
            || LIBRARY_PREFIXES.iter().any(|p| def.name.starts_with(p));
        self.by_name.insert(def.name.clone(), id);
        self.classes.push(ClassInfo {
            def,
            superclass: None,
            builtin,
            stub,
            methods: BTreeMap::new(),
        });
    }

    fn link(&mut self) -> Result<(), FrontendError> {
        for i in 0..self.classes.len() {
            let def = &self.classes[i].def;
            let sup = if def.name == ROOT_CLASS {
                None
            } else {
                Some(*self.by_name.get(&def.superclass).ok_or_else(|| {
                    FrontendError::UnknownClass {
                        name: def.superclass.clone(),
                        pos: def.loc.0,
                    }
                })?)
            };
            let cid = ClassId(i as u32);
            let mut methods = BTreeMap::new();
            let class_name = def.name.clone();
            for m in def.methods.clone() {
                if methods.contains_key(&m.name) {
                    return Err(FrontendError::DuplicateMethod {
                        class: class_name,
                        name: m.name.clone(),
                        pos: m.loc.0,
                    });
                }
                let mid = MethodId(self.methods.len() as u32);
                methods.insert(m.name.clone(), mid);
                self.methods.push(MethodInfo {
                    class: cid,
                    labels: build_label_map(&m),
                    qualified: format!("{class_name}/{}", m.name),
                    def: m,
                });
            }
            self.classes[i].superclass = sup;
            self.classes[i].methods = methods;
        }
        // Every chain must reach the root.
        for i in 0..self.classes.len() {
            let mut seen = BTreeSet::new();
            let mut cur = Some(ClassId(i as u32));
            while let Some(c) = cur {
                if !seen.insert(c) {
                    return Err(FrontendError::InheritanceCycle {
                        name: self.classes[i].def.name.clone(),
                    });
                }
                cur = self.classes[c.0 as usize].superclass;
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), FrontendError> {
        for info in &self.classes {
            let mut fields = BTreeSet::new();
            for f in &info.def.fields {
                if !fields.insert(&f.name) {
                    return Err(FrontendError::DuplicateField {
                        class: info.def.name.clone(),
                        name: f.name.clone(),
                        pos: f.loc.0,
                    });
                }
                if let Type::Class(c) = &f.ty {
                    self.require_class(c, f.loc.0)?;
                }
            }
        }
        for m in &self.methods {
            self.validate_method(m)?;
        }
        Ok(())
    }

    fn require_class(&self, name: &str, pos: Pos) -> Result<(), FrontendError> {
        if self.by_name.contains_key(name) {
            Ok(())
        } else {
            Err(FrontendError::UnknownClass {
                name: name.to_string(),
                pos,
            })
        }
    }

    fn validate_method(&self, m: &MethodInfo) -> Result<(), FrontendError> {
        let mut labels = BTreeSet::new();
        for (s, loc) in m.def.body.iter().zip(&m.def.locs) {
            if let Stmt::Label(l) = s {
                if !labels.insert(l.as_str()) {
                    return Err(FrontendError::DuplicateLabel {
                        method: m.qualified.clone(),
                        label: l.clone(),
                        pos: loc.0,
                    });
                }
            }
        }
        for (s, loc) in m.def.body.iter().zip(&m.def.locs) {
            let pos = loc.0;
            let target = match s {
                Stmt::Goto(l) | Stmt::If(_, l) => Some(l),
                _ => None,
            };
            if let Some(l) = target {
                if !labels.contains(l.as_str()) {
                    return Err(FrontendError::DanglingLabel {
                        method: m.qualified.clone(),
                        label: l.clone(),
                        pos,
                    });
                }
            }
            let written = match s {
                Stmt::Assign(n, _) | Stmt::FieldGet(n, _, _) | Stmt::ConstString(n, _) => Some(n),
                _ => None,
            };
            if let Some(n) = written {
                if n == RET || n == THIS {
                    return Err(FrontendError::ReservedRegister {
                        name: n.clone(),
                        pos,
                    });
                }
            }
            if let Stmt::Assign(_, Rhs::New(c)) = s {
                self.require_class(c, pos)?;
            }
        }
        Ok(())
    }

    pub fn class_id(&self, name: &str) -> Option<ClassId> {
        self.by_name.get(name).copied()
    }

    pub fn class(&self, id: ClassId) -> &ClassInfo {
        &self.classes[id.0 as usize]
    }

    pub fn class_name(&self, id: ClassId) -> &str {
        &self.class(id).def.name
    }

    pub fn method(&self, id: MethodId) -> &MethodInfo {
        &self.methods[id.0 as usize]
    }

    pub fn methods(&self) -> impl Iterator<Item = (MethodId, &MethodInfo)> {
        self.methods
            .iter()
            .enumerate()
            .map(|(i, m)| (MethodId(i as u32), m))
    }

    /// Classes in declaration order (program classes first, then implicit ones).
    pub fn classes(&self) -> impl Iterator<Item = (ClassId, &ClassInfo)> {
        self.classes
            .iter()
            .enumerate()
            .map(|(i, c)| (ClassId(i as u32), c))
    }

    pub fn method_by_qualified(&self, qualified: &str) -> Option<MethodId> {
        let (class, method) = qualified.rsplit_once('/')?;
        let cid = self.class_id(class)?;
        self.class(cid).methods.get(method).copied()
    }

    /// The class itself followed by its ancestors up to the root.
    pub fn chain(&self, id: ClassId) -> impl Iterator<Item = ClassId> + '_ {
        std::iter::successors(Some(id), move |c| self.class(*c).superclass)
    }

    pub fn is_subclass(&self, sub: ClassId, sup: ClassId) -> bool {
        self.chain(sub).any(|c| c == sup)
    }

    /// Finds `method` on the nearest ancestor of `class`, the class included.
    pub fn resolve(&self, class: ClassId, method: &str) -> Result<MethodId, ResolveError> {
        for c in self.chain(class) {
            if let Some(m) = self.class(c).methods.get(method) {
                return Ok(*m);
            }
        }
        Err(ResolveError {
            method: method.to_string(),
            chain: self.chain(class).map(|c| self.class_name(c).to_string()).collect(),
        })
    }

    pub fn resolve_by_name(&self, class: &str, method: &str) -> Result<MethodId, ResolveError> {
        match self.class_id(class) {
            Some(c) => self.resolve(c, method),
            None => Err(ResolveError {
                method: method.to_string(),
                chain: vec![class.to_string()],
            }),
        }
    }

    /// Every field declared on the class or inherited, nearest declaration first.
    pub fn all_fields(&self, class: ClassId) -> Vec<&FieldDef> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for c in self.chain(class) {
            for f in &self.class(c).def.fields {
                if seen.insert(f.name.as_str()) {
                    out.push(f);
                }
            }
        }
        out
    }

    /// The zero-argument `<init>` declared on the class itself.
    pub fn default_constructor(&self, class: ClassId) -> Option<MethodId> {
        let m = *self.class(class).methods.get(CONSTRUCTOR)?;
        self.method(m).def.params.is_empty().then_some(m)
    }

    pub fn is_stub_method(&self, m: MethodId) -> bool {
        self.class(self.method(m).class).stub
    }

    pub fn is_abstract(&self, class: ClassId) -> bool {
        self.class(class).def.attributes.contains(&Attribute::Abstract)
    }

    /// Total number of body statements over all methods.
    pub fn statement_count(&self) -> usize {
        self.methods.iter().map(|m| m.def.body.len()).sum()
    }
}

/// Looks up the definition `method_name` resolves to from `class_name`.
pub fn resolve_method<'t>(
    ct: &'t ClassTable,
    class_name: &str,
    method_name: &str,
) -> Result<&'t MethodDef, ResolveError> {
    ct.resolve_by_name(class_name, method_name)
        .map(|m| &ct.method(m).def)
}

/// Converts a `java.lang.Foo` style name to the `java/lang/Foo` form used in
/// bytecode.
pub fn internal_class_name(name: &str) -> String {
    name.replace('.', "/")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;

    fn table(src: &str) -> ClassTable {
        ClassTable::new(&parse_program(src).unwrap()).unwrap()
    }

    fn method(name: &str) -> String {
        format!("(method public {name} () void (throws) (limit 0) (return void))")
    }

    #[test]
    fn label_map_points_at_suffixes() {
        let p = parse_program(
            "(class A extends java/lang/Object () ((method m () void (throws) (limit 0) (label L) (nop) (return void))
              (method n () void (throws) (limit 0) (nop) (label L) (return void))))",
        )
        .unwrap();
        let m = &p.classes[0].methods[0];
        let lm = build_label_map(m);
        assert_eq!(lm.suffix(&m.body, "L").unwrap().len(), 3);
        let n = &p.classes[0].methods[1];
        let ln = build_label_map(n);
        assert_eq!(ln.suffix(&n.body, "L").unwrap().len(), 2);
    }

    #[test]
    fn label_map_matches_brute_force_suffix_scan() {
        let p = parse_program(
            "(class A extends java/lang/Object () ((method m () void (throws) (limit 0)
               (nop) (label a) (nop) (goto b) (label b) (return void))))",
        )
        .unwrap();
        let m = &p.classes[0].methods[0];
        let lm = build_label_map(m);
        assert_eq!(lm.len(), 2);
        // Brute force: every suffix whose head is (label l).
        for start in 0..m.body.len() {
            if let Stmt::Label(l) = &m.body[start] {
                let suffix = lm.suffix(&m.body, l).unwrap();
                assert_eq!(suffix.as_ptr(), m.body[start..].as_ptr());
                assert_eq!(suffix.len(), m.body.len() - start);
            }
        }
    }

    #[test]
    fn resolves_inherited_and_overridden_methods() {
        let ct = table(&format!(
            "(class A extends java/lang/Object () ({} {}))
             (class B extends A () ({}))",
            method("m"),
            method("k"),
            method("k")
        ));
        let m = ct.resolve_by_name("B", "m").unwrap();
        assert_eq!(ct.method(m).qualified, "A/m");
        let k = ct.resolve_by_name("B", "k").unwrap();
        assert_eq!(ct.method(k).qualified, "B/k");
    }

    #[test]
    fn four_deep_chain_resolves_to_root_and_reports_chain_on_miss() {
        let ct = table(&format!(
            "(class D extends C () ())
             (class C extends B () ())
             (class B extends A () ())
             (class A extends java/lang/Object () ({}))",
            method("m")
        ));
        assert_eq!(ct.method(ct.resolve_by_name("D", "m").unwrap()).qualified, "A/m");
        let e = ct.resolve_by_name("D", "zz").unwrap_err();
        assert_eq!(e.chain, vec!["D", "C", "B", "A", "java/lang/Object"]);
    }

    #[test]
    fn resolution_ignores_declaration_order() {
        let a = table(&format!(
            "(class A extends java/lang/Object () ({}))(class B extends A () ())",
            method("m")
        ));
        let b = table(&format!(
            "(class B extends A () ())(class A extends java/lang/Object () ({}))",
            method("m")
        ));
        let ra = resolve_method(&a, "B", "m").unwrap();
        let rb = resolve_method(&b, "B", "m").unwrap();
        assert_eq!(ra, rb);
    }

    #[test]
    fn rejects_duplicates_cycles_and_dangling_labels() {
        let dup = parse_program("(class A extends java/lang/Object () ())(class A extends java/lang/Object () ())");
        assert!(matches!(dup, Err(FrontendError::DuplicateClass { .. })));
        let cyc = parse_program("(class A extends B () ())(class B extends A () ())");
        assert!(matches!(cyc, Err(FrontendError::InheritanceCycle { .. })));
        let over = parse_program(&format!(
            "(class A extends java/lang/Object () ({} {}))",
            method("m"),
            method("m")
        ));
        assert!(matches!(over, Err(FrontendError::DuplicateMethod { .. })));
        let dangling = parse_program(
            "(class A extends java/lang/Object () ((method m () void (throws) (limit 0) (goto nowhere))))",
        );
        assert!(matches!(dangling, Err(FrontendError::DanglingLabel { label, .. }) if label == "nowhere"));
        let reserved = parse_program(
            "(class A extends java/lang/Object () ((method m () void (throws) (limit 0) (assign ret 1) (return void))))",
        );
        assert!(matches!(reserved, Err(FrontendError::ReservedRegister { .. })));
        let field = parse_program("(class A extends java/lang/Object ((field f Missing)) ())");
        assert!(matches!(field, Err(FrontendError::UnknownClass { name, .. }) if name == "Missing"));
    }

    #[test]
    fn library_prefixes_mark_stubs() {
        let ct = table(
            "(class org/apache/http/client/HttpClient extends java/lang/Object () ())
             (class com/example/App extends java/lang/Object () ())
             (stub class com/example/Lib extends java/lang/Object () ())",
        );
        let stub = |n: &str| ct.class(ct.class_id(n).unwrap()).stub;
        assert!(stub("org/apache/http/client/HttpClient"));
        assert!(!stub("com/example/App"));
        assert!(stub("com/example/Lib"));
        assert!(stub("java/lang/String"));
    }
}
