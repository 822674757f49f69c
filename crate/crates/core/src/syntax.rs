//! Abstract syntax of the object-oriented bytecode, and its canonical printer.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::sexp::{write_quoted, Pos};

/// Source location. Ignored by equality and hashing, so a program printed and
/// re-read compares equal to the original regardless of layout.
#[derive(Clone, Copy, Debug, Default, Serialize)]
#[serde(transparent)]
pub struct Loc(pub Pos);

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for Loc {}
impl Hash for Loc {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

/// Name of the register that receives the value of the last call.
pub const RET: &str = "ret";
/// Name of the register holding the receiver inside instance methods.
pub const THIS: &str = "this";
pub const ROOT_CLASS: &str = "java/lang/Object";
pub const CONSTRUCTOR: &str = "<init>";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Public,
    Private,
    Protected,
    Final,
    Abstract,
    Static,
    /// Marks a library class whose methods count as platform API calls.
    Stub,
}

impl Attribute {
    pub fn parse(s: &str) -> Option<Attribute> {
        Some(match s {
            "public" => Attribute::Public,
            "private" => Attribute::Private,
            "protected" => Attribute::Protected,
            "final" => Attribute::Final,
            "abstract" => Attribute::Abstract,
            "static" => Attribute::Static,
            "stub" => Attribute::Stub,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Public => "public",
            Attribute::Private => "private",
            Attribute::Protected => "protected",
            Attribute::Final => "final",
            Attribute::Abstract => "abstract",
            Attribute::Static => "static",
            Attribute::Stub => "stub",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Type {
    Int,
    Byte,
    Char,
    Boolean,
    Void,
    Class(String),
}

impl Type {
    pub fn parse(s: &str) -> Type {
        match s {
            "int" => Type::Int,
            "byte" => Type::Byte,
            "char" => Type::Char,
            "boolean" => Type::Boolean,
            "void" => Type::Void,
            other => Type::Class(other.to_string()),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type::Int => "int",
            Type::Byte => "byte",
            Type::Char => "char",
            Type::Boolean => "boolean",
            Type::Void => "void",
            Type::Class(c) => c,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AtomicOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Lt,
    Gt,
    Not,
    And,
    Or,
}

impl AtomicOp {
    pub fn parse(s: &str) -> Option<AtomicOp> {
        Some(match s {
            "add" => AtomicOp::Add,
            "sub" => AtomicOp::Sub,
            "mul" => AtomicOp::Mul,
            "div" => AtomicOp::Div,
            "eq" => AtomicOp::Eq,
            "lt" => AtomicOp::Lt,
            "gt" => AtomicOp::Gt,
            "not" => AtomicOp::Not,
            "and" => AtomicOp::And,
            "or" => AtomicOp::Or,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AtomicOp::Add => "add",
            AtomicOp::Sub => "sub",
            AtomicOp::Mul => "mul",
            AtomicOp::Div => "div",
            AtomicOp::Eq => "eq",
            AtomicOp::Lt => "lt",
            AtomicOp::Gt => "gt",
            AtomicOp::Not => "not",
            AtomicOp::And => "and",
            AtomicOp::Or => "or",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            AtomicOp::Not => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AExp {
    This,
    True,
    False,
    Null,
    Void,
    Reg(String),
    Int(i64),
    Op(AtomicOp, Vec<AExp>),
    InstanceOf(Box<AExp>, String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum InvokeKind {
    Static,
    Direct,
    Virtual,
    Interface,
    Super,
}

impl InvokeKind {
    pub fn parse(s: &str) -> Option<InvokeKind> {
        Some(match s {
            "invoke-static" => InvokeKind::Static,
            "invoke-direct" => InvokeKind::Direct,
            "invoke-virtual" => InvokeKind::Virtual,
            // Both spellings are accepted; the misspelt one appears in the
            // published grammar.
            "invoke-interface" | "invoke-interafce" => InvokeKind::Interface,
            "invoke-super" => InvokeKind::Super,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InvokeKind::Static => "invoke-static",
            InvokeKind::Direct => "invoke-direct",
            InvokeKind::Virtual => "invoke-virtual",
            InvokeKind::Interface => "invoke-interface",
            InvokeKind::Super => "invoke-super",
        }
    }

    /// Whether the first argument is a receiver bound to `this`.
    pub fn has_receiver(self) -> bool {
        self != InvokeKind::Static
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Invoke {
    pub kind: InvokeKind,
    pub class: String,
    pub method: String,
    pub args: Vec<AExp>,
    pub types: Vec<Type>,
}

impl Invoke {
    pub fn qualified(&self) -> String {
        format!("{}/{}", self.class, self.method)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rhs {
    Atomic(AExp),
    New(String),
    Invoke(Invoke),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Stmt {
    Label(String),
    Nop,
    Line(i64),
    Goto(String),
    If(AExp, String),
    Assign(String, Rhs),
    Return(AExp),
    FieldPut(AExp, String, AExp),
    FieldGet(String, AExp, String),
    ConstString(String, String),
    /// A call whose result is left in `ret`.
    Invoke(Invoke),
}

impl Stmt {
    pub fn invoke(&self) -> Option<&Invoke> {
        match self {
            Stmt::Invoke(inv) | Stmt::Assign(_, Rhs::Invoke(inv)) => Some(inv),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FieldDef {
    pub attributes: BTreeSet<Attribute>,
    pub name: String,
    pub ty: Type,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MethodDef {
    pub attributes: BTreeSet<Attribute>,
    pub name: String,
    pub params: Vec<Type>,
    pub ret: Type,
    pub throws: Vec<String>,
    /// Declared register count; carried through but not used by the semantics.
    pub limit: u32,
    pub body: Vec<Stmt>,
    /// One location per body statement.
    pub locs: Vec<Loc>,
    pub loc: Loc,
}

impl MethodDef {
    pub fn is_static(&self) -> bool {
        self.attributes.contains(&Attribute::Static)
    }

    pub fn is_public(&self) -> bool {
        self.attributes.contains(&Attribute::Public)
    }
}

/// Register holding the `i`-th declared parameter inside a callee.
pub fn param_register(i: usize) -> String {
    format!("p{i}")
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ClassDef {
    pub attributes: BTreeSet<Attribute>,
    pub name: String,
    pub superclass: String,
    pub fields: Vec<FieldDef>,
    pub methods: Vec<MethodDef>,
    pub loc: Loc,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Program {
    pub classes: Vec<ClassDef>,
}

// ---------------------------------------------------------------------------
// Printing

impl fmt::Display for AExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AExp::This => f.write_str("this"),
            AExp::True => f.write_str("true"),
            AExp::False => f.write_str("false"),
            AExp::Null => f.write_str("null"),
            AExp::Void => f.write_str("void"),
            AExp::Reg(r) => f.write_str(r),
            AExp::Int(n) => write!(f, "{n}"),
            AExp::Op(op, args) => {
                write!(f, "({}", op.as_str())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            AExp::InstanceOf(e, c) => write!(f, "(instance-of {e} {c})"),
        }
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    f.write_str("(")?;
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{it}")?;
    }
    f.write_str(")")
}

impl fmt::Display for Invoke {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {}/{} ", self.kind.as_str(), self.class, self.method)?;
        write_list(f, &self.args)?;
        f.write_str(" ")?;
        write_list(f, &self.types)?;
        f.write_str(")")
    }
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Atomic(a) => write!(f, "{a}"),
            Rhs::New(c) => write!(f, "(new {c})"),
            Rhs::Invoke(i) => write!(f, "{i}"),
        }
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Label(l) => write!(f, "(label {l})"),
            Stmt::Nop => f.write_str("(nop)"),
            Stmt::Line(n) => write!(f, "(line {n})"),
            Stmt::Goto(l) => write!(f, "(goto {l})"),
            Stmt::If(e, l) => write!(f, "(if {e} (goto {l}))"),
            Stmt::Assign(n, rhs) => write!(f, "(assign {n} {rhs})"),
            Stmt::Return(e) => write!(f, "(return {e})"),
            Stmt::FieldPut(o, fld, v) => write!(f, "(field-put {o} {fld} {v})"),
            Stmt::FieldGet(n, o, fld) => write!(f, "(field-get {n} {o} {fld})"),
            Stmt::ConstString(n, s) => {
                write!(f, "(const-string {n} ")?;
                write_quoted(f, s)?;
                f.write_str(")")
            }
            Stmt::Invoke(i) => write!(f, "{i}"),
        }
    }
}

fn attrs(set: &BTreeSet<Attribute>) -> String {
    let mut s = String::new();
    for a in set {
        s.push_str(a.as_str());
        s.push(' ');
    }
    s
}

impl fmt::Display for MethodDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(method {}{} ", attrs(&self.attributes), self.name)?;
        write_list(f, &self.params)?;
        write!(f, " {}\n      (throws", self.ret)?;
        for t in &self.throws {
            write!(f, " {t}")?;
        }
        write!(f, ")\n      (limit {})", self.limit)?;
        for s in &self.body {
            write!(f, "\n      {s}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for ClassDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "({}class {} extends {}",
            attrs(&self.attributes),
            self.name,
            self.superclass
        )?;
        f.write_str("  (")?;
        for (i, fd) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str("\n   ")?;
            }
            write!(f, "(field {}{} {})", attrs(&fd.attributes), fd.name, fd.ty)?;
        }
        f.write_str(")\n  (")?;
        for (i, m) in self.methods.iter().enumerate() {
            if i > 0 {
                f.write_str("\n   ")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("))")
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.classes.iter().enumerate() {
            if i > 0 {
                f.write_str("\n\n")?;
            }
            write!(f, "{c}")?;
        }
        f.write_char('\n')
    }
}

/// Renders a program in canonical form; the output parses back to an equal
/// [`Program`].
pub fn print_program(p: &Program) -> String {
    p.to_string()
}
