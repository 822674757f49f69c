//! Finite address tokens: frame pointers, object pointers, continuation
//! addresses, and the code pointers stored inside continuations.

use std::fmt::Write as _;

use crate::class_table::{ClassId, ClassTable, MethodId};

/// A statement position, used as allocation site and call site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StmtId {
    pub method: MethodId,
    pub pc: u32,
}

/// The last (at most k) call sites, oldest first.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context(pub Vec<StmtId>);

impl Context {
    pub fn empty() -> Self {
        Context(Vec::new())
    }

    /// Keeps the most recent `k` sites.
    pub fn truncated(&self, k: usize) -> Context {
        let start = self.0.len().saturating_sub(k);
        Context(self.0[start..].to_vec())
    }

    /// Appends `site` and keeps the most recent `k` sites.
    pub fn push(&self, site: StmtId, k: usize) -> Context {
        let mut v = self.0.clone();
        v.push(site);
        Context(v).truncated(k)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FramePointer {
    /// The frame every entry point starts in.
    Root,
    Frame { method: MethodId, ctx: Context },
}

impl FramePointer {
    pub fn context(&self) -> &Context {
        static EMPTY: Context = Context(Vec::new());
        match self {
            FramePointer::Root => &EMPTY,
            FramePointer::Frame { ctx, .. } => ctx,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AllocSite {
    Stmt(StmtId),
    /// The receiver object synthesized for an instance entry point.
    EntryReceiver(ClassId),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectPointer {
    pub site: AllocSite,
    pub ctx: Context,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KontAddr {
    /// The initial continuation address, bound to `halt`.
    Halt,
    Call { site: StmtId, ctx: Context },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectValue {
    pub ptr: ObjectPointer,
    pub class: ClassId,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Addr {
    Reg(FramePointer, String),
    Field(ObjectPointer, String),
    Kont(KontAddr),
}

/// Machine-internal instructions placed in front of a statement sequence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Synth<O> {
    /// Copies `ret` into the register after an `(assign r (invoke ...))` call returns.
    MoveResult(String),
    /// Calls the default constructor on a reflectively created object.
    CallInit { ctor: MethodId, obj: O, site: StmtId },
    /// Places the reflectively created object in `ret`.
    BindRet(O),
}

/// A reference to the remaining code: optional synthetic prefix, then the
/// suffix of a method body starting at `pc`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Code<O = ObjectValue> {
    Halt,
    Seq {
        prefix: Vec<Synth<O>>,
        method: MethodId,
        pc: u32,
    },
}

impl<O> Code<O> {
    pub fn at(method: MethodId, pc: u32) -> Self {
        Code::Seq {
            prefix: Vec::new(),
            method,
            pc,
        }
    }

    pub fn method(&self) -> Option<MethodId> {
        match self {
            Code::Halt => None,
            Code::Seq { method, .. } => Some(*method),
        }
    }

    /// The body statement at the head, if the head is not synthetic.
    pub fn stmt_id(&self) -> Option<StmtId> {
        match self {
            Code::Seq { prefix, method, pc } if prefix.is_empty() => Some(StmtId {
                method: *method,
                pc: *pc,
            }),
            _ => None,
        }
    }

    pub fn is_halt(&self) -> bool {
        matches!(self, Code::Halt)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kont {
    Fun {
        fp: FramePointer,
        resume: Code,
        next: KontAddr,
    },
    Halt,
}

// ---------------------------------------------------------------------------
// Rendering

/// Human-readable rendering that needs the class table for names.
pub trait Describe {
    fn describe(&self, ct: &ClassTable) -> String;
}

impl Describe for StmtId {
    fn describe(&self, ct: &ClassTable) -> String {
        format!("{}:{}", ct.method(self.method).qualified, self.pc)
    }
}

impl Describe for Context {
    fn describe(&self, ct: &ClassTable) -> String {
        let mut s = String::from("[");
        for (i, site) in self.0.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&site.describe(ct));
        }
        s.push(']');
        s
    }
}

impl Describe for FramePointer {
    fn describe(&self, ct: &ClassTable) -> String {
        match self {
            FramePointer::Root => "fp0".to_string(),
            FramePointer::Frame { method, ctx } => {
                format!("{}{}", ct.method(*method).qualified, ctx.describe(ct))
            }
        }
    }
}

impl Describe for ObjectPointer {
    fn describe(&self, ct: &ClassTable) -> String {
        match &self.site {
            AllocSite::Stmt(s) => format!("@{}{}", s.describe(ct), self.ctx.describe(ct)),
            AllocSite::EntryReceiver(c) => format!("@entry:{}", ct.class_name(*c)),
        }
    }
}

impl Describe for KontAddr {
    fn describe(&self, ct: &ClassTable) -> String {
        match self {
            KontAddr::Halt => "ka0".to_string(),
            KontAddr::Call { site, ctx } => format!("k:{}{}", site.describe(ct), ctx.describe(ct)),
        }
    }
}

impl Describe for ObjectValue {
    fn describe(&self, ct: &ClassTable) -> String {
        format!("{}:{}", self.ptr.describe(ct), ct.class_name(self.class))
    }
}

impl Describe for Addr {
    fn describe(&self, ct: &ClassTable) -> String {
        match self {
            Addr::Reg(fp, r) => format!("{}.{}", fp.describe(ct), r),
            Addr::Field(op, f) => format!("{}.{}", op.describe(ct), f),
            Addr::Kont(ka) => ka.describe(ct),
        }
    }
}

impl<O: Describe> Describe for Synth<O> {
    fn describe(&self, ct: &ClassTable) -> String {
        match self {
            Synth::MoveResult(r) => format!("(move-result {r})"),
            Synth::CallInit { ctor, obj, .. } => {
                format!("(call-init {} {})", ct.method(*ctor).qualified, obj.describe(ct))
            }
            Synth::BindRet(o) => format!("(bind-ret {})", o.describe(ct)),
        }
    }
}

impl<O: Describe> Describe for Code<O> {
    fn describe(&self, ct: &ClassTable) -> String {
        match self {
            Code::Halt => "halt".to_string(),
            Code::Seq { prefix, method, pc } => {
                let mut s = String::new();
                for p in prefix {
                    s.push_str(&p.describe(ct));
                    s.push(' ');
                }
                let _ = write!(s, "{}:{}", ct.method(*method).qualified, pc);
                s
            }
        }
    }
}

impl Describe for Kont {
    fn describe(&self, ct: &ClassTable) -> String {
        match self {
            Kont::Halt => "halt".to_string(),
            Kont::Fun { fp, resume, next } => format!(
                "fun({}, {}, {})",
                fp.describe(ct),
                resume.describe(ct),
                next.describe(ct)
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn site(pc: u32) -> StmtId {
        StmtId {
            method: MethodId(0),
            pc,
        }
    }

    #[test]
    fn context_keeps_most_recent_sites() {
        let c = Context::empty().push(site(1), 2).push(site(2), 2).push(site(3), 2);
        assert_eq!(c.0, vec![site(2), site(3)]);
        assert!(Context::empty().push(site(1), 0).is_empty());
    }

    #[test]
    fn truncation_composes_with_push() {
        // last_k(last_k(x) ++ [s]) == last_k(x ++ [s])
        let full = Context(vec![site(1), site(2), site(3)]);
        for k in 0..4 {
            let a = full.truncated(k).push(site(9), k);
            let b = full.push(site(9), 100).truncated(k);
            assert_eq!(a, b, "k = {k}");
        }
    }
}
