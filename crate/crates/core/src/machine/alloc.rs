use serde::Serialize;

use crate::class_table::MethodId;
use crate::domain::{Code, Config, FramePointer, KontAddr, ObjectPointer, StmtId, Synth, AllocSite};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyMode {
    ContextSensitive,
    Monovariant,
}

/// Call-site sensitivity of the allocators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AllocationPolicy {
    pub k: usize,
}

impl AllocationPolicy {
    pub fn new(k: usize) -> Self {
        AllocationPolicy { k }
    }

    pub fn monovariant() -> Self {
        AllocationPolicy { k: 0 }
    }

    pub fn mode(&self) -> PolicyMode {
        if self.k == 0 {
            PolicyMode::Monovariant
        } else {
            PolicyMode::ContextSensitive
        }
    }
}

impl Default for AllocationPolicy {
    fn default() -> Self {
        Self::monovariant()
    }
}

/// The statement a configuration is executing: a synthesized constructor
/// call counts as its originating `newInstance` site.
pub fn current_site(code: &Code) -> Option<StmtId> {
    match code {
        Code::Halt => None,
        Code::Seq { prefix, method, pc } => match prefix.first() {
            Some(Synth::CallInit { site, .. }) => Some(*site),
            _ => Some(StmtId {
                method: *method,
                pc: *pc,
            }),
        },
    }
}

fn site_of(c: &Config) -> StmtId {
    current_site(&c.code).expect("allocation from a halted configuration")
}

/// Frame for a call to `callee` from the current statement.
pub fn alloc_fp(c: &Config, callee: MethodId, policy: &AllocationPolicy) -> FramePointer {
    FramePointer::Frame {
        method: callee,
        ctx: c.fp.context().push(site_of(c), policy.k),
    }
}

pub fn alloc_op(c: &Config, policy: &AllocationPolicy) -> ObjectPointer {
    ObjectPointer {
        site: AllocSite::Stmt(site_of(c)),
        ctx: c.fp.context().truncated(policy.k),
    }
}

pub fn alloc_k(c: &Config, policy: &AllocationPolicy) -> KontAddr {
    KontAddr::Call {
        site: site_of(c),
        ctx: c.fp.context().truncated(policy.k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Context;

    fn cfg(pc: u32, fp: FramePointer) -> Config {
        Config {
            code: Code::at(MethodId(0), pc),
            fp,
            ka: KontAddr::Halt,
        }
    }

    fn frame(sites: &[u32]) -> FramePointer {
        FramePointer::Frame {
            method: MethodId(0),
            ctx: Context(sites.iter().map(|&pc| StmtId { method: MethodId(1), pc }).collect()),
        }
    }

    #[test]
    fn same_site_same_context_gives_equal_tokens() {
        let p = AllocationPolicy::new(1);
        let a = cfg(3, frame(&[7]));
        assert_eq!(alloc_op(&a, &p), alloc_op(&a.clone(), &p));
        assert_eq!(alloc_k(&a, &p), alloc_k(&a, &p));
        assert_eq!(alloc_fp(&a, MethodId(2), &p), alloc_fp(&a, MethodId(2), &p));
    }

    #[test]
    fn k1_distinguishes_calling_context() {
        let p = AllocationPolicy::new(1);
        let a = alloc_op(&cfg(3, frame(&[7])), &p);
        let b = alloc_op(&cfg(3, frame(&[8])), &p);
        assert_ne!(a, b);
        let p0 = AllocationPolicy::monovariant();
        assert_eq!(alloc_op(&cfg(3, frame(&[7])), &p0), alloc_op(&cfg(3, frame(&[8])), &p0));
    }

    #[test]
    fn frame_context_is_bounded_by_k() {
        let p = AllocationPolicy::new(2);
        let fp = alloc_fp(&cfg(5, frame(&[1, 2])), MethodId(0), &p);
        assert_eq!(fp.context().len(), 2);
        assert_eq!(AllocationPolicy::new(0).mode(), PolicyMode::Monovariant);
    }
}
