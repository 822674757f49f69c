//! Abstract garbage collection: restrict a store to what a configuration
//! can still reach.

use std::collections::{BTreeSet, HashMap};

use crate::domain::{
    AbstractValue, Addr, Atom, Code, Config, FramePointer, Kont, ObjectPointer, Store, Synth,
};

fn code_objects(code: &Code) -> Vec<&ObjectPointer> {
    match code {
        Code::Halt => Vec::new(),
        Code::Seq { prefix, .. } => prefix
            .iter()
            .filter_map(|s| match s {
                Synth::CallInit { obj, .. } | Synth::BindRet(obj) => Some(&obj.ptr),
                Synth::MoveResult(_) => None,
            })
            .collect(),
    }
}

/// Addresses reachable from the registers of `c.fp`, the continuation at
/// `c.ka` and objects referenced from pending synthetic code.
pub fn reachable(c: &Config, s: &Store) -> BTreeSet<Addr> {
    let mut by_frame: HashMap<&FramePointer, Vec<&Addr>> = HashMap::new();
    let mut by_object: HashMap<&ObjectPointer, Vec<&Addr>> = HashMap::new();
    for a in s.addrs() {
        match a {
            Addr::Reg(fp, _) => by_frame.entry(fp).or_default().push(a),
            Addr::Field(op, _) => by_object.entry(op).or_default().push(a),
            Addr::Kont(_) => {}
        }
    }
    let mut seen: BTreeSet<Addr> = BTreeSet::new();
    let mut work: Vec<Addr> = Vec::new();
    let mut seen_frames: BTreeSet<FramePointer> = BTreeSet::new();
    let mut seen_objects: BTreeSet<ObjectPointer> = BTreeSet::new();

    let mut frame = |fp: &FramePointer, work: &mut Vec<Addr>| {
        if seen_frames.insert(fp.clone()) {
            if let Some(addrs) = by_frame.get(fp) {
                work.extend(addrs.iter().map(|a| (*a).clone()));
            }
        }
    };
    let mut object = |op: &ObjectPointer, work: &mut Vec<Addr>| {
        if seen_objects.insert(op.clone()) {
            if let Some(addrs) = by_object.get(op) {
                work.extend(addrs.iter().map(|a| (*a).clone()));
            }
        }
    };

    frame(&c.fp, &mut work);
    work.push(Addr::Kont(c.ka.clone()));
    for op in code_objects(&c.code) {
        object(op, &mut work);
    }
    while let Some(a) = work.pop() {
        if !s.contains(&a) || !seen.insert(a.clone()) {
            continue;
        }
        let v: &AbstractValue = s.get(&a);
        for atom in v.atoms() {
            match atom {
                Atom::Object(o) => object(&o.ptr, &mut work),
                Atom::Kont(Kont::Fun { fp, resume, next }) => {
                    frame(&fp, &mut work);
                    work.push(Addr::Kont(next));
                    for op in code_objects(&resume) {
                        object(op, &mut work);
                    }
                }
                _ => {}
            }
        }
    }
    seen
}

pub fn abstract_gc(c: &Config, s: &Store) -> Store {
    s.restrict(&reachable(c, s))
}
