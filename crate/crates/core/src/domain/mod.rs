//! The abstract state-space: addresses, values, stores and machine states,
//! with joins and orders lifted element-, point- and member-wise.

pub mod addr;
pub mod lattice;
pub mod store;
pub mod value;

use std::sync::Arc;

pub use addr::{
    Addr, AllocSite, Code, Context, Describe, FramePointer, Kont, KontAddr, ObjectPointer,
    ObjectValue, StmtId, Synth,
};
pub use lattice::{Flat, Lattice};
pub use store::{join_store, store_leq, Store};
pub use value::{atom_json, join_value, AbstractValue, Atom};

use crate::class_table::ClassTable;

/// The store-free part of a machine state: code, frame pointer and
/// continuation address.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    pub code: Code,
    pub fp: FramePointer,
    pub ka: KontAddr,
}

impl Describe for Config {
    fn describe(&self, ct: &ClassTable) -> String {
        format!(
            "<{} | {} | {}>",
            self.code.describe(ct),
            self.fp.describe(ct),
            self.ka.describe(ct)
        )
    }
}

/// A complete abstract machine state. Under store widening every state
/// shares one global store; the `store` here is then that store.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AbstractState {
    pub config: Config,
    pub store: Arc<Store>,
}

impl AbstractState {
    pub fn new(config: Config, store: Store) -> Self {
        AbstractState {
            config,
            store: Arc::new(store),
        }
    }

    pub fn code(&self) -> &Code {
        &self.config.code
    }

    pub fn fp(&self) -> &FramePointer {
        &self.config.fp
    }

    pub fn ka(&self) -> &KontAddr {
        &self.config.ka
    }
}
