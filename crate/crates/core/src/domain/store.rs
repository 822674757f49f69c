use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value as Json;

use super::addr::{Addr, Describe};
use super::lattice::Lattice;
use super::value::AbstractValue;
use crate::class_table::ClassTable;

/// Finite partial map from addresses to value sets. Addresses bound to the
/// empty set are never stored, so an absent key reads as bottom.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Store {
    map: BTreeMap<Addr, AbstractValue>,
}

static EMPTY: AbstractValue = AbstractValue::EMPTY;

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, a: &Addr) -> &AbstractValue {
        self.map.get(a).unwrap_or(&EMPTY)
    }

    pub fn contains(&self, a: &Addr) -> bool {
        self.map.contains_key(a)
    }

    /// Joins `v` into the image of `a`; reports growth.
    pub fn bind(&mut self, a: Addr, v: &AbstractValue) -> bool {
        if v.is_empty() {
            return false;
        }
        match self.map.entry(a) {
            Entry::Occupied(mut e) => e.get_mut().join_in_place(v),
            Entry::Vacant(e) => {
                e.insert(v.clone());
                true
            }
        }
    }

    pub fn with(mut self, a: Addr, v: AbstractValue) -> Self {
        self.bind(a, &v);
        self
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Addr, &AbstractValue)> {
        self.map.iter()
    }

    pub fn addrs(&self) -> impl Iterator<Item = &Addr> {
        self.map.keys()
    }

    /// Keeps only the bindings of `keep`.
    pub fn restrict(&self, keep: &BTreeSet<Addr>) -> Store {
        Store {
            map: self
                .map
                .iter()
                .filter(|(a, _)| keep.contains(*a))
                .map(|(a, v)| (a.clone(), v.clone()))
                .collect(),
        }
    }

    /// Sorted `[address, value-set]` pairs.
    pub fn to_json(&self, ct: &ClassTable) -> Json {
        Json::Array(
            self.map
                .iter()
                .map(|(a, v)| Json::Array(vec![Json::String(a.describe(ct)), v.to_json(ct)]))
                .collect(),
        )
    }
}

impl FromIterator<(Addr, AbstractValue)> for Store {
    fn from_iter<I: IntoIterator<Item = (Addr, AbstractValue)>>(iter: I) -> Self {
        let mut s = Store::new();
        for (a, v) in iter {
            s.bind(a, &v);
        }
        s
    }
}

impl Lattice for Store {
    fn bottom() -> Self {
        Store::new()
    }

    fn join(&self, other: &Self) -> Self {
        let mut s = self.clone();
        s.join_in_place(other);
        s
    }

    fn leq(&self, other: &Self) -> bool {
        self.map.iter().all(|(a, v)| v.leq(other.get(a)))
    }

    fn join_in_place(&mut self, other: &Self) -> bool {
        let mut changed = false;
        for (a, v) in &other.map {
            changed |= self.bind(a.clone(), v);
        }
        changed
    }
}

pub fn join_store(a: &Store, b: &Store) -> Store {
    a.join(b)
}

pub fn store_leq(a: &Store, b: &Store) -> bool {
    a.leq(b)
}
