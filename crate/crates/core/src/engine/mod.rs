//! Reachable-state exploration: per-entry worklist closure of the machine's
//! step relation, optionally over one widened store, and the outer iteration
//! over entry points.

mod entry;
mod exec;
mod gc;

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde::Serialize;

pub use entry::{default_lifecycle, explicit_entry, find_entry_points, DiscoveryReason, EntryPoint, DEFAULT_LIFECYCLE};
pub use exec::Executor;
pub use gc::{abstract_gc, reachable};

use crate::class_table::ClassTable;
use crate::domain::{
    AbstractValue, Addr, AllocSite, Config, Context, FramePointer, Lattice, ObjectPointer,
    ObjectValue, Store,
};
use crate::error::ConfigError;
use crate::machine::{top_of, AllocationPolicy, AnalysisEvent, Machine, RuleTag, StepOutcome};
use crate::predicate::{PredicateProgram, StateView};
use crate::syntax::{param_register, THIS};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnalysisOptions {
    pub k: usize,
    pub widen: bool,
    /// Only honoured without widening.
    pub gc: bool,
    pub max_steps: Option<usize>,
    /// Sweep the entry points once instead of until the store is stable.
    pub single_pass: bool,
    /// 0 = one per core. Not echoed in reports, which must not depend on it.
    #[serde(skip)]
    pub workers: usize,
    pub entries: Vec<String>,
    pub lifecycle: Vec<String>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            k: 0,
            widen: true,
            gc: false,
            max_steps: None,
            single_pass: false,
            workers: 0,
            entries: Vec::new(),
            lifecycle: default_lifecycle(),
        }
    }
}

impl AnalysisOptions {
    pub fn policy(&self) -> AllocationPolicy {
        AllocationPolicy::new(self.k)
    }

    pub fn gc_active(&self) -> bool {
        self.gc && !self.widen
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub config: Config,
    /// The state's own store; `None` when all states share the widened store.
    pub store: Option<Arc<Store>>,
    pub root: bool,
    pub truncated: bool,
    /// Events observed stepping this state, sorted and deduplicated.
    pub events: Vec<AnalysisEvent>,
    /// How many transitions arrived at this state, counting repeats.
    pub visits: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub rule: RuleTag,
}

type NodeKey = (Config, Option<Arc<Store>>);

#[derive(Clone, Debug, Default)]
pub struct StateGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    /// Set when the step cutoff stopped exploration early.
    pub incomplete: bool,
    pub steps: usize,
    index: HashMap<NodeKey, usize>,
    edge_set: HashSet<Edge>,
}

impl StateGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node for `(config, store)`, and whether it is new.
    pub fn intern(&mut self, config: Config, store: Option<Arc<Store>>) -> (usize, bool) {
        let key = (config, store);
        if let Some(&i) = self.index.get(&key) {
            return (i, false);
        }
        let i = self.nodes.len();
        self.nodes.push(Node {
            config: key.0.clone(),
            store: key.1.clone(),
            root: false,
            truncated: false,
            events: Vec::new(),
            visits: 0,
        });
        self.index.insert(key, i);
        (i, true)
    }

    pub fn find(&self, config: &Config, store: Option<&Arc<Store>>) -> Option<usize> {
        self.index.get(&(config.clone(), store.cloned())).copied()
    }

    pub fn add_edge(&mut self, from: usize, to: usize, rule: RuleTag) -> bool {
        let e = Edge { from, to, rule };
        if self.edge_set.insert(e) {
            self.edges.push(e);
            true
        } else {
            false
        }
    }

    fn add_events(&mut self, i: usize, events: Vec<AnalysisEvent>) {
        let ev = &mut self.nodes[i].events;
        if events.iter().all(|e| ev.binary_search(e).is_ok()) {
            return;
        }
        ev.extend(events);
        ev.sort();
        ev.dedup();
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == i)
    }

    pub fn truncated_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.truncated).count()
    }

    /// All events, sorted and deduplicated.
    pub fn events(&self) -> Vec<AnalysisEvent> {
        let mut all: Vec<AnalysisEvent> = self.nodes.iter().flat_map(|n| n.events.iter().cloned()).collect();
        all.sort();
        all.dedup();
        all
    }

    /// Merges another graph, identifying equal states.
    pub fn absorb(&mut self, other: StateGraph) {
        let mut map = Vec::with_capacity(other.nodes.len());
        for n in other.nodes {
            let (i, _) = self.intern(n.config, n.store);
            let mine = &mut self.nodes[i];
            mine.root |= n.root;
            mine.truncated |= n.truncated;
            mine.visits += n.visits;
            self.add_events(i, n.events);
            map.push(i);
        }
        for e in other.edges {
            self.add_edge(map[e.from], map[e.to], e.rule);
        }
        self.incomplete |= other.incomplete;
        self.steps += other.steps;
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisResult {
    pub options: AnalysisOptions,
    pub entries: Vec<EntryPoint>,
    /// Union of the per-entry graphs of the final pass.
    pub graph: StateGraph,
    pub store: Store,
    pub passes: usize,
}

impl AnalysisResult {
    /// Whether results are an under-approximation: the cutoff fired or a
    /// truncate rule pruned exploration.
    pub fn incomplete(&self) -> bool {
        self.graph.incomplete || self.graph.truncated_count() > 0
    }
}

/// Bindings an entry point starts with besides the halt continuation:
/// opaque values for its parameters and, for instance methods, a receiver
/// object of the entry's class with default fields.
pub fn entry_store(m: &Machine<'_>, entry: &EntryPoint) -> Store {
    let ct = m.ct;
    let def = &ct.method(entry.method).def;
    let mut s = Machine::inject_store();
    for (i, ty) in def.params.iter().enumerate() {
        s.bind(Addr::Reg(FramePointer::Root, param_register(i)), &top_of(ty));
    }
    if !def.is_static() {
        let class = ct
            .class_id(&entry.class)
            .unwrap_or(ct.method(entry.method).class);
        let ptr = ObjectPointer {
            site: AllocSite::EntryReceiver(class),
            ctx: Context::empty(),
        };
        s.join_in_place(&m.init_object(&ptr, class));
        s.bind(
            Addr::Reg(FramePointer::Root, THIS.into()),
            &AbstractValue::object(ObjectValue { ptr, class }),
        );
    }
    s
}

pub struct Analyzer<'a> {
    pub ct: &'a ClassTable,
    pub options: AnalysisOptions,
    predicates: Option<&'a PredicateProgram>,
    exec: Executor,
}

impl<'a> Analyzer<'a> {
    pub fn new(ct: &'a ClassTable, options: AnalysisOptions) -> Self {
        let exec = Executor::new(options.workers);
        Analyzer {
            ct,
            options,
            predicates: None,
            exec,
        }
    }

    pub fn with_predicates(mut self, p: &'a PredicateProgram) -> Self {
        self.predicates = Some(p);
        self
    }

    pub fn machine(&self) -> Machine<'a> {
        Machine::new(self.ct, self.options.policy())
    }

    pub fn entry_points(&self) -> Result<Vec<EntryPoint>, ConfigError> {
        find_entry_points(self.ct, &self.options.lifecycle, &self.options.entries)
    }

    fn truncates(&self, config: &Config, events: &[AnalysisEvent]) -> bool {
        self.predicates.is_some_and(|p| {
            p.has_truncation()
                && p.evaluate(&StateView {
                    ct: self.ct,
                    config,
                    events,
                })
                .truncated
        })
    }

    /// Explores from `entry` with `initial` joined into its starting store.
    /// Returns the state graph and the final store (the widened store, or
    /// the join of every state's store).
    pub fn explore(&self, entry: &EntryPoint, initial: &Store) -> (StateGraph, Store) {
        let m = self.machine();
        let store = initial.join(&entry_store(&m, entry));
        let root = Machine::inject_config(entry.method);
        if self.options.widen {
            self.explore_widened(&m, root, store)
        } else {
            self.explore_per_state(&m, root, store)
        }
    }

    fn explore_widened(&self, m: &Machine<'_>, root: Config, mut store: Store) -> (StateGraph, Store) {
        let mut g = StateGraph::new();
        let (r, _) = g.intern(root, None);
        g.nodes[r].root = true;
        let mut frontier = vec![r];
        let mut grew = false;
        'rounds: loop {
            // A grown store can enable new successors anywhere, so every
            // state is stepped again; otherwise only the new ones.
            let batch: Vec<usize> = if grew {
                (0..g.len()).filter(|&i| !g.nodes[i].truncated).collect()
            } else {
                std::mem::take(&mut frontier)
            };
            frontier.clear();
            if batch.is_empty() {
                break;
            }
            let outcomes: Vec<StepOutcome> = {
                let g = &g;
                let store = &store;
                self.exec
                    .map(&batch, |&i| m.step_config(&g.nodes[i].config, store))
            };
            grew = false;
            for (&i, out) in batch.iter().zip(outcomes) {
                let cut = self.truncates(&g.nodes[i].config, &out.events);
                g.add_events(i, out.events);
                if cut {
                    g.nodes[i].truncated = true;
                    continue;
                }
                for succ in out.successors {
                    if self.options.max_steps.is_some_and(|max| g.steps >= max) {
                        g.incomplete = true;
                        break 'rounds;
                    }
                    g.steps += 1;
                    grew |= store.join_in_place(&succ.delta);
                    let (j, new) = g.intern(succ.config, None);
                    g.nodes[j].visits += 1;
                    g.add_edge(i, j, succ.rule);
                    if new {
                        frontier.push(j);
                    }
                }
            }
        }
        (g, store)
    }

    fn explore_per_state(&self, m: &Machine<'_>, root: Config, store: Store) -> (StateGraph, Store) {
        let gc = self.options.gc_active();
        let mut g = StateGraph::new();
        let store = if gc { abstract_gc(&root, &store) } else { store };
        let (r, _) = g.intern(root, Some(Arc::new(store)));
        g.nodes[r].root = true;
        let mut frontier = vec![r];
        'layers: while !frontier.is_empty() {
            let batch = std::mem::take(&mut frontier);
            let outcomes: Vec<StepOutcome> = {
                let g = &g;
                self.exec.map(&batch, |&i| {
                    let n = &g.nodes[i];
                    m.step_config(&n.config, n.store.as_deref().expect("per-state store"))
                })
            };
            for (&i, out) in batch.iter().zip(outcomes) {
                let cut = self.truncates(&g.nodes[i].config, &out.events);
                g.add_events(i, out.events);
                if cut {
                    g.nodes[i].truncated = true;
                    continue;
                }
                let base = g.nodes[i].store.clone().expect("per-state store");
                for succ in out.successors {
                    if self.options.max_steps.is_some_and(|max| g.steps >= max) {
                        g.incomplete = true;
                        break 'layers;
                    }
                    g.steps += 1;
                    let mut s = (*base).clone();
                    s.join_in_place(&succ.delta);
                    if gc {
                        s = abstract_gc(&succ.config, &s);
                    }
                    let (j, new) = g.intern(succ.config, Some(Arc::new(s)));
                    g.nodes[j].visits += 1;
                    g.add_edge(i, j, succ.rule);
                    if new {
                        frontier.push(j);
                    }
                }
            }
        }
        let mut all = Store::new();
        for n in &g.nodes {
            if let Some(s) = &n.store {
                all.join_in_place(s);
            }
        }
        (g, all)
    }

    /// Explores every entry in order, threading the store through, and
    /// repeats the sweep until the store stops growing. A lone entry, or
    /// single-pass mode, takes one sweep.
    pub fn analyze(&self, entries: Vec<EntryPoint>) -> AnalysisResult {
        let mut store = Store::new();
        let mut passes = 0;
        let graph = loop {
            passes += 1;
            let before = store.clone();
            let mut graph = StateGraph::new();
            for e in &entries {
                let (g, s) = self.explore(e, &store);
                store.join_in_place(&s);
                graph.absorb(g);
            }
            if self.options.single_pass || entries.len() <= 1 || graph.incomplete || store == before {
                break graph;
            }
        };
        AnalysisResult {
            options: self.options.clone(),
            entries,
            graph,
            store,
            passes,
        }
    }

    /// Discovers entry points from the options and analyzes them.
    pub fn run(&self) -> Result<AnalysisResult, ConfigError> {
        Ok(self.analyze(self.entry_points()?))
    }
}

pub fn analyze_all_entries(ct: &ClassTable, options: AnalysisOptions) -> Result<AnalysisResult, ConfigError> {
    Analyzer::new(ct, options).run()
}

