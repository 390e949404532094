//! On-the-fly minimum fixed points on extended abstract dependency graphs.
//!
//! A [`Provider`] describes the graph lazily: vertices, their successors, a
//! value function per vertex and optional derive functions between related
//! vertices. [`solve`] explores from a root and returns (an approximation of)
//! the root's value in the least fixed point, stopping early once the provider
//! says the answer is known.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;
use std::time::Instant;

use serde::Serialize;

pub trait Provider {
    type Vertex: Clone + Eq + Hash;
    type Value: Clone;
    type Derive: Clone;

    fn bottom(&self, v: &Self::Vertex) -> Self::Value;
    fn leq(&self, a: &Self::Value, b: &Self::Value) -> bool;
    fn successors(&mut self, v: &Self::Vertex) -> Vec<Self::Vertex>;
    /// `inputs[i]` is the current value of successor `i`.
    fn evaluate(&mut self, v: &Self::Vertex, inputs: &[Self::Value]) -> Self::Value;
    fn is_monotonic(&self, v: &Self::Vertex) -> bool;
    /// Successors never have a larger distance; successors of a
    /// non-monotonic vertex have a strictly smaller one.
    fn dist(&self, v: &Self::Vertex) -> usize;
    /// Only vertices with equal keys are tested for derivability.
    fn merge_key(&self, _v: &Self::Vertex) -> Option<u64> {
        None
    }
    /// `Some(f)` if the fixed-point value of `small` is `f` applied to that of `big`.
    fn derive(&self, _small: &Self::Vertex, _big: &Self::Vertex) -> Option<Self::Derive> {
        None
    }
    fn apply_derive(&self, f: &Self::Derive, x: &Self::Value) -> Self::Value;
    /// True when no successor value can change `value` any more.
    fn ignores_all(&self, _v: &Self::Vertex, _value: &Self::Value) -> bool {
        false
    }
    /// True when the root approximation already decides the query.
    fn early_stop(&self, _root: &Self::Value) -> bool {
        false
    }
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub merge: bool,
    pub deadline: Option<Instant>,
    pub max_vertices: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct Stats {
    /// Distinct vertices ever generated, including merged-away ones.
    pub generated: usize,
    pub explored: usize,
    /// Merge-away-new plus replace events.
    pub merges: usize,
    pub evaluations: usize,
    pub peak_waiting: usize,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("dependency graph contract violated: {0}")]
    ContractViolation(String),
    #[error("resource limit reached: {0}")]
    ResourceLimit(String),
}

#[derive(Clone, Debug)]
pub struct Outcome<V> {
    pub value: V,
    pub stats: Stats,
    pub stopped_early: bool,
}

struct Node<P: Provider> {
    vertex: P::Vertex,
    dist: usize,
    mono: bool,
    key: Option<u64>,
    alpha: P::Value,
    deps: HashSet<usize>,
    /// `None` until explored; each entry is a target and the derive chain to
    /// apply to its value, last pushed first.
    edges: Option<Vec<(usize, Vec<P::Derive>)>>,
    active: bool,
    in_update: bool,
    deferred: bool,
}

struct Solver<'p, P: Provider> {
    p: &'p mut P,
    opts: Options,
    nodes: Vec<Node<P>>,
    index: HashMap<P::Vertex, usize>,
    buckets: HashMap<u64, Vec<usize>>,
    root: usize,
    root_chain: Vec<P::Derive>,
    explore: Vec<usize>,
    /// Generated during the current exploration, not yet queued.
    fresh: Vec<usize>,
    update: Vec<usize>,
    deferred: Vec<usize>,
    /// Queued work items per distance, stale entries included.
    pending: Vec<usize>,
    stats: Stats,
    stop: bool,
}

/// Least fixed-point value of `root`, or an approximation that already
/// satisfies [`Provider::early_stop`].
pub fn solve<P: Provider>(p: &mut P, root: P::Vertex, opts: &Options) -> Result<Outcome<P::Value>, EngineError> {
    let mut s = Solver {
        p,
        opts: opts.clone(),
        nodes: Vec::new(),
        index: HashMap::new(),
        buckets: HashMap::new(),
        root: 0,
        root_chain: Vec::new(),
        explore: Vec::new(),
        fresh: Vec::new(),
        update: Vec::new(),
        deferred: Vec::new(),
        pending: Vec::new(),
        stats: Stats::default(),
        stop: false,
    };
    s.run(root)
}

impl<P: Provider> Solver<'_, P> {
    fn run(&mut self, root: P::Vertex) -> Result<Outcome<P::Value>, EngineError> {
        let (r, _) = self.generate(root);
        self.root = r;
        self.flush_fresh();
        let mut tick = 0u64;
        while !self.stop {
            tick += 1;
            if let Some(max) = self.opts.max_vertices {
                if self.nodes.len() > max {
                    return Err(EngineError::ResourceLimit(format!("more than {max} vertices")));
                }
            }
            if tick % 64 == 0 {
                if let Some(d) = self.opts.deadline {
                    if Instant::now() > d {
                        return Err(EngineError::ResourceLimit("timeout".into()));
                    }
                }
            }
            let waiting = self.explore.len() + self.update.len() + self.deferred.len();
            self.stats.peak_waiting = self.stats.peak_waiting.max(waiting);
            if let Some(v) = self.update.pop() {
                self.pending[self.nodes[v].dist] -= 1;
                self.nodes[v].in_update = false;
                if !self.nodes[v].active || self.nodes[v].edges.is_none() {
                    continue;
                }
                if !self.nodes[v].mono && !self.pickable(v) {
                    self.defer(v);
                } else {
                    self.evaluate(v);
                }
            } else if let Some(v) = self.explore.pop() {
                self.pending[self.nodes[v].dist] -= 1;
                if !self.nodes[v].active || self.nodes[v].edges.is_some() {
                    continue;
                }
                self.expand(v)?;
            } else if !self.deferred.is_empty() {
                let d = self.deferred.iter().map(|&v| self.nodes[v].dist).min().unwrap();
                let (now, later): (Vec<usize>, Vec<usize>) =
                    self.deferred.iter().partition(|&&v| self.nodes[v].dist == d);
                self.deferred = later;
                for v in now {
                    self.pending[d] -= 1;
                    self.nodes[v].deferred = false;
                    if self.nodes[v].active && self.nodes[v].edges.is_some() && !self.stop {
                        self.evaluate(v);
                    }
                }
            } else {
                break;
            }
        }
        Ok(Outcome { value: self.root_value(), stats: self.stats.clone(), stopped_early: self.stop })
    }

    fn root_value(&self) -> P::Value {
        let a = self.nodes[self.root].alpha.clone();
        self.root_chain.iter().rev().fold(a, |x, f| self.p.apply_derive(f, &x))
    }

    fn pickable(&self, v: usize) -> bool {
        self.pending.iter().take(self.nodes[v].dist).all(|&c| c == 0)
    }

    fn count(&mut self, dist: usize) {
        if self.pending.len() <= dist {
            self.pending.resize(dist + 1, 0);
        }
        self.pending[dist] += 1;
    }

    fn defer(&mut self, v: usize) {
        if !self.nodes[v].deferred {
            self.nodes[v].deferred = true;
            self.count(self.nodes[v].dist);
            self.deferred.push(v);
        }
    }

    fn push_update(&mut self, v: usize) {
        if !self.nodes[v].in_update {
            self.nodes[v].in_update = true;
            self.count(self.nodes[v].dist);
            self.update.push(v);
        }
    }

    /// Queue vertices generated by one exploration so the first is explored first.
    fn flush_fresh(&mut self) {
        while let Some(v) = self.fresh.pop() {
            self.count(self.nodes[v].dist);
            self.explore.push(v);
        }
    }

    /// Intern a vertex reached as a successor. Returns the node that stands
    /// for it and the derive chain from that node's value.
    fn generate(&mut self, v: P::Vertex) -> (usize, Vec<P::Derive>) {
        let id = match self.index.get(&v) {
            Some(&id) if self.nodes[id].active => return (id, Vec::new()),
            Some(&id) => id,
            None => {
                let node = Node {
                    dist: self.p.dist(&v),
                    mono: self.p.is_monotonic(&v),
                    key: if self.opts.merge { self.p.merge_key(&v) } else { None },
                    alpha: self.p.bottom(&v),
                    deps: HashSet::new(),
                    edges: None,
                    active: false,
                    in_update: false,
                    deferred: false,
                    vertex: v.clone(),
                };
                let id = self.nodes.len();
                self.nodes.push(node);
                self.index.insert(v, id);
                self.stats.generated += 1;
                id
            }
        };
        let mut replaced = Vec::new();
        if let Some(k) = self.nodes[id].key {
            let bucket = self.buckets.get(&k).cloned().unwrap_or_default();
            for &a in &bucket {
                if let Some(f) = self.p.derive(&self.nodes[id].vertex, &self.nodes[a].vertex) {
                    self.stats.merges += 1;
                    return (a, vec![f]);
                }
            }
            for &a in &bucket {
                if let Some(f) = self.p.derive(&self.nodes[a].vertex, &self.nodes[id].vertex) {
                    replaced.push((a, f));
                }
            }
        }
        self.nodes[id].active = true;
        if let Some(k) = self.nodes[id].key {
            self.buckets.entry(k).or_default().push(id);
        }
        self.fresh.push(id);
        for (a, f) in replaced {
            self.replace(a, id, f);
        }
        (id, Vec::new())
    }

    /// `old`'s value is `f` of `new`'s: redirect every reader of `old`.
    fn replace(&mut self, old: usize, new: usize, f: P::Derive) {
        self.stats.merges += 1;
        let deps = std::mem::take(&mut self.nodes[old].deps);
        for u in deps {
            if !self.nodes[u].active {
                continue;
            }
            if let Some(edges) = self.nodes[u].edges.as_mut() {
                for (t, chain) in edges.iter_mut() {
                    if *t == old {
                        *t = new;
                        chain.push(f.clone());
                    }
                }
                self.nodes[new].deps.insert(u);
                // The input changed from `old`'s value to `f` of `new`'s; `f` need not preserve bottom.
                self.push_update(u);
            }
        }
        if self.root == old {
            self.root = new;
            self.root_chain.push(f);
        }
        self.prune(old);
    }

    /// Deactivate `v` and, transitively, successors nothing active reads.
    /// Values are kept: they remain sound under-approximations.
    fn prune(&mut self, v: usize) {
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            if !self.nodes[x].active {
                continue;
            }
            self.nodes[x].active = false;
            if let Some(k) = self.nodes[x].key {
                if let Some(b) = self.buckets.get_mut(&k) {
                    b.retain(|&y| y != x);
                }
            }
            let edges = self.nodes[x].edges.take().unwrap_or_default();
            for (t, _) in edges {
                self.nodes[t].deps.remove(&x);
                if t != self.root && self.nodes[t].active && !self.nodes[t].deps.iter().any(|&u| self.nodes[u].active) {
                    stack.push(t);
                }
            }
        }
    }

    fn expand(&mut self, v: usize) -> Result<(), EngineError> {
        self.stats.explored += 1;
        let vertex = self.nodes[v].vertex.clone();
        let succs = self.p.successors(&vertex);
        let (dv, mono) = (self.nodes[v].dist, self.nodes[v].mono);
        self.nodes[v].edges = Some(Vec::with_capacity(succs.len()));
        for s in succs {
            let ds = self.p.dist(&s);
            if ds > dv || (!mono && ds == dv) {
                return Err(EngineError::ContractViolation(format!(
                    "successor at distance {ds} below {} vertex at distance {dv}",
                    if mono { "a monotonic" } else { "a non-monotonic" }
                )));
            }
            let (t, chain) = self.generate(s);
            if !self.nodes[v].active {
                // `v` itself was replaced by a larger vertex.
                self.flush_fresh();
                return Ok(());
            }
            self.nodes[t].deps.insert(v);
            self.nodes[v].edges.as_mut().unwrap().push((t, chain));
        }
        self.flush_fresh();
        if mono || self.pickable(v) {
            self.evaluate(v);
        } else {
            self.defer(v);
        }
        Ok(())
    }

    fn evaluate(&mut self, v: usize) {
        self.stats.evaluations += 1;
        let inputs: Vec<P::Value> = self.nodes[v]
            .edges
            .as_ref()
            .unwrap()
            .iter()
            .map(|(t, chain)| {
                let a = self.nodes[*t].alpha.clone();
                chain.iter().rev().fold(a, |x, f| self.p.apply_derive(f, &x))
            })
            .collect();
        let vertex = self.nodes[v].vertex.clone();
        let d = self.p.evaluate(&vertex, &inputs);
        if self.p.leq(&d, &self.nodes[v].alpha) {
            return;
        }
        self.nodes[v].alpha = d;
        let deps: Vec<usize> = self.nodes[v].deps.iter().copied().collect();
        for u in deps {
            let n = &self.nodes[u];
            if n.active && n.edges.is_some() && !self.p.ignores_all(&n.vertex, &n.alpha) {
                self.push_update(u);
            }
        }
        if v == self.root {
            let n = &self.nodes[v];
            if self.p.ignores_all(&n.vertex, &n.alpha) || self.p.early_stop(&self.root_value()) {
                self.stop = true;
            }
        }
    }
}
