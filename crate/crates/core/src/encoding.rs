//! TATL model checking as a dependency graph over (location, zone, formula)
//! vertices.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use num_rational::Rational64;

use crate::dbm::{ClockFrame, Cmp, Comparison, Dbm};
use crate::engine::{self, EngineError, Options, Provider, Stats};
use crate::federation::Federation;
use crate::logic::{Formula, PlayerSet};
use crate::model::Tmg;
use crate::symbolic::{Game, Sparse};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// No merging: vertices are only shared when their zones are equal.
    Equal,
    /// Merge vertices whose zones are included in one another.
    Incl,
    /// One vertex per location and formula, over the whole invariant.
    Expand,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Config {
    pub mode: Mode,
    pub unsat: bool,
    /// Stop as soon as the initial state is classified.
    pub early_stop: bool,
}

impl Config {
    pub fn new(mode: Mode, unsat: bool) -> Config {
        Config { mode, unsat, early_stop: true }
    }
}

/// A core formula node with clocks resolved against a frame.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    True,
    False,
    /// Whether each location carries the proposition.
    Atom(Vec<bool>),
    Clock(Comparison),
    Not(usize),
    Or(usize, usize),
    And(usize, usize),
    Next(PlayerSet, usize),
    Until { forced: bool, coalition: PlayerSet, hold: usize, reach: usize },
    Freeze(usize, usize),
}

/// Hash-consed formula nodes; children precede parents.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub nodes: Vec<Node>,
    pub depth: Vec<usize>,
    index: HashMap<Node, usize>,
}

impl Table {
    fn intern(&mut self, n: Node, depth: usize) -> usize {
        if let Some(&i) = self.index.get(&n) {
            return i;
        }
        self.nodes.push(n.clone());
        self.depth.push(depth);
        self.index.insert(n, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn build(&mut self, f: &Formula, m: &Tmg, frame: &ClockFrame) -> usize {
        let atom = |p: &str, pos: bool| Node::Atom((0..m.locations.len()).map(|l| m.has_label(l, p) == pos).collect());
        let n = match f {
            Formula::True => Node::True,
            Formula::False => Node::False,
            Formula::Atom(p) => atom(p, true),
            // A negated proposition is a literal; a Not node would wait for its whole stratum.
            Formula::Not(a) if matches!(**a, Formula::Atom(_)) => {
                let Formula::Atom(p) = &**a else { unreachable!() };
                atom(p, false)
            }
            Formula::Clock(c) => {
                let ix = |s: &str| frame.index_of(s).expect("clock names are checked by the parser");
                Node::Clock(Comparison::new(ix(&c.lhs), c.rhs.as_deref().map_or(0, ix), c.op, c.k))
            }
            Formula::Not(a) => Node::Not(self.build(a, m, frame)),
            Formula::Or(a, b) => Node::Or(self.build(a, m, frame), self.build(b, m, frame)),
            Formula::And(a, b) => Node::And(self.build(a, m, frame), self.build(b, m, frame)),
            Formula::Next(s, a) => Node::Next(*s, self.build(a, m, frame)),
            Formula::ForcedUntil(s, a, b) | Formula::PossibleUntil(s, a, b) => Node::Until {
                forced: matches!(f, Formula::ForcedUntil(..)),
                coalition: *s,
                hold: self.build(a, m, frame),
                reach: self.build(b, m, frame),
            },
            Formula::Freeze(z, a) => {
                let zi = frame.index_of(z).expect("formula clocks are in the frame");
                Node::Freeze(zi, self.build(a, m, frame))
            }
        };
        let below = self.children(&n).into_iter().map(|c| self.depth[c]).max().unwrap_or(0);
        let d = below + usize::from(matches!(n, Node::Not(_)));
        self.intern(n, d)
    }

    fn children(&self, n: &Node) -> Vec<usize> {
        match *n {
            Node::True | Node::False | Node::Atom(_) | Node::Clock(_) => vec![],
            Node::Not(a) | Node::Next(_, a) | Node::Freeze(_, a) => vec![a],
            Node::Or(a, b) | Node::And(a, b) | Node::Until { hold: a, reach: b, .. } => vec![a, b],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Vertex {
    pub loc: usize,
    pub formula: usize,
    pub zone: Dbm,
}

#[derive(Clone, Debug)]
pub struct Value {
    pub sat: Federation,
    pub unsat: Federation,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("the initial state violates the invariant of the initial location")]
    InitialInvariant,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// The dependency-graph instance for one model and one formula.
pub struct Tatl {
    pub game: Game,
    pub table: Table,
    pub root_formula: usize,
    cfg: Config,
    /// Per matrix index; only used to normalize vertex zones.
    max: Vec<i64>,
    origin: Vec<Rational64>,
    /// Target locations of each explored vertex's action successors, in input order.
    targets: HashMap<Vertex, Vec<usize>>,
    memo: HashMap<Vertex, Memo>,
}

/// Last inputs and results of a temporal vertex, per side.
struct Memo {
    sat_in: Vec<Federation>,
    sat: Federation,
    unsat_in: Vec<Federation>,
    unsat: Federation,
}

impl Tatl {
    pub fn new(model: &Tmg, f: &Formula, cfg: Config) -> Tatl {
        let zs = f.formula_clocks();
        let frame = ClockFrame::new(&model.clocks, &zs);
        let mut max = vec![0; frame.dim()];
        for i in 1..=model.clocks.len() {
            max[i] = model.ceiling;
        }
        for z in &zs {
            max[frame.index_of(z).unwrap()] = f.max_constant_for(z);
        }
        let mut table = Table::default();
        let root_formula = table.build(f, model, &frame);
        let origin = vec![Rational64::from_integer(0); frame.clocks()];
        Tatl { game: Game::new(model, frame.clone()), table, root_formula, cfg, max, origin, targets: HashMap::new(), memo: HashMap::new() }
    }

    pub fn frame(&self) -> &ClockFrame {
        &self.game.frame
    }

    pub fn root(&self) -> Result<Vertex, CheckError> {
        let init = self.game.model.init;
        let inv = self.game.invariant(init);
        if !inv.contains(&self.origin) {
            return Err(CheckError::InitialInvariant);
        }
        let zone = match self.cfg.mode {
            Mode::Expand => inv.clone(),
            _ => Dbm::zero(self.game.dim()).up().intersect(inv),
        };
        Ok(Vertex { loc: init, formula: self.root_formula, zone })
    }

    /// Zone of a generated vertex: a delay-closed superset of `z` within the
    /// invariant, drawn from a finite set.
    fn normalize(&self, loc: usize, z: &Dbm) -> Dbm {
        match self.cfg.mode {
            Mode::Expand => self.game.invariant(loc).clone(),
            _ => z.extrapolate(&self.max).up().intersect(self.game.invariant(loc)),
        }
    }

    /// Expansion abstraction: the whole invariant of the vertex location.
    pub fn expand(&self, v: &Vertex) -> Vertex {
        Vertex { zone: self.game.invariant(v.loc).clone(), ..v.clone() }
    }

    /// Action successors of a zone, in edge declaration order, skipping empty ones.
    fn action_successors(&self, v: &Vertex) -> Vec<(usize, Dbm)> {
        let r = Federation::from_dbm(v.zone.clone());
        self.game
            .out_edges(v.loc)
            .iter()
            .filter_map(|&e| {
                let post = self.game.post_edge(e, &r);
                let z = post.zones().first()?;
                let t = self.game.model.edges[e].target;
                Some((e, self.normalize(t, z)))
            })
            .collect()
    }

    fn action_vertices(&mut self, v: &Vertex, formula: usize) -> Vec<Vertex> {
        let succ = self.action_successors(v);
        let targets = succ.iter().map(|(e, _)| self.game.model.edges[*e].target).collect();
        self.targets.insert(v.clone(), targets);
        succ.into_iter().map(|(e, zone)| Vertex { loc: self.game.model.edges[e].target, formula, zone }).collect()
    }

    /// Sat and unsat parts of a Next or Until vertex. A side is recomputed
    /// only when its own inputs changed since the vertex was last evaluated.
    fn temporal(&mut self, v: &Vertex, x: &[Value], r: &Federation) -> (Federation, Federation) {
        let sat_in: Vec<&Federation> = x.iter().map(|x| &x.sat).collect();
        let unsat_in: Vec<&Federation> = x.iter().map(|x| &x.unsat).collect();
        let prev = self.memo.get(v);
        let same = |a: &[Federation], b: &[&Federation]| a.len() == b.len() && a.iter().zip(b).all(|(a, b)| a == *b);
        let sat = match prev {
            Some(m) if same(&m.sat_in, &sat_in) => m.sat.clone(),
            _ => self.temporal_side(v, x, r, false),
        };
        let unsat = match prev {
            _ if !self.cfg.unsat => Federation::empty(self.game.dim()),
            Some(m) if same(&m.unsat_in, &unsat_in) => m.unsat.clone(),
            _ => self.temporal_side(v, x, r, true),
        };
        let memo = Memo {
            sat_in: sat_in.into_iter().cloned().collect(),
            sat: sat.clone(),
            unsat_in: unsat_in.into_iter().cloned().collect(),
            unsat: unsat.clone(),
        };
        self.memo.insert(v.clone(), memo);
        (sat, unsat)
    }

    fn temporal_side(&self, v: &Vertex, x: &[Value], r: &Federation, dual: bool) -> Federation {
        let g = &self.game;
        let none = Federation::empty(g.dim());
        match &self.table.nodes[v.formula] {
            Node::Next(s, _) => {
                let (ws, wu) = self.next_sets(v, x);
                match dual {
                    false if !ws.0.is_empty() => g.forceable_at(v.loc, *s, r, &none, &ws),
                    true if !wu.0.is_empty() => g.unavoidable_at(v.loc, *s, r, &none, &wu),
                    _ => none,
                }
            }
            Node::Until { forced, coalition: s, .. } => {
                let (ws, wu) = self.next_sets(v, &x[2..]);
                if !dual {
                    let (w1, w2) = (&x[0].sat, &x[1].sat);
                    if w2.is_empty() && ws.0.is_empty() {
                        none
                    } else if *forced {
                        g.forceable_at(v.loc, *s, w1, w2, &ws)
                    } else {
                        g.unavoidable_at(v.loc, *s, w1, w2, &ws)
                    }
                } else {
                    // Falsified once both sides are falsified; until then the
                    // reach side must stay falsified.
                    let (m1, m2) = (&x[0].unsat, &x[1].unsat);
                    let both = m1.intersect(m2);
                    if both.is_empty() && wu.0.is_empty() {
                        none
                    } else if *forced {
                        g.unavoidable_at(v.loc, *s, m2, &both, &wu)
                    } else {
                        g.forceable_at(v.loc, *s, m2, &both, &wu)
                    }
                }
            }
            _ => unreachable!("not a temporal node"),
        }
    }

    fn next_sets(&self, v: &Vertex, inputs: &[Value]) -> (Sparse, Sparse) {
        let computed;
        let targets = match self.targets.get(v) {
            Some(t) => t,
            None => {
                computed = self.action_successors(v).iter().map(|(e, _)| self.game.model.edges[*e].target).collect();
                &computed
            }
        };
        let mut sat = Sparse::default();
        let mut unsat = Sparse::default();
        for (&t, x) in targets.iter().zip(inputs) {
            if !x.sat.is_empty() {
                sat.add(t, &x.sat);
            }
            if !x.unsat.is_empty() {
                unsat.add(t, &x.unsat);
            }
        }
        (sat, unsat)
    }
}

fn key_of(loc: usize, formula: usize) -> u64 {
    let mut h = DefaultHasher::new();
    (loc, formula).hash(&mut h);
    h.finish()
}

impl Provider for Tatl {
    type Vertex = Vertex;
    type Value = Value;
    type Derive = Dbm;

    fn bottom(&self, _: &Vertex) -> Value {
        let d = self.game.dim();
        Value { sat: Federation::empty(d), unsat: Federation::empty(d) }
    }

    fn leq(&self, a: &Value, b: &Value) -> bool {
        a.sat.subset_eq(&b.sat) && a.unsat.subset_eq(&b.unsat)
    }

    fn successors(&mut self, v: &Vertex) -> Vec<Vertex> {
        let at = |formula: usize, zone: Dbm| Vertex { loc: v.loc, formula, zone };
        match self.table.nodes[v.formula] {
            Node::True | Node::False | Node::Atom(_) | Node::Clock(_) => vec![],
            Node::Not(a) => vec![at(a, v.zone.clone())],
            Node::Or(a, b) | Node::And(a, b) => vec![at(a, v.zone.clone()), at(b, v.zone.clone())],
            Node::Freeze(z, a) => vec![at(a, self.normalize(v.loc, &v.zone.reset(z)))],
            Node::Next(_, a) => self.action_vertices(v, a),
            Node::Until { hold, reach, .. } => {
                let mut out = vec![at(hold, v.zone.clone()), at(reach, v.zone.clone())];
                out.extend(self.action_vertices(v, v.formula));
                out
            }
        }
    }

    fn evaluate(&mut self, v: &Vertex, x: &[Value]) -> Value {
        let r = Federation::from_dbm(v.zone.clone());
        let dim = self.game.dim();
        let none = Federation::empty(dim);
        let (sat, unsat) = match &self.table.nodes[v.formula] {
            Node::True => (r.clone(), none),
            Node::False => (none, r.clone()),
            Node::Atom(at) => {
                if at[v.loc] {
                    (r.clone(), none)
                } else {
                    (none, r.clone())
                }
            }
            Node::Clock(c) => {
                let d = Dbm::from_comparisons(dim, std::slice::from_ref(c));
                (r.intersect_dbm(&d), r.subtract_dbm(&d))
            }
            Node::Not(_) => (r.subtract(&x[0].sat), x[0].sat.clone()),
            Node::Or(..) => (x[0].sat.union(&x[1].sat), x[0].unsat.intersect(&x[1].unsat)),
            Node::And(..) => (x[0].sat.intersect(&x[1].sat), x[0].unsat.union(&x[1].unsat)),
            Node::Freeze(z, _) => {
                let zero = Dbm::from_comparisons(dim, &[Comparison::new(*z, 0, Cmp::Eq, 0)]);
                let back = |w: &Federation| w.intersect_dbm(&zero).free(*z).intersect(&r);
                (back(&x[0].sat), back(&x[0].unsat))
            }
            Node::Next(..) | Node::Until { .. } => self.temporal(v, x, &r),
        };
        let clip = |f: Federation| {
            if f.zones().iter().all(|z| z.subset_eq(&v.zone)) {
                f
            } else {
                f.intersect_dbm(&v.zone).reduce()
            }
        };
        let unsat = if self.cfg.unsat { clip(unsat) } else { Federation::empty(dim) };
        Value { sat: clip(sat), unsat }
    }

    fn is_monotonic(&self, v: &Vertex) -> bool {
        !matches!(self.table.nodes[v.formula], Node::Not(_))
    }

    fn dist(&self, v: &Vertex) -> usize {
        self.table.depth[v.formula]
    }

    fn merge_key(&self, v: &Vertex) -> Option<u64> {
        (self.cfg.mode == Mode::Incl).then(|| key_of(v.loc, v.formula))
    }

    fn derive(&self, small: &Vertex, big: &Vertex) -> Option<Dbm> {
        derive_inclusion(small, big)
    }

    fn apply_derive(&self, z: &Dbm, x: &Value) -> Value {
        Value { sat: x.sat.intersect_dbm(z), unsat: x.unsat.intersect_dbm(z) }
    }

    fn ignores_all(&self, v: &Vertex, x: &Value) -> bool {
        if x.sat.is_empty() && x.unsat.is_empty() {
            return false;
        }
        let known = if self.cfg.unsat { x.sat.union(&x.unsat) } else { x.sat.clone() };
        Federation::dbm_subset_eq(&v.zone, &known)
    }

    fn early_stop(&self, root: &Value) -> bool {
        self.cfg.early_stop && (root.sat.contains(&self.origin) || root.unsat.contains(&self.origin))
    }
}

/// `small ⪯ big` with derive function "intersect with the smaller zone".
pub fn derive_inclusion(small: &Vertex, big: &Vertex) -> Option<Dbm> {
    (small.loc == big.loc && small.formula == big.formula && small.zone.subset_eq(&big.zone))
        .then(|| small.zone.clone())
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    /// Whether the initial state satisfies the formula.
    pub verdict: bool,
    pub root: Vertex,
    pub sat: Federation,
    pub unsat: Federation,
    pub frame: ClockFrame,
    pub stats: Stats,
    pub stopped_early: bool,
}

/// Check `f` (a core formula, negations pushed down) at the initial state.
pub fn check(model: &Tmg, f: &Formula, cfg: Config, opts: &Options) -> Result<CheckResult, CheckError> {
    let mut t = Tatl::new(model, f, cfg);
    let root = t.root()?;
    let opts = Options { merge: cfg.mode == Mode::Incl, ..opts.clone() };
    let out = engine::solve(&mut t, root.clone(), &opts)?;
    let verdict = out.value.sat.contains(&t.origin);
    debug_assert!(!(verdict && out.value.unsat.contains(&t.origin)));
    Ok(CheckResult {
        verdict,
        root,
        sat: out.value.sat,
        unsat: out.value.unsat,
        frame: t.frame().clone(),
        stats: out.stats,
        stopped_early: out.stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, push_negations, desugar};
    use crate::model::{parse_model, FIG1_MODEL};

    fn run(q: &str, mode: Mode, unsat: bool) -> CheckResult {
        let m = parse_model(FIG1_MODEL).unwrap();
        let f = push_negations(&desugar(&parse_formula(q, &m).unwrap()));
        check(&m, &f, Config::new(mode, unsat), &Options::default()).unwrap()
    }

    #[test]
    fn root_vertex_of_fig1() {
        let m = parse_model(FIG1_MODEL).unwrap();
        let f = push_negations(&desugar(&parse_formula("<<I,III>> (!c U goal)", &m).unwrap()));
        for mode in [Mode::Equal, Mode::Expand] {
            let t = Tatl::new(&m, &f, Config::new(mode, false));
            let r = t.root().unwrap();
            assert_eq!(r.loc, 0);
            assert_eq!(r.zone.display(t.frame()).to_string(), "x<=4");
        }
    }

    #[test]
    fn simple_verdicts_agree_across_modes() {
        for (q, want) in [("<<I,III>> (!c U goal)", true), ("<<III>> F goal", false), ("[[ ]] F goal", true), ("<< >> F goal", false)] {
            for mode in [Mode::Equal, Mode::Incl, Mode::Expand] {
                for unsat in [false, true] {
                    assert_eq!(run(q, mode, unsat).verdict, want, "{q} {mode:?} {unsat}");
                }
            }
        }
    }

    #[test]
    fn inclusion_derivation() {
        let iv = |lo, hi| {
            Dbm::from_comparisons(2, &[Comparison::new(1, 0, Cmp::Ge, lo), Comparison::new(1, 0, Cmp::Le, hi)])
        };
        let v = |z| Vertex { loc: 1, formula: 0, zone: z };
        assert!(derive_inclusion(&v(iv(0, 2)), &v(iv(0, 5))).is_some());
        assert!(derive_inclusion(&v(iv(0, 5)), &v(iv(0, 2))).is_none());
        assert!(derive_inclusion(&v(iv(0, 3)), &v(iv(2, 5))).is_none());
        assert!(derive_inclusion(&v(iv(2, 5)), &v(iv(0, 3))).is_none());
        let other = Vertex { formula: 1, ..v(iv(0, 5)) };
        assert!(derive_inclusion(&v(iv(0, 2)), &other).is_none());
    }
}
