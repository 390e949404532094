//! Symbolic game operators over location-indexed federations.

use crate::dbm::{ClockFrame, Cmp, Comparison, Dbm};
use crate::federation::Federation;
use crate::logic::PlayerSet;
use crate::model::Tmg;

/// One federation per location; every entry lies within the location invariant.
pub type StateSet = Vec<Federation>;

/// Sparse access to a location-indexed set of states.
pub trait LocSet {
    fn at(&self, loc: usize) -> Option<&Federation>;
}

impl LocSet for [Federation] {
    fn at(&self, loc: usize) -> Option<&Federation> {
        self.get(loc).filter(|f| !f.is_empty())
    }
}

impl LocSet for Vec<Federation> {
    fn at(&self, loc: usize) -> Option<&Federation> {
        self.as_slice().at(loc)
    }
}

/// Sorted `(location, federation)` pairs.
#[derive(Clone, Debug, Default)]
pub struct Sparse(pub Vec<(usize, Federation)>);

impl Sparse {
    pub fn add(&mut self, loc: usize, f: &Federation) {
        if f.is_empty() {
            return;
        }
        match self.0.binary_search_by_key(&loc, |p| p.0) {
            Ok(i) => self.0[i].1.union_with(f),
            Err(i) => self.0.insert(i, (loc, f.clone())),
        }
    }
}

impl LocSet for Sparse {
    fn at(&self, loc: usize) -> Option<&Federation> {
        self.0.binary_search_by_key(&loc, |p| p.0).ok().map(|i| &self.0[i].1)
    }
}

/// A model together with a clock frame and the per-location and per-edge
/// zones every operator needs.
#[derive(Clone, Debug)]
pub struct Game {
    pub model: Tmg,
    pub frame: ClockFrame,
    dim: usize,
    inv: Vec<Dbm>,
    universe: Vec<Federation>,
    timelock: Vec<Federation>,
    /// Guard ∩ source invariant.
    guard: Vec<Dbm>,
    /// Target invariant ∩ (reset clocks = 0).
    landing: Vec<Dbm>,
    /// States from which the edge can fire.
    enabled: Vec<Federation>,
    out: Vec<Vec<usize>>,
}

impl Game {
    pub fn new(model: &Tmg, frame: ClockFrame) -> Game {
        let dim = frame.dim();
        let inv: Vec<Dbm> = (0..model.locations.len()).map(|l| model.invariant_dbm(l, dim)).collect();
        let universe: Vec<Federation> = inv.iter().map(|d| Federation::from_dbm(d.clone())).collect();
        let timelock = model
            .locations
            .iter()
            .enumerate()
            .map(|(l, loc)| {
                let mut f = Federation::empty(dim);
                for c in &loc.invariant {
                    if matches!(c.op, Cmp::Le | Cmp::Eq) {
                        let mut d = inv[l].clone();
                        if d.constrain_cmp(&Comparison::new(c.lhs, 0, Cmp::Eq, c.k)) {
                            f.add_zone(d);
                        }
                    }
                }
                f
            })
            .collect();
        let mut guard = Vec::new();
        let mut landing = Vec::new();
        let mut out = vec![Vec::new(); model.locations.len()];
        for (i, e) in model.edges.iter().enumerate() {
            guard.push(model.guard_dbm(i, dim).intersect(&inv[e.source]));
            let mut t = inv[e.target].clone();
            for &x in &e.resets {
                t.constrain_cmp(&Comparison::new(x, 0, Cmp::Eq, 0));
            }
            landing.push(t);
            out[e.source].push(i);
        }
        let mut g = Game { model: model.clone(), frame, dim, inv, universe, timelock, guard, landing, enabled: Vec::new(), out };
        g.enabled = (0..model.edges.len())
            .map(|e| g.pred_edge(e, &g.universe[model.edges[e].target].clone()))
            .collect();
        g
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn locations(&self) -> usize {
        self.inv.len()
    }

    pub fn invariant(&self, loc: usize) -> &Dbm {
        &self.inv[loc]
    }

    pub fn universe_at(&self, loc: usize) -> &Federation {
        &self.universe[loc]
    }

    pub fn universe(&self) -> StateSet {
        self.universe.clone()
    }

    pub fn empty_set(&self) -> StateSet {
        vec![Federation::empty(self.dim); self.locations()]
    }

    pub fn out_edges(&self, loc: usize) -> &[usize] {
        &self.out[loc]
    }

    pub fn enabled(&self, edge: usize) -> &Federation {
        &self.enabled[edge]
    }

    /// Sources of edge `e` whose successor lies in `w` (a set at the target).
    pub fn pred_edge(&self, e: usize, w: &Federation) -> Federation {
        if w.is_empty() {
            return Federation::empty(self.dim);
        }
        let edge = &self.model.edges[e];
        let mut f = w.intersect_dbm(&self.landing[e]);
        for &x in &edge.resets {
            f = f.free(x);
        }
        f.intersect_dbm(&self.guard[e])
    }

    /// Successors of `w` (a set at the source) via edge `e`.
    pub fn post_edge(&self, e: usize, w: &Federation) -> Federation {
        let edge = &self.model.edges[e];
        w.intersect_dbm(&self.guard[e]).reset(&edge.resets).intersect_dbm(&self.inv[edge.target])
    }

    pub fn pred_action(&self, e: usize, w: &[Federation]) -> StateSet {
        let mut r = self.empty_set();
        let edge = &self.model.edges[e];
        r[edge.source] = self.pred_edge(e, &w[edge.target]);
        r
    }

    pub fn post_action(&self, e: usize, w: &[Federation]) -> StateSet {
        let mut r = self.empty_set();
        let edge = &self.model.edges[e];
        r[edge.target] = self.post_edge(e, &w[edge.source]);
        r
    }

    fn pred_edges_at(&self, loc: usize, keep: impl Fn(usize) -> bool, w: &(impl LocSet + ?Sized)) -> Federation {
        let mut r = Federation::empty(self.dim);
        for &e in &self.out[loc] {
            let edge = &self.model.edges[e];
            if !keep(edge.player) {
                continue;
            }
            if let Some(t) = w.at(edge.target) {
                r.union_with(&self.pred_edge(e, t));
            }
        }
        r
    }

    /// Pred_S at one location.
    pub fn pred_coalition_at(&self, loc: usize, s: PlayerSet, w: &(impl LocSet + ?Sized)) -> Federation {
        self.pred_edges_at(loc, |p| s.contains(p), w)
    }

    pub fn pred_coalition(&self, s: PlayerSet, w: &[Federation]) -> StateSet {
        (0..self.locations()).map(|l| self.pred_coalition_at(l, s, w)).collect()
    }

    /// Safe timed predecessors: states that can delay into `good` without
    /// meeting `bad` on the way (endpoints included), within the invariant.
    pub fn pred_lambda_at(&self, loc: usize, good: &Federation, bad: &Federation) -> Federation {
        let inv = &self.inv[loc];
        let mut out = Federation::empty(self.dim);
        for g in good.zones() {
            let gdown = g.down().intersect(inv);
            let mut acc = Federation::from_dbm(gdown.clone());
            for b in bad.zones() {
                if !b.intersects(&gdown) {
                    continue;
                }
                let bdown = b.down();
                // Either b is nowhere ahead, or g is reached at a point strictly before b.
                let mut pt = Federation::from_dbm(gdown.clone()).subtract_dbm(&bdown);
                let before = g.intersect(&bdown);
                for p in before.subtract(b) {
                    let d = p.down().intersect(inv);
                    if !d.is_empty() {
                        pt.add_zone(d);
                    }
                }
                acc = acc.intersect(&pt);
                if acc.is_empty() {
                    break;
                }
            }
            out.union_with(&acc);
        }
        out
    }

    pub fn pred_lambda(&self, good: &[Federation], bad: &[Federation]) -> StateSet {
        (0..self.locations()).map(|l| self.pred_lambda_at(l, &good[l], &bad[l]).reduce()).collect()
    }

    /// Time-locked states of one location (some invariant upper bound is tight).
    pub fn timelocked_at(&self, loc: usize) -> &Federation {
        &self.timelock[loc]
    }

    pub fn timelocked(&self, w: &[Federation]) -> StateSet {
        (0..self.locations()).map(|l| w[l].intersect(&self.timelock[l])).collect()
    }

    /// For each outgoing edge: (edge, owned by S, Pred_e(w)).
    fn edge_preds(&self, loc: usize, s: PlayerSet, w: &(impl LocSet + ?Sized)) -> Vec<(usize, bool, Federation)> {
        self.out[loc]
            .iter()
            .map(|&e| {
                let edge = &self.model.edges[e];
                let into = match w.at(edge.target) {
                    Some(t) => self.pred_edge(e, t),
                    None => Federation::empty(self.dim),
                };
                (e, s.contains(edge.player), into)
            })
            .collect()
    }

    /// Pred_e of the complement of w, given `into` = Pred_e(w). Edges are
    /// deterministic: a source either lands in w or outside it.
    fn outside(&self, e: usize, into: &Federation) -> Federation {
        if into.is_empty() {
            self.enabled[e].clone()
        } else {
            self.enabled[e].subtract(into)
        }
    }

    /// Forceable at one location.
    pub fn forceable_at(
        &self,
        loc: usize,
        s: PlayerSet,
        w1: &Federation,
        w2: &Federation,
        wnext: &(impl LocSet + ?Sized),
    ) -> Federation {
        let preds = self.edge_preds(loc, s, wnext);
        let mut pred_s = Federation::empty(self.dim);
        let mut pred_o = Federation::empty(self.dim);
        let mut pred_o_out = Federation::empty(self.dim);
        for (e, mine, into) in &preds {
            if *mine {
                pred_s.union_with(into);
            } else {
                pred_o.union_with(into);
                pred_o_out.union_with(&self.outside(*e, into));
            }
        }
        // Coalition escapes only matter at time-locks where an opponent may land in wnext.
        let mut h = self.timelock[loc].intersect(&pred_o);
        if !h.is_empty() {
            let mut all_out = pred_o_out.clone();
            for (e, _, into) in preds.iter().filter(|p| p.1) {
                all_out.union_with(&self.outside(*e, into));
            }
            h = h.subtract(&all_out);
        }
        let mut good = w2.clone();
        good.union_with(&pred_s);
        good.union_with(&h);
        let mut bad = self.universe[loc].subtract(w1);
        bad.union_with(&pred_o_out);
        let bad = bad.subtract(w2);
        self.pred_lambda_at(loc, &good, &bad).reduce()
    }

    /// Unavoidable at one location.
    pub fn unavoidable_at(
        &self,
        loc: usize,
        s: PlayerSet,
        w1: &Federation,
        w2: &Federation,
        wnext: &(impl LocSet + ?Sized),
    ) -> Federation {
        let preds = self.edge_preds(loc, s, wnext);
        let mut pred_s = Federation::empty(self.dim);
        let mut pred_s_out = Federation::empty(self.dim);
        let mut pred_o = Federation::empty(self.dim);
        for (e, mine, into) in &preds {
            if *mine {
                pred_s.union_with(into);
                pred_s_out.union_with(&self.outside(*e, into));
            } else {
                pred_o.union_with(into);
            }
        }
        let h = self.timelock[loc].intersect(&pred_s);
        let mut good = w2.clone();
        good.union_with(&pred_o);
        good.union_with(&h);
        let mut bad = self.universe[loc].subtract(w1);
        bad.union_with(&pred_s_out.subtract(&pred_o));
        let bad = bad.subtract(w2);
        self.pred_lambda_at(loc, &good, &bad).reduce()
    }

    pub fn forceable(&self, s: PlayerSet, w1: &[Federation], w2: &[Federation], wnext: &[Federation]) -> StateSet {
        (0..self.locations()).map(|l| self.forceable_at(l, s, &w1[l], &w2[l], wnext)).collect()
    }

    pub fn unavoidable(&self, s: PlayerSet, w1: &[Federation], w2: &[Federation], wnext: &[Federation]) -> StateSet {
        (0..self.locations()).map(|l| self.unavoidable_at(l, s, &w1[l], &w2[l], wnext)).collect()
    }

    pub fn complement(&self, w: &[Federation]) -> StateSet {
        (0..self.locations()).map(|l| self.universe[l].subtract(&w[l]).reduce()).collect()
    }
}
