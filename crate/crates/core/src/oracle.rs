//! Region-graph ground truth for small instances.
//!
//! Everything here works on concrete representative valuations and explicit
//! region sets; none of it uses zones, so it can be compared against the
//! symbolic operators and the dependency-graph engine.

use std::collections::HashMap;

use num_rational::Rational64;

use crate::dbm::{ClockFrame, Cmp, Comparison, Dbm};
use crate::federation::Federation;
use crate::logic::{Formula, PlayerSet};
use crate::model::{ConcreteState, Tmg};

pub const MAX_CLOCKS: usize = 3;
pub const MAX_CONSTANT: i64 = 8;
pub const MAX_LOCATIONS: usize = 40;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{0} clocks exceed the oracle bound of {MAX_CLOCKS}")]
    TooManyClocks(usize),
    #[error("constant {0} exceeds the oracle bound of {MAX_CONSTANT}")]
    ConstantTooLarge(i64),
    #[error("{0} locations exceed the oracle bound of {MAX_LOCATIONS}")]
    TooManyLocations(usize),
    #[error("diagonal clock constraints are not supported by the oracle")]
    Diagonal,
    #[error("invalid strategy profile: {0}")]
    InvalidProfile(String),
}

/// A clock region: per clock an integer part (`max + 1` means above the
/// clock's maximal constant) and a fractional rank (0 for a zero fraction;
/// equal ranks mean equal fractions). Ranks of non-zero fractions are dense
/// from 1; clocks above their constant have rank 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    pub loc: usize,
    pub ints: Vec<i64>,
    pub ranks: Vec<u8>,
}

pub struct RegionGraph {
    pub model: Tmg,
    pub frame: ClockFrame,
    /// Maximal constant per clock (clock order, no reference clock).
    pub max: Vec<i64>,
    pub regions: Vec<Region>,
    index: HashMap<Region, usize>,
    /// Immediate delay successor within the invariant; `None` when time-locked.
    /// Unbounded regions are their own successor.
    pub delay: Vec<Option<usize>>,
    /// Enabled edges and their target regions.
    pub disc: Vec<Vec<(usize, usize)>>,
}

/// A set of regions of one graph.
pub type RegionSet = Vec<bool>;

impl RegionGraph {
    /// Enumerate all regions inside location invariants. `formula_clocks`
    /// pairs each formula clock with its maximal constant.
    pub fn build(model: &Tmg, formula_clocks: &[(String, i64)]) -> Result<RegionGraph, OracleError> {
        let names: Vec<String> = formula_clocks.iter().map(|p| p.0.clone()).collect();
        let frame = ClockFrame::new(&model.clocks, &names);
        let n = frame.clocks();
        if n > MAX_CLOCKS {
            return Err(OracleError::TooManyClocks(n));
        }
        if model.locations.len() > MAX_LOCATIONS {
            return Err(OracleError::TooManyLocations(model.locations.len()));
        }
        let mut max = vec![model.ceiling; model.clocks.len()];
        max.extend(formula_clocks.iter().map(|p| p.1.max(0)));
        if let Some(&k) = max.iter().find(|&&k| k > MAX_CONSTANT) {
            return Err(OracleError::ConstantTooLarge(k));
        }
        let mut g = RegionGraph {
            model: model.clone(),
            frame,
            max,
            regions: Vec::new(),
            index: HashMap::new(),
            delay: Vec::new(),
            disc: Vec::new(),
        };
        for loc in 0..model.locations.len() {
            for ints in int_vectors(&g.max) {
                // A fraction is only possible strictly below the maximal constant.
                let free: Vec<usize> = (0..n).filter(|&c| ints[c] < g.max[c]).collect();
                for ranks in rank_vectors(n, &free) {
                    let r = Region { loc, ints: ints.clone(), ranks };
                    if model.invariant_holds(loc, &g.representative(&r)) {
                        g.index.insert(r.clone(), g.regions.len());
                        g.regions.push(r);
                    }
                }
            }
        }
        for i in 0..g.regions.len() {
            let r = &g.regions[i];
            let succ = g.delay_successor(r);
            let d = g.index.get(&succ).copied();
            let rep = g.representative(r);
            let s = ConcreteState { location: r.loc, valuation: rep };
            let disc = (0..model.edges.len())
                .filter_map(|e| {
                    let t = model.step_edge(&s, e)?;
                    Some((e, g.region_index(t.location, &t.valuation)))
                })
                .collect();
            g.delay.push(d);
            g.disc.push(disc);
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn empty_set(&self) -> RegionSet {
        vec![false; self.len()]
    }

    pub fn full_set(&self) -> RegionSet {
        vec![true; self.len()]
    }

    /// Valuation on the 1/(n+1) grid; clocks above their constant sit at `max + 1`.
    pub fn representative(&self, r: &Region) -> Vec<Rational64> {
        let den = self.max.len() as i64 + 1;
        r.ints
            .iter()
            .zip(&r.ranks)
            .map(|(&i, &k)| Rational64::from_integer(i) + Rational64::new(k as i64, den))
            .collect()
    }

    /// A second member of the region, away from the canonical grid point.
    pub fn other_point(&self, r: &Region) -> Vec<Rational64> {
        let n = self.max.len() as i64;
        // Fractions (2k+1)/(2(n+1)) keep the rank order and stay below 1.
        let den = 2 * (n + 1);
        r.ints
            .iter()
            .zip(&r.ranks)
            .enumerate()
            .map(|(c, (&i, &k))| {
                if i > self.max[c] {
                    Rational64::from_integer(i) + Rational64::new(c as i64 + 1, 3)
                } else if k == 0 {
                    Rational64::from_integer(i)
                } else {
                    Rational64::from_integer(i) + Rational64::new(2 * k as i64 + 1, den)
                }
            })
            .collect()
    }

    pub fn region_of(&self, loc: usize, v: &[Rational64]) -> Region {
        let n = v.len();
        let mut ints = vec![0; n];
        let mut fracs = Vec::new();
        for c in 0..n {
            let fl = v[c].floor();
            if v[c] > Rational64::from_integer(self.max[c]) {
                ints[c] = self.max[c] + 1;
            } else {
                ints[c] = fl.to_integer();
                let f = v[c] - fl;
                if f > Rational64::from_integer(0) {
                    fracs.push(f);
                }
            }
        }
        fracs.sort();
        fracs.dedup();
        let ranks = (0..n)
            .map(|c| {
                if ints[c] > self.max[c] {
                    return 0;
                }
                let f = v[c] - v[c].floor();
                fracs.iter().position(|&g| g == f).map_or(0, |p| p as u8 + 1)
            })
            .collect();
        Region { loc, ints, ranks }
    }

    /// Index of the region containing a valuation, which must satisfy the invariant.
    pub fn region_index(&self, loc: usize, v: &[Rational64]) -> usize {
        let r = self.region_of(loc, v);
        *self.index.get(&r).unwrap_or_else(|| panic!("valuation outside the invariant of location {loc}"))
    }

    pub fn index_of(&self, r: &Region) -> Option<usize> {
        self.index.get(r).copied()
    }

    pub fn initial(&self) -> usize {
        self.region_index(self.model.init, &vec![Rational64::from_integer(0); self.max.len()])
    }

    fn delay_successor(&self, r: &Region) -> Region {
        let n = r.ints.len();
        let free: Vec<usize> = (0..n).filter(|&c| r.ints[c] <= self.max[c]).collect();
        let mut s = r.clone();
        if free.is_empty() {
            return s;
        }
        if free.iter().any(|&c| r.ranks[c] == 0) {
            // Integer clocks start moving: they get the smallest fraction.
            for &c in &free {
                if r.ranks[c] == 0 {
                    if r.ints[c] == self.max[c] {
                        s.ints[c] = self.max[c] + 1;
                        s.ranks[c] = 0;
                    } else {
                        s.ranks[c] = 1;
                    }
                } else {
                    s.ranks[c] += 1;
                }
            }
        } else {
            // The largest fractions reach the next integer.
            let top = free.iter().map(|&c| r.ranks[c]).max().unwrap();
            for &c in &free {
                if r.ranks[c] == top {
                    s.ints[c] += 1;
                    s.ranks[c] = 0;
                }
            }
        }
        // Clocks that left for "above" may leave a gap in the ranks.
        let mut used: Vec<u8> = s.ranks.iter().copied().filter(|&k| k > 0).collect();
        used.sort_unstable();
        used.dedup();
        for k in s.ranks.iter_mut().filter(|k| **k > 0) {
            *k = used.iter().position(|u| u == k).unwrap() as u8 + 1;
        }
        s
    }

    /// The region as a zone over the graph's frame.
    pub fn region_dbm(&self, r: &Region) -> Dbm {
        let n = r.ints.len();
        let mut cs = Vec::new();
        for c in 0..n {
            let (i, k) = (r.ints[c], r.ranks[c]);
            if i > self.max[c] {
                cs.push(Comparison::new(c + 1, 0, Cmp::Gt, self.max[c]));
            } else if k == 0 {
                cs.push(Comparison::new(c + 1, 0, Cmp::Eq, i));
            } else {
                cs.push(Comparison::new(c + 1, 0, Cmp::Gt, i));
                cs.push(Comparison::new(c + 1, 0, Cmp::Lt, i + 1));
            }
        }
        for c in 0..n {
            for d in 0..n {
                if c == d || r.ints[c] > self.max[c] || r.ints[d] > self.max[d] || r.ranks[c] == 0 || r.ranks[d] == 0 {
                    continue;
                }
                let diff = r.ints[c] - r.ints[d];
                if r.ranks[c] < r.ranks[d] {
                    cs.push(Comparison::new(c + 1, d + 1, Cmp::Lt, diff));
                } else if r.ranks[c] == r.ranks[d] {
                    cs.push(Comparison::new(c + 1, d + 1, Cmp::Eq, diff));
                }
            }
        }
        Dbm::from_comparisons(n + 1, &cs)
    }

    /// Per-location federations covering exactly the regions of `w`.
    pub fn to_federations(&self, w: &[bool]) -> Vec<Federation> {
        let dim = self.frame.dim();
        let mut out = vec![Federation::empty(dim); self.model.locations.len()];
        for (i, r) in self.regions.iter().enumerate() {
            if w[i] {
                out[r.loc].add_zone(self.region_dbm(r));
            }
        }
        out
    }

    /// Regions whose representative lies in the location's federation.
    pub fn from_federations(&self, f: &[Federation]) -> RegionSet {
        self.regions.iter().map(|r| f[r.loc].contains(&self.representative(r))).collect()
    }

    pub fn timelocked(&self, i: usize) -> bool {
        self.delay[i].is_none()
    }

    fn owner(&self, e: usize) -> usize {
        self.model.edges[e].player
    }

    pub fn pred_action(&self, e: usize, w: &[bool]) -> RegionSet {
        (0..self.len()).map(|i| self.disc[i].iter().any(|&(f, t)| f == e && w[t])).collect()
    }

    pub fn post_action(&self, e: usize, w: &[bool]) -> RegionSet {
        let mut out = self.empty_set();
        for i in 0..self.len() {
            if w[i] {
                for &(f, t) in &self.disc[i] {
                    if f == e {
                        out[t] = true;
                    }
                }
            }
        }
        out
    }

    pub fn timelocked_set(&self, w: &[bool]) -> RegionSet {
        (0..self.len()).map(|i| w[i] && self.timelocked(i)).collect()
    }

    /// Regions from which some delay reaches `good` without touching `bad`
    /// at any point of the way, endpoints included.
    pub fn pred_lambda(&self, good: &[bool], bad: &[bool]) -> RegionSet {
        (0..self.len())
            .map(|start| {
                let mut i = start;
                let mut steps = 0;
                loop {
                    if bad[i] {
                        return false;
                    }
                    if good[i] {
                        return true;
                    }
                    match self.delay[i] {
                        Some(j) if j != i && steps <= self.len() => {
                            i = j;
                            steps += 1;
                        }
                        _ => return false,
                    }
                }
            })
            .collect()
    }

    /// Coalition `s` can make the system stay in `w1` until `w2`, or until an
    /// action into `wnext` happens, by delaying and acting.
    pub fn forceable(&self, s: PlayerSet, w1: &[bool], w2: &[bool], wnext: &[bool]) -> RegionSet {
        let n = self.len();
        let mut good = vec![false; n];
        let mut bad = vec![false; n];
        for i in 0..n {
            let mine_in = self.disc[i].iter().any(|&(e, t)| s.contains(self.owner(e)) && wnext[t]);
            let opp_in = self.disc[i].iter().any(|&(e, t)| !s.contains(self.owner(e)) && wnext[t]);
            let opp_out = self.disc[i].iter().any(|&(e, t)| !s.contains(self.owner(e)) && !wnext[t]);
            let any_out = self.disc[i].iter().any(|&(_, t)| !wnext[t]);
            // At a time-lock somebody must act; if every enabled action lands in
            // wnext and some opponent action exists, the outcome is fine.
            let forced = self.timelocked(i) && opp_in && !any_out;
            good[i] = w2[i] || mine_in || forced;
            bad[i] = !w2[i] && (!w1[i] || opp_out);
        }
        self.pred_lambda(&good, &bad)
    }

    /// Whatever coalition `s` does, the system may stay in `w1` until `w2`,
    /// or until an action into `wnext`.
    pub fn unavoidable(&self, s: PlayerSet, w1: &[bool], w2: &[bool], wnext: &[bool]) -> RegionSet {
        let n = self.len();
        let mut good = vec![false; n];
        let mut bad = vec![false; n];
        for i in 0..n {
            let mine_in = self.disc[i].iter().any(|&(e, t)| s.contains(self.owner(e)) && wnext[t]);
            let mine_out = self.disc[i].iter().any(|&(e, t)| s.contains(self.owner(e)) && !wnext[t]);
            let opp_in = self.disc[i].iter().any(|&(e, t)| !s.contains(self.owner(e)) && wnext[t]);
            good[i] = w2[i] || opp_in || (self.timelocked(i) && mine_in);
            bad[i] = !w2[i] && (!w1[i] || (mine_out && !opp_in));
        }
        self.pred_lambda(&good, &bad)
    }

    fn lfp(&self, step: impl Fn(&[bool]) -> RegionSet) -> RegionSet {
        let mut x = self.empty_set();
        loop {
            let y = step(&x);
            if y == x {
                return x;
            }
            x = y;
        }
    }

    fn reset_set(&self, z: usize, w: &[bool]) -> RegionSet {
        self.regions
            .iter()
            .map(|r| {
                let mut v = self.representative(r);
                v[z - 1] = Rational64::from_integer(0);
                w[self.region_index(r.loc, &v)]
            })
            .collect()
    }

    fn eval(&self, f: &Formula, memo: &mut HashMap<Formula, (RegionSet, RegionSet)>) -> (RegionSet, RegionSet) {
        if let Some(x) = memo.get(f) {
            return x.clone();
        }
        let all = self.full_set();
        let not = |w: &[bool]| w.iter().map(|b| !b).collect::<RegionSet>();
        let and = |a: &[bool], b: &[bool]| a.iter().zip(b).map(|(x, y)| *x && *y).collect::<RegionSet>();
        let or = |a: &[bool], b: &[bool]| a.iter().zip(b).map(|(x, y)| *x || *y).collect::<RegionSet>();
        let r = match f {
            Formula::True => (all.clone(), self.empty_set()),
            Formula::False => (self.empty_set(), all.clone()),
            Formula::Atom(p) => {
                let s: RegionSet = self.regions.iter().map(|r| self.model.has_label(r.loc, p)).collect();
                let u = not(&s);
                (s, u)
            }
            Formula::Clock(c) => {
                let ix = |s: &str| self.frame.index_of(s).unwrap();
                let cmp = Comparison::new(ix(&c.lhs), c.rhs.as_deref().map_or(0, ix), c.op, c.k);
                let s: RegionSet = self.regions.iter().map(|r| cmp.holds(&self.representative(r))).collect();
                let u = not(&s);
                (s, u)
            }
            Formula::Not(a) => {
                let (s, _) = self.eval(a, memo);
                (not(&s), s)
            }
            Formula::Or(a, b) => {
                let (s1, u1) = self.eval(a, memo);
                let (s2, u2) = self.eval(b, memo);
                (or(&s1, &s2), and(&u1, &u2))
            }
            Formula::And(a, b) => {
                let (s1, u1) = self.eval(a, memo);
                let (s2, u2) = self.eval(b, memo);
                (and(&s1, &s2), or(&u1, &u2))
            }
            Formula::Freeze(z, a) => {
                let zi = self.frame.index_of(z).unwrap();
                let (s, u) = self.eval(a, memo);
                (self.reset_set(zi, &s), self.reset_set(zi, &u))
            }
            Formula::Next(p, a) => {
                let (s, u) = self.eval(a, memo);
                let none = self.empty_set();
                (self.forceable(*p, &all, &none, &s), self.unavoidable(*p, &all, &none, &u))
            }
            Formula::ForcedUntil(p, a, b) | Formula::PossibleUntil(p, a, b) => {
                let forced = matches!(f, Formula::ForcedUntil(..));
                let (s1, u1) = self.eval(a, memo);
                let (s2, u2) = self.eval(b, memo);
                let both = and(&u1, &u2);
                let sat = self.lfp(|x| {
                    if forced {
                        self.forceable(*p, &s1, &s2, x)
                    } else {
                        self.unavoidable(*p, &s1, &s2, x)
                    }
                });
                let unsat = self.lfp(|x| {
                    if forced {
                        self.unavoidable(*p, &u2, &both, x)
                    } else {
                        self.forceable(*p, &u2, &both, x)
                    }
                });
                (sat, unsat)
            }
        };
        memo.insert(f.clone(), r.clone());
        r
    }

    /// Satisfaction and dual (definitely unsatisfied) sets of a core formula.
    pub fn evaluate(&self, f: &Formula) -> (RegionSet, RegionSet) {
        self.eval(f, &mut HashMap::new())
    }

    /// Every outcome of the memoryless region profile from `start` stays in
    /// `w1` until it reaches `w2`. `profile` maps (player, region) to an edge;
    /// players of `s` absent from it wait.
    pub fn check_strategy_witness(
        &self,
        s: PlayerSet,
        profile: &HashMap<(usize, usize), usize>,
        w1: &[bool],
        w2: &[bool],
        start: usize,
    ) -> Result<bool, OracleError> {
        let n = self.len();
        let mut moves: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (&(p, i), &e) in profile {
            if i >= n {
                return Err(OracleError::InvalidProfile(format!("unknown region {i}")));
            }
            if !s.contains(p) || self.owner(e) != p {
                return Err(OracleError::InvalidProfile(format!(
                    "action {} does not belong to coalition player {p}",
                    self.model.edges[e].action
                )));
            }
            if !self.disc[i].iter().any(|&(f, _)| f == e) {
                return Err(OracleError::InvalidProfile(format!(
                    "action {} is not enabled in region {i}",
                    self.model.edges[e].action
                )));
            }
        }
        for i in 0..n {
            let acting = (0..64).any(|p| s.contains(p) && profile.contains_key(&(p, i)));
            for &(e, t) in &self.disc[i] {
                let p = self.owner(e);
                if !s.contains(p) || profile.get(&(p, i)) == Some(&e) {
                    moves[i].push(t);
                }
            }
            match self.delay[i] {
                Some(j) if !acting => moves[i].push(j),
                Some(_) => {}
                None => {
                    // No delay possible: a member may only wait without enabled actions.
                    for &(e, _) in &self.disc[i] {
                        let p = self.owner(e);
                        if s.contains(p) && !profile.contains_key(&(p, i)) {
                            return Err(OracleError::InvalidProfile(format!(
                                "player {p} waits in time-locked region {i} with actions enabled"
                            )));
                        }
                    }
                }
            }
        }
        // Least fixpoint: winning once every move leads to a winning region.
        let mut win = w2.to_vec();
        loop {
            let mut changed = false;
            for i in 0..n {
                if !win[i] && w1[i] && !moves[i].is_empty() && moves[i].iter().all(|&t| t != i && win[t]) {
                    win[i] = true;
                    changed = true;
                }
            }
            if !changed {
                return Ok(win[start]);
            }
        }
    }
}

/// Integer-part vectors: each clock from 0 to `max + 1` (above).
fn int_vectors(max: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &m in max {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=m + 1).map(move |i| {
                    let mut w = v.clone();
                    w.push(i);
                    w
                })
            })
            .collect();
    }
    out
}

/// Rank vectors over `n` clocks where only `free` clocks may be nonzero and
/// the nonzero ranks used are exactly 1..=k.
fn rank_vectors(n: usize, free: &[usize]) -> Vec<Vec<u8>> {
    let m = free.len();
    let mut out = Vec::new();
    let total = (m + 1).pow(m as u32);
    for code in 0..total {
        let mut ranks = vec![0u8; n];
        let mut c = code;
        for &f in free {
            ranks[f] = (c % (m + 1)) as u8;
            c /= m + 1;
        }
        let k = ranks.iter().copied().max().unwrap_or(0);
        if (1..=k).all(|r| ranks.contains(&r)) {
            out.push(ranks);
        }
    }
    out
}

/// Result of checking a core formula on the region graph.
pub struct RegionCheck {
    pub graph: RegionGraph,
    pub sat: RegionSet,
    pub unsat: RegionSet,
    pub verdict: bool,
}

/// Check a core formula at the initial state by explicit region fixpoints.
pub fn region_model_check(model: &Tmg, f: &Formula) -> Result<RegionCheck, OracleError> {
    if has_diagonal(f) {
        return Err(OracleError::Diagonal);
    }
    let zs: Vec<(String, i64)> = f.formula_clocks().into_iter().map(|z| {
        let k = f.max_constant_for(&z);
        (z, k)
    }).collect();
    let graph = RegionGraph::build(model, &zs)?;
    let (sat, unsat) = graph.evaluate(f);
    let verdict = sat[graph.initial()];
    Ok(RegionCheck { graph, sat, unsat, verdict })
}

fn has_diagonal(f: &Formula) -> bool {
    matches!(f, Formula::Clock(c) if c.rhs.is_some()) || f.children().into_iter().any(has_diagonal)
}
