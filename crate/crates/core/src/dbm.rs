//! Difference bound matrices over a fixed clock frame.
//!
//! Entry `(i, j)` bounds `x_i - x_j`; index 0 is the reference clock that is
//! always 0. Clock `c` of a [`ClockFrame`] lives at matrix index `c + 1`.

use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;

/// Ordered clock names: model clocks first, then formula clocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClockFrame {
    names: Arc<[String]>,
    model_clocks: usize,
}

impl ClockFrame {
    pub fn new(model: &[String], formula: &[String]) -> Self {
        let mut names: Vec<String> = model.to_vec();
        names.extend(formula.iter().cloned());
        for (i, n) in names.iter().enumerate() {
            assert!(
                !names[..i].contains(n),
                "duplicate clock `{n}` in frame"
            );
        }
        ClockFrame {
            names: names.into(),
            model_clocks: model.len(),
        }
    }

    /// Number of clocks, excluding the reference clock.
    pub fn clocks(&self) -> usize {
        self.names.len()
    }

    pub fn model_clocks(&self) -> usize {
        self.model_clocks
    }

    /// Matrix dimension (clocks + 1).
    pub fn dim(&self) -> usize {
        self.names.len() + 1
    }

    pub fn name(&self, matrix_index: usize) -> &str {
        if matrix_index == 0 {
            "0"
        } else {
            &self.names[matrix_index - 1]
        }
    }

    /// Matrix index of a named clock.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name).map(|i| i + 1)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Same model clocks, with the given formula clocks appended.
    pub fn with_formula_clocks(&self, formula: &[String]) -> Self {
        ClockFrame::new(&self.names[..self.model_clocks], formula)
    }
}

/// A packed bound `(value, strictness)`: raw = 2 * value + (non-strict ? 1 : 0).
///
/// The raw order is the bound order: (m, <) < (m, <=) < (m + 1, <).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound(i64);

impl Bound {
    pub const INF: Bound = Bound(i64::MAX);
    pub const LE_ZERO: Bound = Bound(1);
    pub const LT_ZERO: Bound = Bound(0);

    pub fn le(v: i64) -> Bound {
        Bound(2 * v + 1)
    }

    pub fn lt(v: i64) -> Bound {
        Bound(2 * v)
    }

    pub fn new(v: i64, strict: bool) -> Bound {
        if strict {
            Bound::lt(v)
        } else {
            Bound::le(v)
        }
    }

    pub fn raw(self) -> i64 {
        self.0
    }

    pub fn is_inf(self) -> bool {
        self == Bound::INF
    }

    pub fn value(self) -> i64 {
        self.0 >> 1
    }

    pub fn is_strict(self) -> bool {
        self.0 & 1 == 0
    }

    /// Saturating sum: (a, s) + (b, t) = (a + b, s or t).
    #[inline]
    pub fn add(self, o: Bound) -> Bound {
        if self.is_inf() || o.is_inf() {
            Bound::INF
        } else {
            Bound(self.0 + o.0 - ((self.0 | o.0) & 1))
        }
    }

    /// Complement of `x - y ⊲ b` is `y - x ⊲' -b` with flipped strictness.
    pub fn negate(self) -> Bound {
        debug_assert!(!self.is_inf());
        Bound(1 - self.0)
    }

    /// Does a difference `d` satisfy this bound?
    pub fn admits(self, d: Rational64) -> bool {
        if self.is_inf() {
            return true;
        }
        let v = Rational64::from_integer(self.value());
        if self.is_strict() {
            d < v
        } else {
            d <= v
        }
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            write!(f, "<inf")
        } else {
            write!(f, "{}{}", if self.is_strict() { "<" } else { "<=" }, self.value())
        }
    }
}

/// Comparison operators of clock constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "==",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
        }
    }
}

/// `lhs - rhs ⋈ k` over matrix indices; `rhs == 0` means a plain `lhs ⋈ k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Comparison {
    pub lhs: usize,
    pub rhs: usize,
    pub op: Cmp,
    pub k: i64,
}

impl Comparison {
    pub fn new(lhs: usize, rhs: usize, op: Cmp, k: i64) -> Self {
        Comparison { lhs, rhs, op, k }
    }

    pub fn is_diagonal(&self) -> bool {
        self.rhs != 0
    }

    /// Matrix entries `(i, j, bound)` whose conjunction is this comparison.
    pub fn entries(&self) -> Vec<(usize, usize, Bound)> {
        let (i, j, k) = (self.lhs, self.rhs, self.k);
        match self.op {
            Cmp::Lt => vec![(i, j, Bound::lt(k))],
            Cmp::Le => vec![(i, j, Bound::le(k))],
            Cmp::Eq => vec![(i, j, Bound::le(k)), (j, i, Bound::le(-k))],
            Cmp::Ge => vec![(j, i, Bound::le(-k))],
            Cmp::Gt => vec![(j, i, Bound::lt(-k))],
        }
    }

    /// Single comparisons whose disjunction is the negation.
    pub fn negate(&self) -> Vec<Comparison> {
        let c = |op| Comparison { op, ..*self };
        match self.op {
            Cmp::Lt => vec![c(Cmp::Ge)],
            Cmp::Le => vec![c(Cmp::Gt)],
            Cmp::Eq => vec![c(Cmp::Lt), c(Cmp::Gt)],
            Cmp::Ge => vec![c(Cmp::Lt)],
            Cmp::Gt => vec![c(Cmp::Le)],
        }
    }

    /// Evaluate on a valuation indexed by clock (matrix index - 1).
    pub fn holds(&self, v: &[Rational64]) -> bool {
        let val = |i: usize| if i == 0 { Rational64::from_integer(0) } else { v[i - 1] };
        let d = val(self.lhs) - val(self.rhs);
        let k = Rational64::from_integer(self.k);
        match self.op {
            Cmp::Lt => d < k,
            Cmp::Le => d <= k,
            Cmp::Eq => d == k,
            Cmp::Ge => d >= k,
            Cmp::Gt => d > k,
        }
    }

    pub fn display(&self, frame: &ClockFrame) -> String {
        if self.rhs == 0 {
            format!("{} {} {}", frame.name(self.lhs), self.op.symbol(), self.k)
        } else {
            format!(
                "{} - {} {} {}",
                frame.name(self.lhs),
                frame.name(self.rhs),
                self.op.symbol(),
                self.k
            )
        }
    }
}

/// Set relation between two zones or federations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Equal,
    Subset,
    Superset,
    Incomparable,
}

/// A zone. Canonical (shortest-path closed) after every public operation.
#[derive(Clone)]
pub struct Dbm {
    dim: usize,
    empty: bool,
    m: Box<[Bound]>,
}

impl PartialEq for Dbm {
    fn eq(&self, o: &Self) -> bool {
        self.dim == o.dim && self.empty == o.empty && (self.empty || self.m == o.m)
    }
}

impl Eq for Dbm {}

impl std::hash::Hash for Dbm {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.dim.hash(h);
        self.empty.hash(h);
        if !self.empty {
            self.m.hash(h);
        }
    }
}

impl Dbm {
    /// All valuations with non-negative clocks.
    pub fn universe(dim: usize) -> Dbm {
        let mut m = vec![Bound::INF; dim * dim].into_boxed_slice();
        for j in 0..dim {
            m[j] = Bound::LE_ZERO;
            m[j * dim + j] = Bound::LE_ZERO;
        }
        Dbm { dim, empty: false, m }
    }

    /// The single valuation with every clock at 0.
    pub fn zero(dim: usize) -> Dbm {
        Dbm {
            dim,
            empty: false,
            m: vec![Bound::LE_ZERO; dim * dim].into_boxed_slice(),
        }
    }

    pub fn empty(dim: usize) -> Dbm {
        Dbm {
            dim,
            empty: true,
            m: vec![Bound::LE_ZERO; dim * dim].into_boxed_slice(),
        }
    }

    /// Build from arbitrary entries (defaults: universe), then close.
    pub fn from_entries(dim: usize, entries: &[(usize, usize, Bound)]) -> Dbm {
        let mut d = Dbm::universe(dim);
        for &(i, j, b) in entries {
            let e = &mut d.m[i * dim + j];
            if b < *e {
                *e = b;
            }
        }
        d.canonicalize();
        d
    }

    pub fn from_comparisons(dim: usize, cs: &[Comparison]) -> Dbm {
        let entries: Vec<_> = cs.iter().flat_map(|c| c.entries()).collect();
        Dbm::from_entries(dim, &entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.m[i * self.dim + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, b: Bound) {
        self.m[i * self.dim + j] = b;
    }

    /// Raw matrix, row-major.
    pub fn matrix(&self) -> &[Bound] {
        &self.m
    }

    /// Floyd-Warshall closure; flags emptiness on a negative cycle.
    pub fn canonicalize(&mut self) {
        if self.empty {
            return;
        }
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let ik = self.m[i * n + k];
                if ik.is_inf() {
                    continue;
                }
                for j in 0..n {
                    let c = ik.add(self.m[k * n + j]);
                    if c < self.m[i * n + j] {
                        self.m[i * n + j] = c;
                    }
                }
            }
            if self.m[k * n + k] < Bound::LE_ZERO {
                self.empty = true;
                return;
            }
        }
        for i in 0..n {
            if self.m[i * n + i] < Bound::LE_ZERO {
                self.empty = true;
                return;
            }
        }
    }

    /// Tighten `x_i - x_j` to `b`, keeping the matrix closed. Returns false if
    /// the zone became empty.
    pub fn constrain(&mut self, i: usize, j: usize, b: Bound) -> bool {
        if self.empty {
            return false;
        }
        let n = self.dim;
        if b >= self.get(i, j) {
            return true;
        }
        if b.add(self.get(j, i)) < Bound::LE_ZERO {
            self.empty = true;
            return false;
        }
        self.set(i, j, b);
        // Paths through the new edge i -> j: first extend row i, then every row via i.
        for l in 0..n {
            let c = b.add(self.m[j * n + l]);
            if c < self.m[i * n + l] {
                self.m[i * n + l] = c;
            }
        }
        for k in 0..n {
            let ki = self.m[k * n + i];
            if ki.is_inf() || k == i {
                continue;
            }
            for l in 0..n {
                let c = ki.add(self.m[i * n + l]);
                if c < self.m[k * n + l] {
                    self.m[k * n + l] = c;
                }
            }
        }
        true
    }

    pub fn constrain_cmp(&mut self, c: &Comparison) -> bool {
        for (i, j, b) in c.entries() {
            if !self.constrain(i, j, b) {
                return false;
            }
        }
        true
    }

    pub fn intersect(&self, o: &Dbm) -> Dbm {
        debug_assert_eq!(self.dim, o.dim);
        if self.empty || o.empty {
            return Dbm::empty(self.dim);
        }
        let mut r = self.clone();
        let n = self.dim;
        let mut changed = 0;
        for idx in 0..n * n {
            if o.m[idx] < r.m[idx] {
                r.m[idx] = o.m[idx];
                changed += 1;
            }
        }
        if changed > 0 {
            r.canonicalize();
        }
        r
    }

    pub fn intersects(&self, o: &Dbm) -> bool {
        if self.empty || o.empty {
            return false;
        }
        let n = self.dim;
        // A cheap necessary check before the full closure.
        for i in 0..n {
            for j in 0..n {
                if self.get(i, j).add(o.get(j, i)) < Bound::LE_ZERO {
                    return false;
                }
            }
        }
        !self.intersect(o).is_empty()
    }

    pub fn up(&self) -> Dbm {
        let mut r = self.clone();
        if !r.empty {
            for i in 1..r.dim {
                r.set(i, 0, Bound::INF);
            }
        }
        r
    }

    pub fn down(&self) -> Dbm {
        let mut r = self.clone();
        if r.empty {
            return r;
        }
        let n = r.dim;
        for j in 1..n {
            let mut b = Bound::LE_ZERO;
            for i in 1..n {
                let e = r.get(i, j);
                if e < b {
                    b = e;
                }
            }
            r.set(0, j, b);
        }
        r
    }

    /// Reset clock `x` (matrix index) to 0.
    pub fn reset(&self, x: usize) -> Dbm {
        let mut r = self.clone();
        if r.empty {
            return r;
        }
        let n = r.dim;
        for j in 0..n {
            let a = r.get(0, j);
            r.set(x, j, a);
            let b = r.get(j, 0);
            r.set(j, x, b);
        }
        r.set(x, x, Bound::LE_ZERO);
        r
    }

    pub fn reset_all(&self, xs: &[usize]) -> Dbm {
        let mut r = self.clone();
        for &x in xs {
            r = r.reset(x);
        }
        r
    }

    /// Remove every constraint on clock `x` (it ranges over [0, inf)).
    pub fn free(&self, x: usize) -> Dbm {
        let mut r = self.clone();
        if r.empty {
            return r;
        }
        let n = r.dim;
        for i in 0..n {
            if i != x {
                r.set(x, i, Bound::INF);
                let b = r.get(i, 0);
                r.set(i, x, b);
            }
        }
        r
    }

    /// Entry-wise inclusion; exact for canonical matrices.
    pub fn subset_eq(&self, o: &Dbm) -> bool {
        if self.empty {
            return true;
        }
        if o.empty {
            return false;
        }
        self.m.iter().zip(o.m.iter()).all(|(a, b)| a <= b)
    }

    pub fn relation(&self, o: &Dbm) -> Relation {
        match (self.subset_eq(o), o.subset_eq(self)) {
            (true, true) => Relation::Equal,
            (true, false) => Relation::Subset,
            (false, true) => Relation::Superset,
            (false, false) => Relation::Incomparable,
        }
    }

    /// Membership of a valuation indexed by clock (matrix index - 1).
    pub fn contains(&self, v: &[Rational64]) -> bool {
        if self.empty {
            return false;
        }
        debug_assert_eq!(v.len() + 1, self.dim);
        let val = |i: usize| if i == 0 { Rational64::from_integer(0) } else { v[i - 1] };
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                if i != j && !self.get(i, j).admits(val(i) - val(j)) {
                    return false;
                }
            }
        }
        true
    }

    /// Classical max-constant extrapolation with `max[0] = 0`.
    pub fn extrapolate(&self, max: &[i64]) -> Dbm {
        debug_assert_eq!(max.len(), self.dim);
        let mut r = self.clone();
        if r.empty {
            return r;
        }
        let n = r.dim;
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let e = r.get(i, j);
                if e.is_inf() {
                    continue;
                }
                if e > Bound::le(max[i]) {
                    r.set(i, j, Bound::INF);
                    changed = true;
                } else if e < Bound::lt(-max[j]) {
                    r.set(i, j, Bound::lt(-max[j]));
                    changed = true;
                }
            }
        }
        if changed {
            r.canonicalize();
        }
        r
    }

    /// Smallest zone containing both.
    pub fn hull(&self, o: &Dbm) -> Dbm {
        if self.empty {
            return o.clone();
        }
        if o.empty {
            return self.clone();
        }
        let mut r = self.clone();
        for idx in 0..r.m.len() {
            if o.m[idx] > r.m[idx] {
                r.m[idx] = o.m[idx];
            }
        }
        r
    }

    /// `self ∖ o` as a list of pairwise disjoint nonempty zones.
    pub fn subtract(&self, o: &Dbm) -> Vec<Dbm> {
        if self.empty {
            return Vec::new();
        }
        if o.empty || !self.intersects(o) {
            return vec![self.clone()];
        }
        let n = self.dim;
        let mut out = Vec::new();
        let mut rest = self.clone();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let b = o.get(i, j);
                if b.is_inf() || rest.get(i, j) <= b {
                    continue;
                }
                let mut piece = rest.clone();
                if piece.constrain(j, i, b.negate()) {
                    out.push(piece);
                }
                if !rest.constrain(i, j, b) {
                    return out;
                }
            }
        }
        out
    }

    /// `self ∖ o ⊆ within`, without materializing the difference.
    pub fn difference_within(&self, o: &Dbm, within: &Dbm) -> bool {
        if self.empty || self.subset_eq(o) {
            return true;
        }
        if o.empty || !self.intersects(o) {
            return self.subset_eq(within);
        }
        let n = self.dim;
        let mut rest = self.clone();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let b = o.get(i, j);
                if b.is_inf() || rest.get(i, j) <= b {
                    continue;
                }
                let mut piece = rest.clone();
                if piece.constrain(j, i, b.negate()) && !piece.subset_eq(within) {
                    return false;
                }
                if !rest.constrain(i, j, b) {
                    return true;
                }
            }
        }
        true
    }

    /// Do the topological closures meet? Necessary for two zones to be
    /// overlapping or adjacent.
    pub fn closures_meet(&self, o: &Dbm) -> bool {
        if self.empty || o.empty {
            return false;
        }
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (self.get(i, j), o.get(j, i));
                if !a.is_inf() && !b.is_inf() && a.value() + b.value() < 0 {
                    return false;
                }
            }
        }
        true
    }

    /// Non-redundant-ish constraints for printing: clock bounds plus diagonals
    /// that are tighter than what the bounds imply.
    pub fn comparisons(&self) -> Vec<Comparison> {
        let mut out = Vec::new();
        if self.empty {
            return out;
        }
        let n = self.dim;
        for i in 1..n {
            let lo = self.get(0, i);
            let hi = self.get(i, 0);
            if !hi.is_inf() && lo == Bound::le(-hi.value()) && !hi.is_strict() {
                out.push(Comparison::new(i, 0, Cmp::Eq, hi.value()));
                continue;
            }
            if lo != Bound::LE_ZERO {
                let op = if lo.is_strict() { Cmp::Gt } else { Cmp::Ge };
                out.push(Comparison::new(i, 0, op, -lo.value()));
            }
            if !hi.is_inf() {
                let op = if hi.is_strict() { Cmp::Lt } else { Cmp::Le };
                out.push(Comparison::new(i, 0, op, hi.value()));
            }
        }
        for i in 1..n {
            for j in 1..n {
                if i == j {
                    continue;
                }
                let b = self.get(i, j);
                if b.is_inf() || b >= self.get(i, 0).add(self.get(0, j)) {
                    continue;
                }
                let op = if b.is_strict() { Cmp::Lt } else { Cmp::Le };
                out.push(Comparison::new(i, j, op, b.value()));
            }
        }
        out
    }

    pub fn display<'a>(&'a self, frame: &'a ClockFrame) -> DbmDisplay<'a> {
        DbmDisplay { dbm: self, frame }
    }
}

impl fmt::Debug for Dbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            return write!(f, "Dbm(empty)");
        }
        write!(f, "Dbm[")?;
        for i in 0..self.dim {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.dim {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:?}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

pub struct DbmDisplay<'a> {
    dbm: &'a Dbm,
    frame: &'a ClockFrame,
}

impl fmt::Display for DbmDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dbm.is_empty() {
            return write!(f, "false");
        }
        let cs = self.dbm.comparisons();
        if cs.is_empty() {
            return write!(f, "true");
        }
        let parts: Vec<String> = cs
            .iter()
            .map(|c| c.display(self.frame).replace(' ', ""))
            .collect();
        write!(f, "{}", parts.join(" && "))
    }
}
