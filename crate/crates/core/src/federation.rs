//! Finite unions of zones.

use std::fmt;

use num_rational::Rational64;

use crate::dbm::{ClockFrame, Dbm, Relation};

/// A union of nonempty canonical zones of one dimension. Not necessarily
/// disjoint or minimal; compare with [`Federation::set_eq`].
#[derive(Clone, PartialEq, Eq)]
pub struct Federation {
    dim: usize,
    zones: Vec<Dbm>,
}

/// A per-zone transformation for [`Federation::lift`].
#[derive(Clone, Debug)]
pub enum Transform {
    Up,
    Down,
    Reset(Vec<usize>),
    Free(usize),
}

impl Federation {
    pub fn empty(dim: usize) -> Self {
        Federation { dim, zones: Vec::new() }
    }

    pub fn universe(dim: usize) -> Self {
        Federation::from_dbm(Dbm::universe(dim))
    }

    pub fn from_dbm(d: Dbm) -> Self {
        let dim = d.dim();
        let zones = if d.is_empty() { Vec::new() } else { vec![d] };
        Federation { dim, zones }
    }

    pub fn from_zones(dim: usize, zones: impl IntoIterator<Item = Dbm>) -> Self {
        let mut f = Federation::empty(dim);
        for z in zones {
            f.add_zone(z);
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn zones(&self) -> &[Dbm] {
        &self.zones
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    /// Insert a zone unless an existing zone covers it; drop zones it covers.
    pub fn add_zone(&mut self, z: Dbm) {
        debug_assert_eq!(z.dim(), self.dim);
        if z.is_empty() || self.zones.iter().any(|y| z.subset_eq(y)) {
            return;
        }
        self.zones.retain(|y| !y.subset_eq(&z));
        self.zones.push(z);
    }

    pub fn union(&self, o: &Federation) -> Federation {
        let mut r = self.clone();
        r.union_with(o);
        r
    }

    pub fn union_with(&mut self, o: &Federation) {
        debug_assert_eq!(self.dim, o.dim);
        for z in &o.zones {
            self.add_zone(z.clone());
        }
    }

    pub fn intersect(&self, o: &Federation) -> Federation {
        debug_assert_eq!(self.dim, o.dim);
        let mut r = Federation::empty(self.dim);
        for a in &self.zones {
            for b in &o.zones {
                let c = a.intersect(b);
                if !c.is_empty() {
                    r.zones.push(c);
                }
            }
        }
        r
    }

    pub fn intersect_dbm(&self, d: &Dbm) -> Federation {
        let mut r = Federation::empty(self.dim);
        for a in &self.zones {
            let c = a.intersect(d);
            if !c.is_empty() {
                r.zones.push(c);
            }
        }
        r
    }

    /// Set difference by per-zone constraint splitting.
    pub fn subtract(&self, o: &Federation) -> Federation {
        debug_assert_eq!(self.dim, o.dim);
        if o.is_empty() || self.is_empty() {
            return self.clone();
        }
        let mut out = Federation::empty(self.dim);
        for a in &self.zones {
            let mut pieces = vec![a.clone()];
            for b in &o.zones {
                let mut next = Vec::with_capacity(pieces.len());
                for p in &pieces {
                    next.extend(p.subtract(b));
                }
                pieces = next;
                if pieces.is_empty() {
                    break;
                }
            }
            out.zones.extend(pieces);
        }
        out
    }

    pub fn subtract_dbm(&self, d: &Dbm) -> Federation {
        let mut out = Federation::empty(self.dim);
        for a in &self.zones {
            out.zones.extend(a.subtract(d));
        }
        out
    }

    pub fn lift(&self, t: &Transform) -> Federation {
        let zones = self.zones.iter().map(|z| match t {
            Transform::Up => z.up(),
            Transform::Down => z.down(),
            Transform::Reset(xs) => z.reset_all(xs),
            Transform::Free(x) => z.free(*x),
        });
        Federation::from_zones(self.dim, zones)
    }

    pub fn up(&self) -> Federation {
        self.lift(&Transform::Up)
    }

    pub fn down(&self) -> Federation {
        self.lift(&Transform::Down)
    }

    pub fn reset(&self, xs: &[usize]) -> Federation {
        self.lift(&Transform::Reset(xs.to_vec()))
    }

    pub fn free(&self, x: usize) -> Federation {
        self.lift(&Transform::Free(x))
    }

    pub fn subset_eq(&self, o: &Federation) -> bool {
        debug_assert_eq!(self.dim, o.dim);
        if self.zones.iter().all(|a| o.zones.iter().any(|b| a.subset_eq(b))) {
            return true;
        }
        self.zones.iter().all(|a| {
            let mut pieces = vec![a.clone()];
            for b in &o.zones {
                let mut next = Vec::new();
                for p in &pieces {
                    next.extend(p.subtract(b));
                }
                pieces = next;
                if pieces.is_empty() {
                    return true;
                }
            }
            pieces.is_empty()
        })
    }

    pub fn dbm_subset_eq(d: &Dbm, o: &Federation) -> bool {
        Federation::from_dbm(d.clone()).subset_eq(o)
    }

    /// Semantic equality (both inclusions).
    pub fn set_eq(&self, o: &Federation) -> bool {
        self.subset_eq(o) && o.subset_eq(self)
    }

    pub fn relation(&self, o: &Federation) -> Relation {
        match (self.subset_eq(o), o.subset_eq(self)) {
            (true, true) => Relation::Equal,
            (true, false) => Relation::Subset,
            (false, true) => Relation::Superset,
            (false, false) => Relation::Incomparable,
        }
    }

    /// Same set: drop covered zones, then merge pairs whose hull adds nothing.
    pub fn reduce(&self) -> Federation {
        let mut zones: Vec<Dbm> = Vec::with_capacity(self.zones.len());
        for z in &self.zones {
            if zones.iter().any(|y| z.subset_eq(y)) {
                continue;
            }
            zones.retain(|y| !y.subset_eq(z));
            zones.push(z.clone());
        }
        // Replace pairs whose convex hull adds nothing; rescan until stable.
        let mut changed = true;
        while changed {
            changed = false;
            let mut i = 0;
            while i < zones.len() {
                let mut j = i + 1;
                while j < zones.len() {
                    match exact_hull(&zones[i], &zones[j]) {
                        Some(h) => {
                            zones.swap_remove(j);
                            let before = zones[..i].iter().filter(|z| !z.subset_eq(&h)).count();
                            let mut k = 0;
                            zones.retain(|z| {
                                k += 1;
                                k - 1 == i || !z.subset_eq(&h)
                            });
                            i = before;
                            zones[i] = h;
                            changed = true;
                            j = i + 1;
                        }
                        None => j += 1,
                    }
                }
                i += 1;
            }
        }
        Federation { dim: self.dim, zones }
    }

    pub fn contains(&self, v: &[Rational64]) -> bool {
        self.zones.iter().any(|z| z.contains(v))
    }

    pub fn display<'a>(&'a self, frame: &'a ClockFrame) -> FedDisplay<'a> {
        FedDisplay { fed: self, frame }
    }
}

impl fmt::Debug for Federation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.zones.iter()).finish()
    }
}

pub struct FedDisplay<'a> {
    fed: &'a Federation,
    frame: &'a ClockFrame,
}

impl fmt::Display for FedDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.fed.is_empty() {
            return write!(f, "false");
        }
        let parts: Vec<String> = self
            .fed
            .zones
            .iter()
            .map(|z| format!("({})", z.display(self.frame)))
            .collect();
        write!(f, "{}", parts.join(" || "))
    }
}

/// The hull of `a` and `b` when it equals their union.
fn exact_hull(a: &Dbm, b: &Dbm) -> Option<Dbm> {
    if !a.closures_meet(b) {
        return None;
    }
    let h = a.hull(b);
    h.difference_within(a, b).then_some(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbm::{Cmp, Comparison};

    fn iv(lo: i64, hi: i64) -> Dbm {
        Dbm::from_comparisons(
            2,
            &[Comparison::new(1, 0, Cmp::Ge, lo), Comparison::new(1, 0, Cmp::Le, hi)],
        )
    }

    #[test]
    fn interval_algebra() {
        let a = Federation::from_zones(2, [iv(0, 2), iv(4, 9)]);
        let b = Federation::from_dbm(iv(1, 5));
        let i = a.intersect(&b);
        assert!(i.set_eq(&Federation::from_zones(2, [iv(1, 2), iv(4, 5)])));
        let e = Federation::empty(2);
        assert!(a.intersect(&e).is_empty());
        assert!(e.subset_eq(&a));
        assert!(a.subtract(&a).is_empty());
        assert!(!Federation::from_dbm(iv(0, 3)).subset_eq(&Federation::from_dbm(iv(0, 2))));
    }

    #[test]
    fn reduce_drops_and_merges() {
        let f = Federation { dim: 2, zones: vec![iv(0, 2), iv(0, 5)] };
        assert_eq!(f.reduce().len(), 1);
        let g = Federation { dim: 2, zones: vec![iv(0, 2), iv(2, 5)] };
        let r = g.reduce();
        assert_eq!(r.len(), 1);
        assert!(r.set_eq(&Federation::from_dbm(iv(0, 5))));
    }

    #[test]
    fn down_of_two_points() {
        let f = Federation::from_zones(2, [iv(1, 1), iv(3, 3)]).down();
        assert!(f.set_eq(&Federation::from_dbm(iv(0, 3))));
    }
}
