//! Finite unions of closed arcs / boxes used to represent shadow sets.
//!
//! A fragment is a product of closed intervals, one per axis of the space.
//! Intervals on a periodic axis live inside `[0, 1]`; an arc crossing zero is
//! stored as two fragments `[a, 1]` and `[0, b]`. The full circle is the
//! single fragment `[0, 1]`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::scalar::{smax, smin, Scalar};
use crate::spaces::{Axis, Point, Space};

pub const DEFAULT_FRAGMENT_CAP: usize = 4096;

/// Closed interval `[lo, hi]`, `lo <= hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval<S> {
    pub lo: S,
    pub hi: S,
}

impl<S: Scalar> Interval<S> {
    pub fn new(lo: S, hi: S) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn width(&self) -> S {
        self.hi.clone() - self.lo.clone()
    }

    pub fn midpoint(&self) -> S {
        (self.lo.clone() + self.hi.clone()) * S::half()
    }

    pub fn contains(&self, x: &S) -> bool {
        *x >= self.lo && *x <= self.hi
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = smax(&self.lo, &other.lo);
        let hi = smin(&self.hi, &other.hi);
        (lo <= hi).then(|| Interval { lo, hi })
    }

    pub fn hull(&self, other: &Self) -> Self {
        Interval {
            lo: smin(&self.lo, &other.lo),
            hi: smax(&self.hi, &other.hi),
        }
    }
}

/// Product of one closed interval per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Fragment<S> {
    pub sides: Vec<Interval<S>>,
}

impl<S: Scalar> Fragment<S> {
    pub fn measure(&self) -> S {
        self.sides.iter().fold(S::one(), |acc, s| acc * s.width())
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let sides = self
            .sides
            .iter()
            .zip(&other.sides)
            .map(|(a, b)| a.intersect(b))
            .collect::<Option<Vec<_>>>()?;
        Some(Fragment { sides })
    }

    pub fn hull(&self, other: &Self) -> Self {
        Fragment {
            sides: self.sides.iter().zip(&other.sides).map(|(a, b)| a.hull(b)).collect(),
        }
    }

    pub fn midpoint(&self) -> Vec<S> {
        self.sides.iter().map(Interval::midpoint).collect()
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.sides.iter().zip(&other.sides) {
            match a.lo.partial_cmp(&b.lo).unwrap_or(Ordering::Equal) {
                Ordering::Equal => {}
                ord => return ord,
            }
            match a.hi.partial_cmp(&b.hi).unwrap_or(Ordering::Equal) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Equal to the abstract set.
    Exact,
    /// Superset of the abstract set.
    Outer,
    /// Subset of the abstract set.
    Inner,
}

impl Variant {
    /// Variant of a set derived from sets of variants `self` and `other`.
    pub fn combine(self, other: Variant) -> Variant {
        match (self, other) {
            (Variant::Exact, v) | (v, Variant::Exact) => v,
            (a, b) if a == b => a,
            // mixing directions loses any guarantee; treat as outer
            _ => Variant::Outer,
        }
    }
}

/// Canonical finite union of fragments in a given space.
#[derive(Clone, Debug, PartialEq)]
pub struct EnclosureSet<S> {
    space: Space<S>,
    fragments: Vec<Fragment<S>>,
    variant: Variant,
}

/// Summary numbers for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetStats {
    pub fragments: usize,
    pub measure: f64,
}

impl<S: Scalar> EnclosureSet<S> {
    pub fn empty(space: &Space<S>) -> Self {
        EnclosureSet {
            space: space.clone(),
            fragments: Vec::new(),
            variant: Variant::Exact,
        }
    }

    pub fn full(space: &Space<S>) -> Self {
        let sides = space
            .axes()
            .iter()
            .map(|a| match a {
                Axis::Periodic => Interval::new(S::zero(), S::one()),
                Axis::Segment { lo, hi } => Interval::new(lo.clone(), hi.clone()),
            })
            .collect();
        EnclosureSet {
            space: space.clone(),
            fragments: vec![Fragment { sides }],
            variant: Variant::Exact,
        }
    }

    /// Closed ball `B[radius, center]`, truncated to the space.
    pub fn closed_ball(space: &Space<S>, center: &Point<S>, radius: &S) -> Self {
        let lifted: Vec<(S, S)> = space
            .axes()
            .iter()
            .zip(&center.coords)
            .map(|(a, c)| a.ball_lifted(c, radius))
            .collect();
        Self::from_lifted_boxes(space, vec![lifted], Variant::Exact)
    }

    /// Builds a canonical set from boxes given in lifted coordinates: periodic
    /// sides may extend outside `[0, 1]` and are wrapped, segment sides are
    /// clipped to the segment.
    pub fn from_lifted_boxes(space: &Space<S>, boxes: Vec<Vec<(S, S)>>, variant: Variant) -> Self {
        let mut fragments = Vec::new();
        for b in boxes {
            let per_axis: Vec<Vec<Interval<S>>> = space
                .axes()
                .iter()
                .zip(b)
                .map(|(axis, (lo, hi))| wrap_or_clip(axis, lo, hi))
                .collect();
            if per_axis.iter().any(Vec::is_empty) {
                continue;
            }
            let mut products: Vec<Vec<Interval<S>>> = vec![Vec::new()];
            for choices in per_axis {
                let mut next = Vec::new();
                for prefix in &products {
                    for c in &choices {
                        let mut p = prefix.clone();
                        p.push(c.clone());
                        next.push(p);
                    }
                }
                products = next;
            }
            fragments.extend(products.into_iter().map(|sides| Fragment { sides }));
        }
        let mut set = EnclosureSet {
            space: space.clone(),
            fragments,
            variant,
        };
        set.normalize();
        set
    }

    pub fn space(&self) -> &Space<S> {
        &self.space
    }

    pub fn fragments(&self) -> &[Fragment<S>] {
        &self.fragments
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_full(&self) -> bool {
        *self == Self::full(&self.space).with_variant(self.variant)
    }

    pub fn measure(&self) -> S {
        // fragments only overlap on boundaries (measure zero)
        self.fragments.iter().fold(S::zero(), |acc, f| acc + f.measure())
    }

    pub fn stats(&self) -> SetStats {
        SetStats {
            fragments: self.fragments.len(),
            measure: self.measure().to_f64(),
        }
    }

    pub fn contains(&self, p: &Point<S>) -> bool {
        self.fragments.iter().any(|f| {
            f.sides.iter().zip(self.space.axes()).zip(&p.coords).all(|((side, axis), x)| {
                side.contains(x) || (axis.is_periodic() && side.contains(&(x.clone() + S::one())))
            })
        })
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut fragments = Vec::new();
        for a in &self.fragments {
            for b in &other.fragments {
                if let Some(f) = a.intersect(b) {
                    fragments.push(f);
                }
            }
        }
        let mut set = EnclosureSet {
            space: self.space.clone(),
            fragments,
            variant: self.variant.combine(other.variant),
        };
        set.normalize();
        set
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut set = EnclosureSet {
            space: self.space.clone(),
            fragments: self.fragments.iter().chain(&other.fragments).cloned().collect(),
            variant: self.variant.combine(other.variant),
        };
        set.normalize();
        set
    }

    /// Canonical point of the largest fragment (its midpoint).
    pub fn representative(&self) -> Option<Point<S>> {
        let mut best: Option<&Fragment<S>> = None;
        for f in &self.fragments {
            if best.is_none_or(|b| f.measure() > b.measure()) {
                best = Some(f);
            }
        }
        best.map(|f| self.space.canonicalize(&Point { coords: f.midpoint() }))
    }

    /// Widens every side by `slack` (wrapping/clipping as needed); the
    /// result is an outer enclosure of `self`.
    pub fn inflate(&self, slack: &S) -> Self {
        if *slack == S::zero() {
            return self.clone();
        }
        let boxes = self
            .fragments
            .iter()
            .map(|f| {
                f.sides
                    .iter()
                    .map(|s| (s.lo.clone() - slack.clone(), s.hi.clone() + slack.clone()))
                    .collect()
            })
            .collect();
        Self::from_lifted_boxes(&self.space, boxes, Variant::Outer)
    }

    /// Shrinks every side by `slack`; the result is an inner enclosure.
    pub fn deflate(&self, slack: &S) -> Self {
        if *slack == S::zero() {
            return self.clone();
        }
        let fragments = self
            .fragments
            .iter()
            .filter_map(|f| {
                let sides = f
                    .sides
                    .iter()
                    .map(|s| {
                        let lo = s.lo.clone() + slack.clone();
                        let hi = s.hi.clone() - slack.clone();
                        (lo <= hi).then(|| Interval::new(lo, hi))
                    })
                    .collect::<Option<Vec<_>>>()?;
                Some(Fragment { sides })
            })
            .collect();
        let mut set = EnclosureSet {
            space: self.space.clone(),
            fragments,
            variant: Variant::Inner,
        };
        set.normalize();
        set
    }

    /// Merges fragments until at most `cap` remain, replacing the closest
    /// pair (in canonical order) by its hull. The result is an outer
    /// enclosure. Returns `true` when merging was needed.
    pub fn enforce_cap(&mut self, cap: usize) -> bool {
        let cap = cap.max(1);
        if self.fragments.len() <= cap {
            return false;
        }
        while self.fragments.len() > cap {
            let mut best = 0usize;
            let mut best_cost: Option<S> = None;
            for i in 0..self.fragments.len() - 1 {
                let hull = self.fragments[i].hull(&self.fragments[i + 1]);
                let cost = hull.measure()
                    - self.fragments[i].measure()
                    - self.fragments[i + 1].measure();
                if best_cost.as_ref().is_none_or(|c| cost < *c) {
                    best = i;
                    best_cost = Some(cost);
                }
            }
            let merged = self.fragments[best].hull(&self.fragments[best + 1]);
            self.fragments.splice(best..best + 2, [merged]);
        }
        self.variant = Variant::Outer;
        self.normalize();
        true
    }

    /// Sorts fragments, drops duplicates and merges overlapping or touching
    /// fragments that agree on all other axes.
    fn normalize(&mut self) {
        self.fragments.sort_by(|a, b| a.canonical_cmp(b));
        self.fragments.dedup();
        let dim = self.space.dim();
        loop {
            let mut merged_any = false;
            'outer: for i in 0..self.fragments.len() {
                for j in (i + 1)..self.fragments.len() {
                    if let Some(m) = try_merge(&self.fragments[i], &self.fragments[j], dim) {
                        self.fragments[i] = m;
                        self.fragments.remove(j);
                        merged_any = true;
                        break 'outer;
                    }
                }
            }
            if !merged_any {
                break;
            }
        }
        // drop fragments contained in another
        let mut keep = vec![true; self.fragments.len()];
        for i in 0..self.fragments.len() {
            for j in 0..self.fragments.len() {
                if i != j && keep[j] && contains_fragment(&self.fragments[j], &self.fragments[i]) {
                    keep[i] = false;
                    break;
                }
            }
        }
        let mut k = keep.into_iter();
        self.fragments.retain(|_| k.next().unwrap());
        self.fragments.sort_by(|a, b| a.canonical_cmp(b));
    }

    pub fn convert<T: Scalar>(&self) -> EnclosureSet<T> {
        let conv = |x: &S| T::from_rational(&crate::spaces::to_rational(x));
        EnclosureSet {
            space: self.space.convert(),
            fragments: self
                .fragments
                .iter()
                .map(|f| Fragment {
                    sides: f.sides.iter().map(|s| Interval::new(conv(&s.lo), conv(&s.hi))).collect(),
                })
                .collect(),
            variant: self.variant,
        }
    }
}

fn contains_fragment<S: Scalar>(outer: &Fragment<S>, inner: &Fragment<S>) -> bool {
    outer
        .sides
        .iter()
        .zip(&inner.sides)
        .all(|(o, i)| o.lo <= i.lo && i.hi <= o.hi)
}

/// Union of two fragments when it is itself a fragment: all sides equal but
/// one, and that one overlaps or touches.
fn try_merge<S: Scalar>(a: &Fragment<S>, b: &Fragment<S>, dim: usize) -> Option<Fragment<S>> {
    let mut differing = None;
    for k in 0..dim {
        if a.sides[k] != b.sides[k] {
            if differing.is_some() {
                return None;
            }
            differing = Some(k);
        }
    }
    let k = differing?;
    let (x, y) = (&a.sides[k], &b.sides[k]);
    if x.hi < y.lo || y.hi < x.lo {
        return None;
    }
    let mut sides = a.sides.clone();
    sides[k] = x.hull(y);
    Some(Fragment { sides })
}

/// Maps a lifted interval onto an axis: wrap periodic sides into `[0, 1]`,
/// clip segment sides.
fn wrap_or_clip<S: Scalar>(axis: &Axis<S>, lo: S, hi: S) -> Vec<Interval<S>> {
    if lo > hi {
        return Vec::new();
    }
    match axis {
        Axis::Segment { lo: a, hi: b } => {
            let l = smax(&lo, a);
            let h = smin(&hi, b);
            if l <= h {
                vec![Interval::new(l, h)]
            } else {
                Vec::new()
            }
        }
        Axis::Periodic => {
            if hi.clone() - lo.clone() >= S::one() {
                return vec![Interval::new(S::zero(), S::one())];
            }
            let shift = lo.floor();
            let l = lo - shift.clone();
            let h = hi - shift;
            if h <= S::one() {
                vec![Interval::new(l, h)]
            } else {
                vec![
                    Interval::new(S::zero(), h - S::one()),
                    Interval::new(l, S::one()),
                ]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    fn arc(space: &Space<Q>, lo: Q, hi: Q) -> EnclosureSet<Q> {
        EnclosureSet::from_lifted_boxes(space, vec![vec![(lo, hi)]], Variant::Exact)
    }

    #[test]
    fn wrapping_arc_splits_at_zero() {
        let c = Space::<Q>::circle();
        let s = arc(&c, q(-1, 10), q(1, 10));
        assert_eq!(s.len(), 2);
        assert_eq!(s.measure(), q(1, 5));
        assert!(s.contains(&Point::scalar(q(0, 1))));
        assert!(s.contains(&Point::scalar(q(95, 100))));
        assert!(!s.contains(&Point::scalar(q(1, 2))));
    }

    #[test]
    fn saturation_is_single_fragment() {
        let c = Space::<Q>::circle();
        let s = arc(&c, q(3, 10), q(14, 10));
        assert!(s.is_full());
        assert_eq!(s.len(), 1);
        let halves = arc(&c, q(0, 1), q(1, 2)).union(&arc(&c, q(1, 2), q(1, 1)));
        assert!(halves.is_full());
    }

    #[test]
    fn intersection_and_emptiness() {
        let c = Space::<Q>::circle();
        let a = arc(&c, q(1, 10), q(3, 10));
        let b = arc(&c, q(2, 10), q(5, 10));
        assert_eq!(a.intersect(&b), arc(&c, q(2, 10), q(3, 10)));
        let far = arc(&c, q(6, 10), q(7, 10));
        assert!(a.intersect(&far).is_empty());
        // closed sets: touching arcs meet in a point
        let touch = arc(&c, q(3, 10), q(4, 10));
        assert_eq!(a.intersect(&touch).measure(), q(0, 1));
        assert!(!a.intersect(&touch).is_empty());
    }

    #[test]
    fn cap_merges_to_outer() {
        let i = Space::<Q>::interval();
        let mut s = EnclosureSet::empty(&i);
        for k in 0..10 {
            s = s.union(&arc(&i, q(2 * k, 20), q(2 * k + 1, 20)));
        }
        assert_eq!(s.len(), 10);
        let before = s.clone();
        assert!(s.enforce_cap(3));
        assert_eq!(s.len(), 3);
        assert_eq!(s.variant(), Variant::Outer);
        for k in 0..10 {
            let p = Point::scalar(q(4 * k + 1, 40));
            assert!(before.contains(&p));
            assert!(s.contains(&p));
        }
    }

    #[test]
    fn inflate_and_deflate_bracket_the_set() {
        let c = Space::<Q>::circle();
        let s = arc(&c, q(1, 10), q(3, 10));
        let outer = s.inflate(&q(1, 100));
        let inner = s.deflate(&q(1, 100));
        assert_eq!(outer.measure(), q(22, 100));
        assert_eq!(inner.measure(), q(18, 100));
        assert_eq!(inner.intersect(&s), inner.clone().with_variant(Variant::Inner));
        let edge = arc(&c, q(0, 1), q(1, 10)).inflate(&q(1, 100));
        assert!(edge.contains(&Point::scalar(q(995, 1000))));
    }

    #[test]
    fn annulus_boxes() {
        let a = Space::<Q>::annulus(q(1, 2)).unwrap();
        let ball = EnclosureSet::closed_ball(&a, &Point::polar(q(145, 100), q(0, 1)), &q(1, 10));
        // radial side clipped at 1.5, angular side wraps
        assert_eq!(ball.len(), 2);
        assert_eq!(ball.measure(), q(3, 100));
        assert!(ball.contains(&Point::polar(q(15, 10), q(95, 100))));
    }
}
