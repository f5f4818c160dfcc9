//! Compact metric measure spaces: the circle, the unit interval and the
//! annulus `[1-w, 1+w] x S^1`.
//!
//! All three carry Lebesgue (Haar) measure, so ball measures have closed
//! forms. Balls that reach a non-periodic boundary are truncated to the
//! space. The annulus uses the max metric, which makes its balls
//! axis-aligned boxes.

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{frac, parse_rational, smax, smin, Scalar};

/// A point of one of the model spaces. Circle and interval points carry one
/// coordinate, annulus points carry `(r, theta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point<S> {
    pub coords: Vec<S>,
}

impl<S: Scalar> Point<S> {
    pub fn scalar(x: S) -> Self {
        Point { coords: vec![x] }
    }

    pub fn polar(r: S, theta: S) -> Self {
        Point {
            coords: vec![r, theta],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(Scalar::to_f64).collect()
    }

    pub fn convert<T: Scalar>(&self) -> Point<T> {
        Point {
            coords: self
                .coords
                .iter()
                .map(|c| T::from_rational(&to_rational(c)))
                .collect(),
        }
    }
}

impl<S: Scalar> fmt::Display for Point<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        if parts.len() == 1 {
            write!(f, "{}", parts[0])
        } else {
            write!(f, "({})", parts.join(", "))
        }
    }
}

/// Round-trips a scalar through its display form. Exact for rationals; for
/// `f64` the shortest round-trip decimal is parsed exactly.
pub(crate) fn to_rational<S: Scalar>(x: &S) -> num_rational::BigRational {
    parse_rational(&x.to_string()).expect("scalar display is a valid literal")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Circle,
    Interval,
    Annulus,
}

/// One axis of a space: either periodic `[0, 1)` or a closed segment.
#[derive(Clone, Debug, PartialEq)]
pub enum Axis<S> {
    Periodic,
    Segment { lo: S, hi: S },
}

impl<S: Scalar> Axis<S> {
    pub fn is_periodic(&self) -> bool {
        matches!(self, Axis::Periodic)
    }

    /// Distance along this axis.
    pub fn dist(&self, a: &S, b: &S) -> S {
        let diff = (a.clone() - b.clone()).abs();
        match self {
            Axis::Periodic => {
                let wrapped = frac(&diff);
                smin(&wrapped, &(S::one() - wrapped.clone()))
            }
            Axis::Segment { .. } => diff,
        }
    }

    pub fn length(&self) -> S {
        match self {
            Axis::Periodic => S::one(),
            Axis::Segment { lo, hi } => hi.clone() - lo.clone(),
        }
    }

    pub fn canonicalize(&self, x: &S) -> S {
        match self {
            Axis::Periodic => frac(x),
            Axis::Segment { lo, hi } => smin(&smax(x, lo), hi),
        }
    }

    pub fn contains(&self, x: &S) -> bool {
        match self {
            Axis::Periodic => *x >= S::zero() && *x < S::one(),
            Axis::Segment { lo, hi } => x >= lo && x <= hi,
        }
    }

    /// Measure of the one-dimensional ball `B(radius, center)` on this axis.
    pub fn ball_length(&self, center: &S, radius: &S) -> S {
        match self {
            Axis::Periodic => smin(&(radius.clone() + radius.clone()), &S::one()),
            Axis::Segment { lo, hi } => {
                let a = smax(&(center.clone() - radius.clone()), lo);
                let b = smin(&(center.clone() + radius.clone()), hi);
                smax(&(b - a), &S::zero())
            }
        }
    }

    /// The ball as a lifted interval `[a, b]`. Periodic balls are not reduced
    /// mod 1; segment balls are truncated to the segment.
    pub fn ball_lifted(&self, center: &S, radius: &S) -> (S, S) {
        match self {
            Axis::Periodic => (
                center.clone() - radius.clone(),
                center.clone() + radius.clone(),
            ),
            Axis::Segment { lo, hi } => (
                smax(&(center.clone() - radius.clone()), lo),
                smin(&(center.clone() + radius.clone()), hi),
            ),
        }
    }

    /// Grid of `m >= 1` centers with spacing at most `spacing`.
    /// Number of grid points at spacing at most `spacing`.
    fn grid_len(&self, spacing: &S) -> usize {
        let len = self.length();
        let ratio = (len.clone() / spacing.clone()).to_f64();
        let mut m = ratio.ceil().max(1.0) as usize;
        // f64 rounding may undercount by one; correct it exactly.
        while S::from_usize(m) * spacing.clone() < len {
            m += 1;
        }
        m
    }

    fn grid(&self, spacing: &S) -> Vec<S> {
        let m = self.grid_len(spacing);
        let step = self.length() / S::from_usize(m);
        match self {
            Axis::Periodic => (0..m).map(|i| S::from_usize(i) * step.clone()).collect(),
            Axis::Segment { lo, .. } => (0..m)
                .map(|i| lo.clone() + (S::from_usize(i) + S::half()) * step.clone())
                .collect(),
        }
    }
}

/// A compact metric measure space.
#[derive(Clone, Debug, PartialEq)]
pub struct Space<S> {
    kind: SpaceKind,
    half_width: Option<S>,
    axes: Vec<Axis<S>>,
}

impl<S: Scalar> Space<S> {
    pub fn circle() -> Self {
        Space {
            kind: SpaceKind::Circle,
            half_width: None,
            axes: vec![Axis::Periodic],
        }
    }

    pub fn interval() -> Self {
        Space {
            kind: SpaceKind::Interval,
            half_width: None,
            axes: vec![Axis::Segment {
                lo: S::zero(),
                hi: S::one(),
            }],
        }
    }

    /// Annulus `{(r, theta) : |r - 1| <= w}` with `0 < w < 1`.
    pub fn annulus(half_width: S) -> Result<Self> {
        if half_width <= S::zero() || half_width >= S::one() {
            return Err(Error::Domain(format!(
                "annulus half-width must lie in (0, 1), got {half_width}"
            )));
        }
        Ok(Space {
            kind: SpaceKind::Annulus,
            axes: vec![
                Axis::Segment {
                    lo: S::one() - half_width.clone(),
                    hi: S::one() + half_width.clone(),
                },
                Axis::Periodic,
            ],
            half_width: Some(half_width),
        })
    }

    /// Parses `circle`, `interval` or `annulus:w=<number>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "circle" => Ok(Self::circle()),
            "interval" => Ok(Self::interval()),
            _ => {
                let params = spec
                    .strip_prefix("annulus:")
                    .ok_or_else(|| Error::Parse(format!("unknown space `{spec}`")))?;
                let w = params
                    .strip_prefix("w=")
                    .ok_or_else(|| Error::Parse(format!("annulus needs `w=`, got `{params}`")))?;
                Self::annulus(S::from_rational(&parse_rational(w)?))
            }
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn half_width(&self) -> Option<&S> {
        self.half_width.as_ref()
    }

    pub fn axes(&self) -> &[Axis<S>] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn spec_string(&self) -> String {
        match self.kind {
            SpaceKind::Circle => "circle".into(),
            SpaceKind::Interval => "interval".into(),
            SpaceKind::Annulus => format!("annulus:w={}", self.half_width.as_ref().unwrap()),
        }
    }

    pub fn convert<T: Scalar>(&self) -> Space<T> {
        match self.kind {
            SpaceKind::Circle => Space::circle(),
            SpaceKind::Interval => Space::interval(),
            SpaceKind::Annulus => {
                let w = T::from_rational(&to_rational(self.half_width.as_ref().unwrap()));
                Space::annulus(w).expect("half-width already validated")
            }
        }
    }

    fn check(&self, p: &Point<S>) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(Error::Usage(format!(
                "point {p} has {} coordinates, {:?} space needs {}",
                p.dim(),
                self.kind,
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn canonicalize(&self, p: &Point<S>) -> Point<S> {
        Point {
            coords: self
                .axes
                .iter()
                .zip(&p.coords)
                .map(|(axis, c)| axis.canonicalize(c))
                .collect(),
        }
    }

    /// Builds a canonical point, rejecting coordinates outside the domain of
    /// a non-periodic axis.
    pub fn point(&self, coords: Vec<S>) -> Result<Point<S>> {
        let p = Point { coords };
        self.check(&p)?;
        for (axis, c) in self.axes.iter().zip(&p.coords) {
            if let Axis::Segment { lo, hi } = axis {
                if c < lo || c > hi {
                    return Err(Error::Domain(format!("coordinate {c} outside [{lo}, {hi}]")));
                }
            }
        }
        Ok(self.canonicalize(&p))
    }

    /// Parses a point literal: one number, or `r,theta` for the annulus.
    pub fn parse_point(&self, text: &str) -> Result<Point<S>> {
        let coords = text
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split(',')
            .map(|c| parse_rational(c).map(|q| S::from_rational(&q)))
            .collect::<Result<Vec<_>>>()?;
        self.point(coords)
    }

    pub fn contains(&self, p: &Point<S>) -> bool {
        p.dim() == self.dim() && self.axes.iter().zip(&p.coords).all(|(a, c)| a.contains(c))
    }

    /// The metric: circle distance, absolute difference, or for the annulus
    /// the max of radial and angular distances.
    pub fn dist(&self, a: &Point<S>, b: &Point<S>) -> Result<S> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.dist_unchecked(a, b))
    }

    pub(crate) fn dist_unchecked(&self, a: &Point<S>, b: &Point<S>) -> S {
        self.axes
            .iter()
            .zip(a.coords.iter().zip(&b.coords))
            .map(|(axis, (x, y))| axis.dist(x, y))
            .fold(S::zero(), |acc, d| smax(&acc, &d))
    }

    pub fn diameter(&self) -> S {
        self.axes
            .iter()
            .map(|a| match a {
                Axis::Periodic => S::half(),
                Axis::Segment { lo, hi } => hi.clone() - lo.clone(),
            })
            .fold(S::zero(), |acc, d| smax(&acc, &d))
    }

    pub fn total_measure(&self) -> S {
        self.axes.iter().map(Axis::length).fold(S::one(), |acc, l| acc * l)
    }

    /// `mu(B(radius, center))`, with truncation at non-periodic boundaries.
    pub fn ball_measure(&self, center: &Point<S>, radius: &S) -> Result<S> {
        self.check(center)?;
        if *radius <= S::zero() {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        Ok(self
            .axes
            .iter()
            .zip(&center.coords)
            .map(|(axis, c)| axis.ball_length(c, radius))
            .fold(S::one(), |acc, l| acc * l))
    }

    /// Closed-form `inf_x mu(B(radius, x))`.
    pub fn min_ball_measure(&self, radius: &S) -> S {
        self.axes
            .iter()
            .map(|axis| match axis {
                Axis::Periodic => smin(&(radius.clone() + radius.clone()), &S::one()),
                Axis::Segment { lo, hi } => {
                    // worst center sits on the boundary
                    let len = hi.clone() - lo.clone();
                    smin(radius, &len)
                }
            })
            .fold(S::one(), |acc, l| acc * l)
    }

    /// Closed-form `sup_x mu(B(radius, x))`.
    pub fn max_ball_measure(&self, radius: &S) -> S {
        self.axes
            .iter()
            .map(|axis| match axis {
                Axis::Periodic => smin(&(radius.clone() + radius.clone()), &S::one()),
                Axis::Segment { lo, hi } => {
                    smin(&(radius.clone() + radius.clone()), &(hi.clone() - lo.clone()))
                }
            })
            .fold(S::one(), |acc, l| acc * l)
    }

    /// Lipschitz constant of `x -> mu(B(radius, x))` with respect to the metric.
    pub fn ball_measure_center_lipschitz(&self, radius: &S) -> S {
        let lengths: Vec<S> = self
            .axes
            .iter()
            .map(|a| match a {
                Axis::Periodic => smin(&(radius.clone() + radius.clone()), &S::one()),
                Axis::Segment { lo, hi } => {
                    smin(&(radius.clone() + radius.clone()), &(hi.clone() - lo.clone()))
                }
            })
            .collect();
        // each truncated segment length min(c+r, hi) - max(c-r, lo) moves at rate <= 1
        let mut total = S::zero();
        for (i, axis) in self.axes.iter().enumerate() {
            if let Axis::Segment { .. } = axis {
                let others = lengths
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .fold(S::one(), |acc, (_, l)| acc * l.clone());
                total = total + others;
            }
        }
        total
    }

    /// Draws a point uniformly (w.r.t. `mu`) from `B(radius, center)`,
    /// coordinate by coordinate by inverse CDF. Variates are dyadic with 53
    /// random bits, so exact and float modes see identical samples.
    pub fn sample_uniform_ball<R: RngCore + ?Sized>(
        &self,
        center: &Point<S>,
        radius: &S,
        rng: &mut R,
    ) -> Result<Point<S>> {
        self.check(center)?;
        if *radius <= S::zero() {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        let coords = self
            .axes
            .iter()
            .zip(&center.coords)
            .map(|(axis, c)| {
                let u = uniform_unit::<S, R>(rng);
                match axis {
                    Axis::Periodic if *radius >= S::half() => u,
                    _ => {
                        let (a, b) = axis.ball_lifted(c, radius);
                        axis.canonicalize(&(a.clone() + (b - a) * u))
                    }
                }
            })
            .collect();
        Ok(Point { coords })
    }

    /// Centers of a finite cover of the space by open balls of radius `delta1`.
    ///
    /// Each axis gets a uniform grid with spacing at most `delta1`, so every
    /// point lies within `delta1 / 2` of a center.
    pub fn epsilon_net(&self, delta1: &S) -> Result<Vec<Point<S>>> {
        if *delta1 <= S::zero() {
            return Err(Error::Domain(format!("net radius must be positive, got {delta1}")));
        }
        let grids: Vec<Vec<S>> = self.axes.iter().map(|a| a.grid(delta1)).collect();
        let mut points = vec![Vec::new()];
        for grid in &grids {
            let mut next = Vec::with_capacity(points.len() * grid.len());
            for prefix in &points {
                for g in grid {
                    let mut p: Vec<S> = prefix.clone();
                    p.push(g.clone());
                    next.push(p);
                }
            }
            points = next;
        }
        Ok(points.into_iter().map(|coords| Point { coords }).collect())
    }

    /// Cover radius actually achieved by [`Self::epsilon_net`] at `delta1`.
    pub fn net_cover_radius(&self, delta1: &S) -> S {
        self.axes
            .iter()
            .map(|a| {
                a.length() / S::from_usize(2 * a.grid_len(delta1))
            })
            .fold(S::zero(), |acc, r| smax(&acc, &r))
    }

    /// Index of the net cell (nearest grid center, ties to the lower index)
    /// containing `p`, for the net built by [`Self::epsilon_net`].
    pub fn net_cell(&self, p: &Point<S>, delta1: &S) -> usize {
        let mut index = 0usize;
        for (axis, c) in self.axes.iter().zip(&p.coords) {
            let m = axis.grid_len(delta1);
            let step = axis.length() / S::from_usize(m);
            let i = match axis {
                Axis::Periodic => {
                    // nearest of i * step, wrapping; ties toward lower index
                    let t = c.clone() / step.clone();
                    let base = t.floor();
                    let rem = t - base.clone();
                    let mut i = base.to_f64() as usize;
                    if rem > S::half() {
                        i += 1;
                    }
                    i % m
                }
                Axis::Segment { lo, .. } => {
                    let t = (c.clone() - lo.clone()) / step.clone();
                    let mut i = t.floor().to_f64() as usize;
                    // exact multiples of step are boundaries between two cells
                    if i > 0 && t == S::from_usize(i) {
                        i -= 1;
                    }
                    i.min(m - 1)
                }
            };
            index = index * m + i;
        }
        index
    }
}

pub(crate) fn uniform_unit<S: Scalar, R: RngCore + ?Sized>(rng: &mut R) -> S {
    S::from_dyadic(rng.next_u64() >> 11, 53)
}
