//! Model dynamical systems: continuous piecewise-linear maps of the circle
//! and interval (doubling, tent, rotations, general PWL) and the
//! contracting spiral of the annulus.
//!
//! Every system supports pointwise evaluation, exact set images and exact
//! preimage search, which is what the shadow-set recursion and witness
//! reconstruction need.

use std::fmt;

use crate::enclosure::{EnclosureSet, Variant};
use crate::error::{Error, Result};
use crate::scalar::{frac, parse_rational, smax, smin, Scalar};
use crate::spaces::{to_rational, Point, Space, SpaceKind};

/// Continuous piecewise-linear map given by breakpoints `0 = b_0 < ... < b_k = 1`
/// and the values of a lift at those breakpoints.
///
/// On the circle the lift satisfies `F(1) - F(0) = degree`, an integer, and
/// the map is `F mod 1`. On the interval all values lie in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PwlMap<S> {
    periodic: bool,
    breaks: Vec<S>,
    values: Vec<S>,
}

impl<S: Scalar> PwlMap<S> {
    pub fn new(periodic: bool, breaks: Vec<S>, mut values: Vec<S>) -> Result<Self> {
        if breaks.len() < 2 || breaks.len() != values.len() {
            return Err(Error::Domain("pwl map needs >= 2 breakpoints and one value each".into()));
        }
        if breaks[0] != S::zero() || *breaks.last().unwrap() != S::one() {
            return Err(Error::Domain("pwl breakpoints must start at 0 and end at 1".into()));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("pwl breakpoints must be strictly increasing".into()));
        }
        if periodic {
            let mut degree = values.last().unwrap().clone() - values[0].clone();
            if !S::EXACT {
                // snap rounding noise such as (a + 1) - a != 1
                let nearest = (degree.clone() + S::half()).floor();
                if (degree.clone() - nearest.clone()).abs() <= S::from_ratio(1, 1_000_000_000) {
                    *values.last_mut().unwrap() = values[0].clone() + nearest.clone();
                    degree = nearest;
                }
            }
            if degree.floor() != degree {
                return Err(Error::Domain(format!(
                    "circle pwl lift must have integer degree, got {degree}"
                )));
            }
        } else if values.iter().any(|v| *v < S::zero() || *v > S::one()) {
            return Err(Error::Domain("interval pwl values must lie in [0, 1]".into()));
        }
        Ok(PwlMap {
            periodic,
            breaks,
            values,
        })
    }

    /// Builds from a starting value and `(breakpoint, slope)` pieces.
    pub fn from_slopes(periodic: bool, start: S, pieces: &[(S, S)]) -> Result<Self> {
        if pieces.is_empty() || pieces[0].0 != S::zero() {
            return Err(Error::Domain("first pwl piece must start at 0".into()));
        }
        let mut breaks: Vec<S> = pieces.iter().map(|(b, _)| b.clone()).collect();
        breaks.push(S::one());
        let mut values = vec![start];
        for (i, (_, slope)) in pieces.iter().enumerate() {
            let len = breaks[i + 1].clone() - breaks[i].clone();
            let next = values[i].clone() + slope.clone() * len;
            values.push(next);
        }
        Self::new(periodic, breaks, values)
    }

    pub fn pieces(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn slope(&self, j: usize) -> S {
        (self.values[j + 1].clone() - self.values[j].clone())
            / (self.breaks[j + 1].clone() - self.breaks[j].clone())
    }

    pub fn lipschitz(&self) -> S {
        (0..self.pieces()).fold(S::zero(), |acc, j| smax(&acc, &self.slope(j).abs()))
    }

    fn piece_of(&self, x: &S) -> usize {
        // last j with b_j <= x, capped at the final piece
        let mut j = 0;
        while j + 1 < self.pieces() && self.breaks[j + 1] <= *x {
            j += 1;
        }
        j
    }

    fn lift_on(&self, j: usize, x: &S) -> S {
        self.values[j].clone() + (x.clone() - self.breaks[j].clone()) * self.slope(j)
    }

    pub fn lift(&self, x: &S) -> S {
        self.lift_on(self.piece_of(x), x)
    }

    pub fn apply(&self, x: &S) -> S {
        let y = self.lift(x);
        if self.periodic {
            frac(&y)
        } else {
            y
        }
    }

    /// Lifted images of `[lo, hi]` (a subinterval of `[0, 1]`), one per piece.
    fn image_lifted(&self, lo: &S, hi: &S) -> Vec<(S, S)> {
        let mut out = Vec::new();
        for j in 0..self.pieces() {
            let a = smax(lo, &self.breaks[j]);
            let b = smin(hi, &self.breaks[j + 1]);
            if a > b {
                continue;
            }
            let fa = self.lift_on(j, &a);
            let fb = self.lift_on(j, &b);
            out.push((smin(&fa, &fb), smax(&fa, &fb)));
        }
        out
    }

    /// Points `x` with `F(x) = y (mod 1 on the circle)`, restricted to
    /// `[lo, hi]`, in increasing piece order. Flat pieces contribute their
    /// overlap midpoint.
    fn preimages(&self, y: &S, lo: &S, hi: &S) -> Vec<S> {
        let mut out = Vec::new();
        for j in 0..self.pieces() {
            let a = smax(lo, &self.breaks[j]);
            let b = smin(hi, &self.breaks[j + 1]);
            if a > b {
                continue;
            }
            let fa = self.lift_on(j, &a);
            let fb = self.lift_on(j, &b);
            let (min, max) = (smin(&fa, &fb), smax(&fa, &fb));
            let slope = self.slope(j);
            let targets: Vec<S> = if self.periodic {
                let first = (min.clone() - y.clone()).floor();
                let mut ts = Vec::new();
                let mut m = first;
                while y.clone() + m.clone() <= max {
                    if y.clone() + m.clone() >= min {
                        ts.push(y.clone() + m.clone());
                    }
                    m = m + S::one();
                }
                ts
            } else if *y >= min && *y <= max {
                vec![y.clone()]
            } else {
                Vec::new()
            };
            for t in targets {
                if slope == S::zero() {
                    out.push((a.clone() + b.clone()) * S::half());
                } else {
                    out.push(self.breaks[j].clone() + (t - self.values[j].clone()) / slope.clone());
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapKind<S> {
    Doubling,
    Tent { slope: S },
    Rotation { alpha: S },
    PiecewiseLinear,
    AnnulusSpiral { lambda: S, alpha: S },
}

#[derive(Clone, Debug, PartialEq)]
enum Dynamics<S> {
    Pwl(PwlMap<S>),
    Spiral { lambda: S, alpha: S },
}

/// A continuous self-map of one of the model spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSystem<S> {
    space: Space<S>,
    kind: MapKind<S>,
    dynamics: Dynamics<S>,
    lipschitz: S,
    spec: String,
}

impl<S: Scalar> MapSystem<S> {
    /// `x -> 2x mod 1` on the circle.
    pub fn doubling() -> Self {
        let pwl = PwlMap::new(true, vec![S::zero(), S::one()], vec![S::zero(), S::from_ratio(2, 1)])
            .expect("doubling lift is valid");
        MapSystem {
            space: Space::circle(),
            kind: MapKind::Doubling,
            lipschitz: S::from_ratio(2, 1),
            dynamics: Dynamics::Pwl(pwl),
            spec: "doubling".into(),
        }
    }

    /// `x -> x + alpha mod 1` on the circle.
    pub fn rotation(alpha: S) -> Self {
        let alpha = frac(&alpha);
        let pwl = PwlMap::new(
            true,
            vec![S::zero(), S::one()],
            vec![alpha.clone(), alpha.clone() + S::one()],
        )
        .expect("rotation lift is valid");
        MapSystem {
            space: Space::circle(),
            spec: format!("rotation:alpha={alpha}"),
            kind: MapKind::Rotation { alpha },
            lipschitz: S::one(),
            dynamics: Dynamics::Pwl(pwl),
        }
    }

    /// Tent map on `[0, 1]` with peak value `slope / 2`, `0 < slope <= 2`.
    pub fn tent(slope: S) -> Result<Self> {
        if slope <= S::zero() || slope > S::from_ratio(2, 1) {
            return Err(Error::Domain(format!("tent slope must lie in (0, 2], got {slope}")));
        }
        let peak = slope.clone() * S::half();
        let pwl = PwlMap::new(
            false,
            vec![S::zero(), S::half(), S::one()],
            vec![S::zero(), peak, S::zero()],
        )?;
        Ok(MapSystem {
            space: Space::interval(),
            spec: format!("tent:s={slope}"),
            lipschitz: slope.clone(),
            kind: MapKind::Tent { slope },
            dynamics: Dynamics::Pwl(pwl),
        })
    }

    pub fn piecewise_linear(pwl: PwlMap<S>) -> Self {
        let space = if pwl.periodic {
            Space::circle()
        } else {
            Space::interval()
        };
        let mut spec = String::from("pwl:");
        if pwl.periodic {
            spec.push_str("circle;");
        }
        spec.push_str(&format!("v0={};", pwl.values[0]));
        let pieces: Vec<String> = (0..pwl.pieces())
            .map(|j| format!("{}:{}", pwl.breaks[j], pwl.slope(j)))
            .collect();
        spec.push_str(&pieces.join(","));
        MapSystem {
            space,
            kind: MapKind::PiecewiseLinear,
            lipschitz: pwl.lipschitz(),
            dynamics: Dynamics::Pwl(pwl),
            spec,
        }
    }

    /// `(r, theta) -> (1 + lambda (r - 1), theta + alpha mod 1)` on the
    /// annulus of half-width `w`, `0 < lambda < 1`.
    pub fn annulus_spiral(lambda: S, alpha: S, half_width: S) -> Result<Self> {
        if lambda <= S::zero() || lambda >= S::one() {
            return Err(Error::Domain(format!("spiral contraction must lie in (0, 1), got {lambda}")));
        }
        let alpha = frac(&alpha);
        let space = Space::annulus(half_width.clone())?;
        Ok(MapSystem {
            space,
            spec: format!("annulus:lambda={lambda},alpha={alpha},w={half_width}"),
            kind: MapKind::AnnulusSpiral {
                lambda: lambda.clone(),
                alpha: alpha.clone(),
            },
            // max metric: radial factor lambda < 1, angular isometry
            lipschitz: S::one(),
            dynamics: Dynamics::Spiral { lambda, alpha },
        })
    }

    /// Parses the system grammar:
    /// `doubling`, `tent:s=<q>`, `rotation:alpha=<q>`,
    /// `annulus:lambda=<q>,alpha=<q>,w=<q>`,
    /// `pwl:[circle;][v0=<q>;]<b>:<slope>,<b>:<slope>,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
        let num = |s: &str| parse_rational(s).map(|q| S::from_rational(&q));
        let kv = |params: &str| -> Result<Vec<(String, S)>> {
            params
                .split(',')
                .filter(|p| !p.is_empty())
                .map(|p| {
                    let (k, v) = p
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("expected key=value, got `{p}`")))?;
                    Ok((k.trim().to_string(), num(v)?))
                })
                .collect()
        };
        let get = |pairs: &[(String, S)], key: &str| -> Result<S> {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::Parse(format!("`{spec}` is missing `{key}=`")))
        };
        match name {
            "doubling" if params.is_empty() => Ok(Self::doubling()),
            "rotation" => Ok(Self::rotation(get(&kv(params)?, "alpha")?)),
            "tent" => Self::tent(get(&kv(params)?, "s")?),
            "annulus" => {
                let p = kv(params)?;
                Self::annulus_spiral(get(&p, "lambda")?, get(&p, "alpha")?, get(&p, "w")?)
            }
            "pwl" => {
                let mut periodic = false;
                let mut start = S::zero();
                let mut body = "";
                for part in params.split(';') {
                    let part = part.trim();
                    if part == "circle" {
                        periodic = true;
                    } else if part == "interval" {
                        periodic = false;
                    } else if let Some(v) = part.strip_prefix("v0=") {
                        start = num(v)?;
                    } else {
                        body = part;
                    }
                }
                let pieces = body
                    .split(',')
                    .map(|p| {
                        let (b, s) = p
                            .split_once(':')
                            .ok_or_else(|| Error::Parse(format!("expected breakpoint:slope, got `{p}`")))?;
                        Ok((num(b)?, num(s)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::piecewise_linear(PwlMap::from_slopes(periodic, start, &pieces)?))
            }
            _ => Err(Error::Parse(format!("unknown system `{spec}`"))),
        }
    }

    pub fn space(&self) -> &Space<S> {
        &self.space
    }

    pub fn kind(&self) -> &MapKind<S> {
        &self.kind
    }

    pub fn lipschitz(&self) -> &S {
        &self.lipschitz
    }

    /// Canonical textual form, accepted by [`Self::parse`].
    pub fn spec(&self) -> &str {
        &self.spec
    }

    pub fn rotation_angle(&self) -> Option<&S> {
        match &self.kind {
            MapKind::Rotation { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn convert<T: Scalar>(&self) -> MapSystem<T> {
        MapSystem::parse(&self.spec).expect("canonical spec re-parses")
    }

    pub fn apply(&self, x: &Point<S>) -> Point<S> {
        match &self.dynamics {
            Dynamics::Pwl(pwl) => Point::scalar(pwl.apply(&x.coords[0])),
            Dynamics::Spiral { lambda, alpha } => Point::polar(
                S::one() + lambda.clone() * (x.coords[0].clone() - S::one()),
                frac(&(x.coords[1].clone() + alpha.clone())),
            ),
        }
    }

    /// `[x0, f(x0), ..., f^n(x0)]`.
    pub fn orbit(&self, x0: &Point<S>, n: usize) -> Vec<Point<S>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(x0.clone());
        for k in 0..n {
            let next = self.apply(&out[k]);
            out.push(next);
        }
        out
    }

    /// Image of an enclosure set. Exact for exact scalars; with rounding the
    /// image of an outer (inner) set is inflated (deflated) by the scalar's
    /// rounding slack.
    pub fn apply_set(&self, set: &EnclosureSet<S>, cap: usize) -> Result<EnclosureSet<S>, CapExceeded<S>> {
        let boxes: Vec<Vec<(S, S)>> = match &self.dynamics {
            Dynamics::Pwl(pwl) => set
                .fragments()
                .iter()
                .flat_map(|f| pwl.image_lifted(&f.sides[0].lo, &f.sides[0].hi))
                .map(|iv| vec![iv])
                .collect(),
            Dynamics::Spiral { lambda, alpha } => set
                .fragments()
                .iter()
                .map(|f| {
                    let r = &f.sides[0];
                    let t = &f.sides[1];
                    vec![
                        (
                            S::one() + lambda.clone() * (r.lo.clone() - S::one()),
                            S::one() + lambda.clone() * (r.hi.clone() - S::one()),
                        ),
                        (t.lo.clone() + alpha.clone(), t.hi.clone() + alpha.clone()),
                    ]
                })
                .collect(),
        };
        let mut image = EnclosureSet::from_lifted_boxes(&self.space, boxes, set.variant());
        if !S::EXACT {
            image = match set.variant() {
                Variant::Inner => image.deflate(&S::rounding_slack()),
                _ => image.inflate(&S::rounding_slack()),
            };
        }
        if image.enforce_cap(cap) {
            return Err(CapExceeded { partial: image, cap });
        }
        Ok(image)
    }

    /// Some `x` in `within` with `f(x) = y`, if one exists.
    pub fn preimage_in(&self, y: &Point<S>, within: &EnclosureSet<S>) -> Option<Point<S>> {
        match &self.dynamics {
            Dynamics::Pwl(pwl) => {
                for f in within.fragments() {
                    let side = &f.sides[0];
                    for x in pwl.preimages(&y.coords[0], &side.lo, &side.hi) {
                        let p = self.space.canonicalize(&Point::scalar(x));
                        if within.contains(&p) {
                            return Some(p);
                        }
                    }
                }
                None
            }
            Dynamics::Spiral { lambda, alpha } => {
                let r = S::one() + (y.coords[0].clone() - S::one()) / lambda.clone();
                let theta = frac(&(y.coords[1].clone() - alpha.clone()));
                let p = Point::polar(r, theta);
                (self.space.contains(&p) && within.contains(&p)).then_some(p)
            }
        }
    }

    pub fn space_kind(&self) -> SpaceKind {
        self.space.kind()
    }
}

/// The image needed more fragments than the cap allows; `partial` is the
/// merged outer enclosure.
#[derive(Clone, Debug)]
pub struct CapExceeded<S> {
    pub partial: EnclosureSet<S>,
    pub cap: usize,
}

impl<S: Scalar> fmt::Display for CapExceeded<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fragment cap {} exceeded; outer enclosure returned", self.cap)
    }
}

impl<S: Scalar> std::error::Error for CapExceeded<S> {}

impl<S: Scalar> fmt::Display for MapSystem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec)
    }
}

/// Exact rational of a scalar, for reports.
pub fn exact_string<S: Scalar>(x: &S) -> String {
    to_rational(x).to_string()
}
