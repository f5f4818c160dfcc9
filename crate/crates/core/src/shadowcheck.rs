//! Finite-horizon shadowability.
//!
//! A pseudotrajectory `y_0..y_N` is `eps`-shadowed iff every set in
//!
//! ```text
//! A_0 = B[eps, y_0],   A_{n+1} = f(A_n) ∩ B[eps, y_{n+1}]
//! ```
//!
//! is nonempty; `A_n` is exactly the set of positions `f^n(x_0)` of all
//! shadowing orbits. The checker propagates these sets (exactly for
//! rational scalars), answers `No` as soon as one empties, and otherwise
//! pulls a point of `A_N` back through the recorded sets to produce a
//! witness `x_0`, which is then re-checked orbit point by orbit point.
//!
//! Two independent oracles live here too: a closed form for rotations and
//! a brute-force grid search.

use serde::{Deserialize, Serialize};

use crate::enclosure::{EnclosureSet, SetStats, Variant, DEFAULT_FRAGMENT_CAP};
use crate::error::{Error, Result};
use crate::pseudotraj::Pseudotrajectory;
use crate::scalar::{frac, Scalar};
use crate::spaces::{Point, SpaceKind};
use crate::systems::{MapKind, MapSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowVerdict<S> {
    pub verdict: Verdict,
    /// Shadowing initial point, present iff `verdict == Yes`.
    pub witness: Option<Point<S>>,
    /// `A_N`, or the first empty set.
    pub final_set: EnclosureSet<S>,
    /// First step whose shadow set is empty.
    pub n_empty: Option<usize>,
    pub max_fragments: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckerConfig {
    pub fragment_cap: usize,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        CheckerConfig {
            fragment_cap: DEFAULT_FRAGMENT_CAP,
        }
    }
}

/// The propagated shadow sets of one pseudotrajectory.
#[derive(Clone, Debug)]
pub struct ShadowChain<S> {
    /// `A_0, ..., A_N`; sets after the first empty one are empty.
    pub sets: Vec<EnclosureSet<S>>,
    pub first_empty: Option<usize>,
    /// `true` while no cap merge or rounding slack touched the chain.
    pub exact: bool,
}

impl<S: Scalar> ShadowChain<S> {
    pub fn max_fragments(&self, upto: usize) -> usize {
        self.sets[..=upto].iter().map(EnclosureSet::len).max().unwrap_or(0)
    }
}

/// Propagates `A_0 .. A_N`. Outer enclosures in general; exact when the
/// scalar is exact and the fragment cap never triggers.
pub fn shadow_set_forward<S: Scalar>(
    system: &MapSystem<S>,
    traj: &Pseudotrajectory<S>,
    eps: &S,
    config: &CheckerConfig,
) -> Result<ShadowChain<S>> {
    if *eps <= S::zero() {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let space = system.space();
    let y0 = traj
        .points
        .first()
        .ok_or_else(|| Error::Usage("empty pseudotrajectory".into()))?;
    let slack = S::rounding_slack();
    let ball = |y: &Point<S>| {
        let b = EnclosureSet::closed_ball(space, y, eps);
        if S::EXACT {
            b
        } else {
            b.inflate(&slack)
        }
    };
    let mut exact = S::EXACT;
    let mut sets = Vec::with_capacity(traj.points.len());
    sets.push(ball(y0));
    let mut first_empty = None;
    for (n, y) in traj.points.iter().enumerate().skip(1) {
        if first_empty.is_some() {
            sets.push(EnclosureSet::empty(space));
            continue;
        }
        let image = match system.apply_set(&sets[n - 1], config.fragment_cap) {
            Ok(img) => img,
            Err(capped) => {
                exact = false;
                capped.partial
            }
        };
        let mut next = image.intersect(&ball(y));
        if next.enforce_cap(config.fragment_cap) {
            exact = false;
        }
        if next.is_empty() {
            first_empty = Some(n);
        }
        sets.push(next);
    }
    Ok(ShadowChain {
        sets,
        first_empty,
        exact,
    })
}

/// Pulls a point of `A_h` back to some `x_0 in A_0` with `f^n(x_0) in A_n`.
fn pull_back<S: Scalar>(system: &MapSystem<S>, chain: &ShadowChain<S>, horizon: usize) -> Option<Point<S>> {
    let mut x = chain.sets[horizon].representative()?;
    for n in (0..horizon).rev() {
        x = system.preimage_in(&x, &chain.sets[n])?;
    }
    Some(x)
}

/// Direct check `dist(y_n, f^n(x0)) <= eps` for `n <= horizon`.
pub fn orbit_shadows<S: Scalar>(
    system: &MapSystem<S>,
    traj: &Pseudotrajectory<S>,
    x0: &Point<S>,
    eps: &S,
    horizon: usize,
) -> bool {
    let space = system.space();
    let mut x = x0.clone();
    for (n, y) in traj.points.iter().enumerate().take(horizon + 1) {
        if n > 0 {
            x = system.apply(&x);
        }
        if space.dist_unchecked(y, &x) > *eps {
            return false;
        }
    }
    true
}

/// Verdict for the prefix `y_0..y_horizon`, reusing a propagated chain.
pub fn verdict_at<S: Scalar>(
    system: &MapSystem<S>,
    traj: &Pseudotrajectory<S>,
    eps: &S,
    chain: &ShadowChain<S>,
    horizon: usize,
) -> ShadowVerdict<S> {
    let horizon = horizon.min(chain.sets.len() - 1);
    if let Some(e) = chain.first_empty.filter(|e| *e <= horizon) {
        return ShadowVerdict {
            verdict: Verdict::No,
            witness: None,
            final_set: chain.sets[e].clone(),
            n_empty: Some(e),
            max_fragments: chain.max_fragments(e),
        };
    }
    let witness = pull_back(system, chain, horizon).filter(|x0| orbit_shadows(system, traj, x0, eps, horizon));
    let verdict = if witness.is_some() {
        Verdict::Yes
    } else {
        Verdict::Unknown
    };
    ShadowVerdict {
        verdict,
        witness,
        final_set: chain.sets[horizon].clone(),
        n_empty: None,
        max_fragments: chain.max_fragments(horizon),
    }
}

/// Decides whether `traj` can be `eps`-shadowed over its whole horizon.
///
/// `Yes` carries a witness that passed the direct orbit re-check; `No`
/// means an outer shadow set emptied. With exact scalars the decision is
/// complete unless the fragment cap forced an outer merge.
pub fn decide_shadowable<S: Scalar>(
    system: &MapSystem<S>,
    traj: &Pseudotrajectory<S>,
    eps: &S,
) -> Result<ShadowVerdict<S>> {
    decide_shadowable_with(system, traj, eps, &CheckerConfig::default())
}

pub fn decide_shadowable_with<S: Scalar>(
    system: &MapSystem<S>,
    traj: &Pseudotrajectory<S>,
    eps: &S,
    config: &CheckerConfig,
) -> Result<ShadowVerdict<S>> {
    let chain = shadow_set_forward(system, traj, eps, config)?;
    let verdict = verdict_at(system, traj, eps, &chain, traj.horizon());
    if verdict.verdict == Verdict::Unknown && chain.exact {
        return Err(Error::Invariant(
            "exact shadow chain is nonempty but no witness pulled back".into(),
        ));
    }
    Ok(verdict)
}

/// Serializable verdict record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub verdict: Verdict,
    pub witness: Option<Vec<String>>,
    pub n_empty: Option<usize>,
    pub set_stats: VerdictSetStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictSetStats {
    pub final_fragments: usize,
    pub final_measure: f64,
    pub max_fragments: usize,
    pub variant: Variant,
}

impl<S: Scalar> ShadowVerdict<S> {
    pub fn record(&self) -> VerdictRecord {
        let SetStats { fragments, measure } = self.final_set.stats();
        VerdictRecord {
            verdict: self.verdict,
            witness: self
                .witness
                .as_ref()
                .map(|w| w.coords.iter().map(|c| c.to_string()).collect()),
            n_empty: self.n_empty,
            set_stats: VerdictSetStats {
                final_fragments: fragments,
                final_measure: measure,
                max_fragments: self.max_fragments,
                variant: self.final_set.variant(),
            },
        }
    }
}

/// Closed-form rotation check: with the continuous lift `w_n` of
/// `y_n - n alpha`, the trajectory is `eps`-shadowed iff
/// `max w - min w <= 2 eps`.
///
/// Valid when `eps < 1/4` and every step deviation is below `1/2`, which
/// makes the lift unique.
pub fn rotation_oracle<S: Scalar>(system: &MapSystem<S>, traj: &Pseudotrajectory<S>, eps: &S) -> Result<bool> {
    Ok(rotation_lift_span(system, traj)? <= eps.clone() + eps.clone())
}

/// Span `max w - min w` of the lifted deviations from the rotation.
pub fn rotation_lift_span<S: Scalar>(system: &MapSystem<S>, traj: &Pseudotrajectory<S>) -> Result<S> {
    let alpha = match system.kind() {
        MapKind::Rotation { alpha } => alpha.clone(),
        _ => return Err(Error::Usage(format!("rotation oracle needs a rotation, got {system}"))),
    };
    let half = S::half();
    let (mut w, mut lo, mut hi) = (S::zero(), S::zero(), S::zero());
    for pair in traj.points.windows(2) {
        // representative of y_{n+1} - y_n - alpha in [-1/2, 1/2)
        let step = frac(&(pair[1].coords[0].clone() - pair[0].coords[0].clone() - alpha.clone() + half.clone()))
            - half.clone();
        if step.abs() >= half {
            return Err(Error::Domain("step deviation reaches 1/2; lift is ambiguous".into()));
        }
        w = w + step;
        if w < lo {
            lo = w.clone();
        }
        if w > hi {
            hi = w.clone();
        }
    }
    Ok(hi - lo)
}

/// Checks the validity region of [`rotation_oracle`] for a given `eps`.
pub fn rotation_oracle_checked<S: Scalar>(
    system: &MapSystem<S>,
    traj: &Pseudotrajectory<S>,
    eps: &S,
) -> Result<bool> {
    if *eps >= S::from_ratio(1, 4) || *eps <= S::zero() {
        return Err(Error::Domain(format!("rotation oracle needs 0 < eps < 1/4, got {eps}")));
    }
    if traj.d >= S::half() {
        return Err(Error::Domain(format!("rotation oracle needs d < 1/2, got {}", traj.d)));
    }
    rotation_oracle(system, traj, eps)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceOutcome {
    /// Some grid point stays within `eps + L^n * resolution` of `y_n`.
    pub shadowable: bool,
    /// Some grid point stays within `eps` with no slack at all.
    pub strict_hit: bool,
    /// Largest slack `L^N * resolution` applied.
    pub max_slack: f64,
}

/// Grid search over `x_0 in B[eps, y_0]` in `f64`, for 1-D spaces.
///
/// Grid points are `y_0 - eps + k * resolution` plus the right endpoint,
/// so every point of the ball is within `resolution / 2` of the grid.
pub fn brute_force_oracle<S: Scalar>(
    system: &MapSystem<S>,
    traj: &Pseudotrajectory<S>,
    eps: f64,
    resolution: f64,
) -> Result<BruteForceOutcome> {
    if resolution <= 0.0 {
        return Err(Error::Domain(format!("grid resolution must be positive, got {resolution}")));
    }
    if system.space_kind() == SpaceKind::Annulus {
        return Err(Error::Usage("brute-force oracle is for 1-D spaces".into()));
    }
    let sys: MapSystem<f64> = system.convert();
    let space = sys.space();
    let ys: Vec<f64> = traj.points.iter().map(|p| p.coords[0].to_f64()).collect();
    let lip = sys.lipschitz().to_f64();
    let slacks: Vec<f64> = (0..ys.len()).map(|n| lip.powi(n as i32) * resolution).collect();
    let count = (2.0 * eps / resolution).floor() as usize;
    let mut candidates: Vec<f64> = (0..=count).map(|k| ys[0] - eps + k as f64 * resolution).collect();
    candidates.push(ys[0] + eps);
    let mut shadowable = false;
    let mut strict_hit = false;
    for x0 in candidates {
        let mut x = space.canonicalize(&Point::scalar(x0));
        let mut within_slack = true;
        let mut strict = true;
        for (n, y) in ys.iter().enumerate() {
            if n > 0 {
                x = sys.apply(&x);
            }
            let dist = space.dist_unchecked(&Point::scalar(*y), &x);
            if dist > eps {
                strict = false;
            }
            if dist > eps + slacks[n] {
                within_slack = false;
                break;
            }
        }
        shadowable |= within_slack;
        strict_hit |= within_slack && strict;
        if strict_hit {
            break;
        }
    }
    Ok(BruteForceOutcome {
        shadowable,
        strict_hit,
        max_slack: *slacks.last().unwrap_or(&resolution),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pseudotraj::{generate_trial, worst_case_pseudotrajectory};
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    #[test]
    fn exact_orbit_is_shadowed_by_itself() {
        for sys in [
            MapSystem::<Q>::doubling(),
            MapSystem::<Q>::rotation(q(610, 987)),
            MapSystem::<Q>::tent(q(3, 2)).unwrap(),
            MapSystem::<Q>::annulus_spiral(q(1, 2), q(610, 987), q(1, 2)).unwrap(),
        ] {
            let x0 = sys.space().canonicalize(&Point {
                coords: vec![q(9, 10); sys.space().dim()],
            });
            let traj = Pseudotrajectory::exact_orbit(&sys, &x0, 30, q(1, 100));
            let v = decide_shadowable(&sys, &traj, &q(1, 20)).unwrap();
            assert_eq!(v.verdict, Verdict::Yes, "{sys}");
            assert!(orbit_shadows(&sys, &traj, v.witness.as_ref().unwrap(), &q(1, 20), 30));
        }
    }

    #[test]
    fn rotation_exact_orbit_keeps_full_balls() {
        let sys = MapSystem::<Q>::rotation(q(610, 987));
        let traj = Pseudotrajectory::exact_orbit(&sys, &Point::scalar(q(0, 1)), 25, q(1, 100));
        let chain = shadow_set_forward(&sys, &traj, &q(1, 20), &CheckerConfig::default()).unwrap();
        for (set, y) in chain.sets.iter().zip(&traj.points) {
            assert_eq!(*set, EnclosureSet::closed_ball(sys.space(), y, &q(1, 20)));
        }
    }

    #[test]
    fn worst_case_shrinks_linearly_and_empties() {
        let sys = MapSystem::<Q>::rotation(q(610, 987));
        let (d, eps) = (q(1, 50), q(1, 20));
        let w = worst_case_pseudotrajectory(&sys, &Point::scalar(q(0, 1)), &d, &eps).unwrap();
        let chain = shadow_set_forward(&sys, &w, &eps, &CheckerConfig::default()).unwrap();
        for (n, set) in chain.sets.iter().enumerate() {
            // closed form: arc length max(0, 2 eps - n d / 2)
            let expected = q(1, 10) - q(n as i64, 100);
            if expected >= q(0, 1) {
                assert_eq!(set.measure(), expected, "step {n}");
                assert!(!set.is_empty());
            } else {
                assert!(set.is_empty(), "step {n}");
            }
        }
        assert_eq!(chain.first_empty, Some(11));
        let v = decide_shadowable(&sys, &w, &eps).unwrap();
        assert_eq!(v.verdict, Verdict::No);
        assert!(!rotation_oracle(&sys, &w, &eps).unwrap());
    }

    #[test]
    fn doubling_exact_orbit_sets_match_grid_oracle() {
        let sys = MapSystem::<Q>::doubling();
        let eps = q(1, 20);
        let traj = Pseudotrajectory::exact_orbit(&sys, &Point::scalar(q(1, 7)), 1000, q(1, 100));
        let chain = shadow_set_forward(&sys, &traj, &eps, &CheckerConfig::default()).unwrap();
        assert!(chain.first_empty.is_none());
        // grid oracle at resolution 1e-6 on the first 20 steps: a grid point
        // is in A_n iff its orbit stays eps-close up to n
        let f = MapSystem::<f64>::doubling();
        let y: Vec<f64> = traj.points.iter().take(21).map(|p| p.coords[0].to_f64()).collect();
        let mut mismatches = 0;
        for k in 0..=100_000 {
            let x0 = y[0] - 0.05 + k as f64 * 1e-6;
            let mut x = Point::scalar(x0.rem_euclid(1.0));
            for (n, yn) in y.iter().enumerate() {
                if n > 0 {
                    x = f.apply(&x);
                }
                let inside = f.space().dist_unchecked(&x, &Point::scalar(*yn)) <= 0.05;
                if !inside {
                    break;
                }
                let claimed = chain.sets[n].convert::<f64>().contains(&x);
                // ignore points within float noise of the boundary
                let margin = 0.05 - f.space().dist_unchecked(&x, &Point::scalar(y[n]));
                if !claimed && margin > 1e-9 * 2f64.powi(n as i32) {
                    mismatches += 1;
                }
            }
        }
        assert_eq!(mismatches, 0);
    }

    #[test]
    fn monotone_in_horizon() {
        let sys = MapSystem::<Q>::rotation(q(610, 987));
        for trial in 0..20 {
            let t = generate_trial(&sys, &Point::scalar(q(0, 1)), &q(1, 50), 60, 7, trial).unwrap();
            let full = shadow_set_forward(&sys, &t, &q(1, 20), &CheckerConfig::default()).unwrap();
            let mut seen_no = false;
            for h in 0..=60 {
                let part = shadow_set_forward(&sys, &t.prefix(h), &q(1, 20), &CheckerConfig::default()).unwrap();
                assert_eq!(part.sets[..], full.sets[..=h]);
                let v = verdict_at(&sys, &t, &q(1, 20), &full, h).verdict;
                if seen_no {
                    assert_eq!(v, Verdict::No);
                }
                seen_no |= v == Verdict::No;
            }
        }
    }

    #[test]
    fn float_mode_is_sound() {
        let sys = MapSystem::<f64>::rotation(610.0 / 987.0);
        let exact = MapSystem::<Q>::rotation(q(610, 987));
        for trial in 0..30 {
            let tq = generate_trial(&exact, &Point::scalar(q(0, 1)), &q(1, 50), 40, 3, trial).unwrap();
            let tf = Pseudotrajectory {
                points: tq.points.iter().map(|p| p.convert()).collect(),
                d: 0.02,
                provenance: tq.provenance.clone(),
            };
            let ve = decide_shadowable(&exact, &tq, &q(1, 20)).unwrap().verdict;
            let vf = decide_shadowable(&sys, &tf, &0.05).unwrap().verdict;
            // float may be inconclusive, never contradictory
            assert!(vf == ve || vf == Verdict::Unknown, "{ve:?} vs {vf:?}");
        }
    }

    #[test]
    fn rotation_oracle_validity() {
        let sys = MapSystem::<Q>::rotation(q(610, 987));
        let t = Pseudotrajectory::exact_orbit(&sys, &Point::scalar(q(0, 1)), 5, q(1, 10));
        assert!(rotation_oracle_checked(&sys, &t, &q(1, 20)).unwrap());
        assert!(matches!(rotation_oracle_checked(&sys, &t, &q(1, 4)), Err(Error::Domain(_))));
        let dbl = MapSystem::<Q>::doubling();
        assert!(matches!(rotation_oracle(&dbl, &t, &q(1, 20)), Err(Error::Usage(_))));
    }

    #[test]
    fn brute_force_basics() {
        let sys = MapSystem::<Q>::doubling();
        let t = Pseudotrajectory::exact_orbit(&sys, &Point::scalar(q(3, 10)), 15, q(1, 50));
        let out = brute_force_oracle(&sys, &t, 0.05, 1e-4).unwrap();
        assert!(out.shadowable && out.strict_hit);
        assert!(brute_force_oracle(&sys, &t, 0.05, 0.0).is_err());
        let ann = MapSystem::<Q>::annulus_spiral(q(1, 2), q(1, 3), q(1, 2)).unwrap();
        let ta = Pseudotrajectory::exact_orbit(&ann, &Point::polar(q(1, 1), q(0, 1)), 3, q(1, 50));
        assert!(matches!(brute_force_oracle(&ann, &ta, 0.05, 1e-3), Err(Error::Usage(_))));
    }

    #[test]
    fn tiny_cap_degrades_to_outer_but_stays_sound() {
        let sys = MapSystem::<Q>::doubling();
        let t = generate_trial(&sys, &Point::scalar(q(1, 3)), &q(1, 50), 30, 1, 0).unwrap();
        let config = CheckerConfig { fragment_cap: 1 };
        let v = decide_shadowable_with(&sys, &t, &q(1, 20), &config).unwrap();
        assert_ne!(v.verdict, Verdict::No);
    }
}
