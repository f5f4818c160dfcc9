//! Pseudotrajectories: random generation through the uniform-in-ball Markov
//! kernel, validation of the step bound, orbit splicing and the explicit
//! non-shadowable drift sequence for rotations.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{frac, Scalar};
use crate::spaces::Point;
use crate::systems::{MapKind, MapSystem};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Random { seed: u64, trial: u64 },
    Spliced { n1: usize, n2: usize },
    WorstCase,
    ExactOrbit,
}

/// A finite `d`-pseudotrajectory `y_0, ..., y_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pseudotrajectory<S> {
    pub points: Vec<Point<S>>,
    pub d: S,
    pub provenance: Provenance,
}

impl<S: Scalar> Pseudotrajectory<S> {
    /// Horizon `N` (number of steps).
    pub fn horizon(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    /// The first `n + 1` points, keeping bound and provenance.
    pub fn prefix(&self, n: usize) -> Self {
        Pseudotrajectory {
            points: self.points[..=n.min(self.horizon())].to_vec(),
            d: self.d.clone(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn exact_orbit(system: &MapSystem<S>, x0: &Point<S>, n: usize, d: S) -> Self {
        Pseudotrajectory {
            points: system.orbit(x0, n),
            d,
            provenance: Provenance::ExactOrbit,
        }
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under master seed `master`: SplitMix64 applied to
/// `master + (trial + 1) * 0x9e3779b97f4a7c15`. Trials are independent
/// streams with no sequential dependence.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    mix64(master.wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

pub fn trial_rng(master: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, trial))
}

/// Samples `y_{n+1} ~ Uniform(B(d, f(y_n)))` for `n < N`.
///
/// Each step consumes exactly one 64-bit draw per coordinate, so the first
/// `m + 1` points depend only on the stream, never on `N`.
pub fn generate<S: Scalar, R: RngCore + ?Sized>(
    system: &MapSystem<S>,
    y0: &Point<S>,
    d: &S,
    n: usize,
    rng: &mut R,
) -> Result<Pseudotrajectory<S>> {
    if *d <= S::zero() {
        return Err(Error::Domain(format!("step bound must be positive, got {d}")));
    }
    let space = system.space();
    let mut points = Vec::with_capacity(n + 1);
    points.push(space.point(y0.coords.clone())?);
    for k in 0..n {
        let image = system.apply(&points[k]);
        points.push(space.sample_uniform_ball(&image, d, rng)?);
    }
    Ok(Pseudotrajectory {
        points,
        d: d.clone(),
        provenance: Provenance::Random { seed: 0, trial: 0 },
    })
}

/// [`generate`] on the reproducible stream of `(master, trial)`.
pub fn generate_trial<S: Scalar>(
    system: &MapSystem<S>,
    y0: &Point<S>,
    d: &S,
    n: usize,
    master: u64,
    trial: u64,
) -> Result<Pseudotrajectory<S>> {
    let mut rng = trial_rng(master, trial);
    let mut traj = generate(system, y0, d, n, &mut rng)?;
    traj.provenance = Provenance::Random { seed: master, trial };
    Ok(traj)
}

/// `true` iff `dist(y_{n+1}, f(y_n)) <= d` for every step and every point
/// lies in the space.
pub fn validate<S: Scalar>(system: &MapSystem<S>, points: &[Point<S>], d: &S) -> bool {
    let space = system.space();
    if !points.iter().all(|p| space.contains(p)) {
        return false;
    }
    points
        .windows(2)
        .all(|w| space.dist_unchecked(&w[1], &system.apply(&w[0])) <= *d)
}

/// Largest step deviation `max_n dist(y_{n+1}, f(y_n))`.
pub fn max_deviation<S: Scalar>(system: &MapSystem<S>, points: &[Point<S>]) -> S {
    let space = system.space();
    points.windows(2).fold(S::zero(), |acc, w| {
        let dev = space.dist_unchecked(&w[1], &system.apply(&w[0]));
        if dev > acc {
            dev
        } else {
            acc
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpliceIndices {
    pub n1: usize,
    pub n2: usize,
}

/// Joins a transit segment of the orbit of `r` to `tail`.
///
/// `n1` is the first index with `dist(z0, f^n1(r)) < 2 delta1`, `n2 >= n1`
/// the first index with `dist(tail_0, f^n2(r)) < 2 delta1`. The result is
/// `f^n1(r), ..., f^(n2-1)(r), tail_0, ..., tail_N`, a pseudotrajectory with
/// step bound `2 * tail.d`. It is validated before being returned.
pub fn splice<S: Scalar>(
    system: &MapSystem<S>,
    r: &Point<S>,
    z0: &Point<S>,
    tail: &Pseudotrajectory<S>,
    delta1: &S,
    horizon: usize,
) -> Result<(Pseudotrajectory<S>, SpliceIndices)> {
    if *delta1 <= S::zero() {
        return Err(Error::Domain(format!("delta1 must be positive, got {delta1}")));
    }
    let space = system.space();
    let p0 = tail
        .points
        .first()
        .ok_or_else(|| Error::Usage("splice tail is empty".into()))?;
    let reach = delta1.clone() + delta1.clone();
    let mut current = r.clone();
    let mut segment = Vec::new();
    let mut n1 = None;
    let mut n2 = None;
    for n in 0..=horizon {
        if n1.is_none() && space.dist(z0, &current)? < reach {
            n1 = Some(n);
        }
        if n1.is_some() {
            if space.dist(p0, &current)? < reach {
                n2 = Some(n);
                break;
            }
            segment.push(current.clone());
        }
        current = system.apply(&current);
    }
    let (n1, n2) = match (n1, n2) {
        (Some(a), Some(b)) => (a, b),
        (None, _) => {
            return Err(Error::SearchFailure(format!(
                "orbit of {r} never came within {reach} of {z0} in {horizon} steps"
            )))
        }
        (Some(_), None) => {
            return Err(Error::SearchFailure(format!(
                "orbit of {r} never came within {reach} of {p0} in {horizon} steps"
            )))
        }
    };
    let mut points = segment;
    points.extend(tail.points.iter().cloned());
    let bound = tail.d.clone() + tail.d.clone();
    if !validate(system, &points, &bound) {
        return Err(Error::Invariant(format!(
            "spliced sequence is not a {bound}-pseudotrajectory; need 2*delta1 <= {bound}"
        )));
    }
    Ok((
        Pseudotrajectory {
            points,
            d: bound,
            provenance: Provenance::Spliced { n1, n2 },
        },
        SpliceIndices { n1, n2 },
    ))
}

/// The drift sequence `p_n = p_0 + n alpha + n d/2 (mod 1)` for a rotation,
/// of length `N = ceil(4 eps / d) + 1`. Its lifted span `N d / 2` exceeds
/// `2 eps` strictly, so it is a `d/2`-pseudotrajectory that no orbit
/// `eps`-shadows.
pub fn worst_case_pseudotrajectory<S: Scalar>(
    system: &MapSystem<S>,
    p0: &Point<S>,
    d: &S,
    eps: &S,
) -> Result<Pseudotrajectory<S>> {
    let alpha = match system.kind() {
        MapKind::Rotation { alpha } => alpha.clone(),
        _ => return Err(Error::Usage(format!("worst-case drift needs a rotation, got {system}"))),
    };
    if *d <= S::zero() || *eps <= S::zero() {
        return Err(Error::Domain("d and eps must be positive".into()));
    }
    if *eps >= S::from_ratio(1, 4) {
        return Err(Error::Domain(format!("eps must be < 1/4, got {eps}")));
    }
    let ratio = S::from_ratio(4, 1) * eps.clone() / d.clone();
    let steps = (-(-ratio).floor()).to_f64() as usize + 1;
    let half = d.clone() * S::half();
    let start = system.space().point(p0.coords.clone())?;
    let points = (0..=steps)
        .map(|n| {
            let shift = S::from_usize(n) * (alpha.clone() + half.clone());
            Point::scalar(frac(&(start.coords[0].clone() + shift)))
        })
        .collect();
    Ok(Pseudotrajectory {
        points,
        d: half,
        provenance: Provenance::WorstCase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    #[test]
    fn zero_horizon_is_the_start_point() {
        let sys = MapSystem::<Q>::doubling();
        let t = generate_trial(&sys, &Point::scalar(q(1, 3)), &q(1, 50), 0, 1, 2).unwrap();
        assert_eq!(t.points, vec![Point::scalar(q(1, 3))]);
    }

    #[test]
    fn rotation_steps_within_bound() {
        let sys = MapSystem::<Q>::rotation(q(610, 987));
        let t = generate_trial(&sys, &Point::scalar(q(0, 1)), &q(1, 50), 100, 5, 0).unwrap();
        assert!(validate(&sys, &t.points, &q(1, 50)));
        assert!(max_deviation(&sys, &t.points) <= q(1, 50));
    }

    #[test]
    fn validate_rejects_large_jump() {
        let sys = MapSystem::<Q>::rotation(q(1, 4));
        let d = q(1, 100);
        let pts = vec![Point::scalar(q(0, 1)), Point::scalar(q(1, 4) + q(2, 100))];
        assert!(!validate(&sys, &pts, &d));
        let orbit = sys.orbit(&Point::scalar(q(1, 7)), 20);
        assert!(validate(&sys, &orbit, &q(1, 1_000_000)));
    }

    #[test]
    fn bad_step_bound_is_domain_error() {
        let sys = MapSystem::<Q>::doubling();
        let mut rng = trial_rng(0, 0);
        assert!(matches!(
            generate(&sys, &Point::scalar(q(0, 1)), &q(0, 1), 3, &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn prefix_property() {
        let sys = MapSystem::<Q>::doubling();
        let y0 = Point::scalar(q(1, 5));
        let long = generate_trial(&sys, &y0, &q(1, 50), 60, 42, 9).unwrap();
        let short = generate_trial(&sys, &y0, &q(1, 50), 17, 42, 9).unwrap();
        assert_eq!(long.prefix(17), short);
    }

    #[test]
    fn degenerate_splice_is_tail() {
        let sys = MapSystem::<Q>::rotation(q(610, 987));
        let tail = generate_trial(&sys, &Point::scalar(q(3, 10)), &q(1, 10), 5, 1, 1).unwrap();
        let (spliced, idx) =
            splice(&sys, &Point::scalar(q(0, 1)), &tail.points[0], &tail, &q(1, 20), 10_000).unwrap();
        assert_eq!(idx.n1, idx.n2);
        assert_eq!(spliced.points, tail.points);
    }

    #[test]
    fn splice_indices_satisfy_reach() {
        let sys = MapSystem::<Q>::rotation(q(610, 987));
        let delta1 = q(1, 20);
        let tail = generate_trial(&sys, &Point::scalar(q(7, 10)), &q(1, 5), 4, 3, 3).unwrap();
        let r = Point::scalar(q(0, 1));
        let z0 = Point::scalar(q(1, 10));
        let (spliced, idx) = splice(&sys, &r, &z0, &tail, &delta1, 10_000).unwrap();
        let orbit = sys.orbit(&r, idx.n2);
        let sp = sys.space();
        assert!(sp.dist(&z0, &orbit[idx.n1]).unwrap() < q(1, 10));
        assert!(sp.dist(&tail.points[0], &orbit[idx.n2]).unwrap() < q(1, 10));
        assert!(idx.n1 <= idx.n2);
        assert_eq!(spliced.points.len(), idx.n2 - idx.n1 + tail.points.len());
    }

    #[test]
    fn splice_search_failure() {
        // rotation by 1/2 from 0 only visits {0, 1/2}
        let sys = MapSystem::<Q>::rotation(q(1, 2));
        let tail = Pseudotrajectory::exact_orbit(&sys, &Point::scalar(q(1, 4)), 2, q(1, 10));
        let err = splice(&sys, &Point::scalar(q(0, 1)), &Point::scalar(q(0, 1)), &tail, &q(1, 20), 100);
        assert!(matches!(err, Err(Error::SearchFailure(_))));
    }

    #[test]
    fn worst_case_length_and_bound() {
        let sys = MapSystem::<Q>::rotation(q(610, 987));
        let w = worst_case_pseudotrajectory(&sys, &Point::scalar(q(0, 1)), &q(1, 50), &q(1, 20)).unwrap();
        assert_eq!(w.horizon(), 11);
        assert_eq!(w.d, q(1, 100));
        assert!(validate(&sys, &w.points, &q(1, 100)));
        assert!(matches!(
            worst_case_pseudotrajectory(&sys, &Point::scalar(q(0, 1)), &q(1, 50), &q(1, 4)),
            Err(Error::Domain(_))
        ));
        let dbl = MapSystem::<Q>::doubling();
        assert!(matches!(
            worst_case_pseudotrajectory(&dbl, &Point::scalar(q(0, 1)), &q(1, 50), &q(1, 20)),
            Err(Error::Usage(_))
        ));
    }
}
