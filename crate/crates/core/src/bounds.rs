//! Constructive quantities of the two dichotomy arguments.
//!
//! Transitive case: the inclusion radius `delta`, the measure ratio `eta`,
//! the tube bound `eta^len`, cover times `K1, K2, K` of a dense orbit, and
//! the block bound `1 - (1 - eta^L)^k`.
//!
//! Attractor case (annulus spiral, attractor `r = 1`): absorbing
//! neighbourhood `W = {|r - 1| <= rho}`, entry time `n0`, admissible noise
//! `d0`, and settling time `S`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pseudotraj::{generate, trial_rng, Pseudotrajectory};
use crate::scalar::{powi, smin, Scalar};
use crate::spaces::{Point, Space, SpaceKind};
use crate::systems::{exact_string, MapKind, MapSystem};

/// Safety factor applied to `d0` (10%).
pub const DEFAULT_D0_MARGIN: (i64, i64) = (1, 10);

/// Default cap on cover-time searches.
pub const DEFAULT_COVER_HORIZON: usize = 1_000_000;

/// `delta = d / (2 (1 + Lip))`: for every `x`, `z in B(delta, x)` and
/// `y in B(d/2, f(x))` the ball `B(delta, y)` lies in `B(d, f(z))`, because
/// `delta + d/2 + Lip * delta <= d`.
pub fn delta_for_inclusion<S: Scalar>(system: &MapSystem<S>, d: &S) -> Result<S> {
    if *d <= S::zero() {
        return Err(Error::Domain(format!("d must be positive, got {d}")));
    }
    Ok(d.clone() / (S::from_ratio(2, 1) * (S::one() + system.lipschitz().clone())))
}

/// `eta = inf_x mu(B(delta, x)) / sup_x mu(B(d, x))`, in closed form.
pub fn eta<S: Scalar>(space: &Space<S>, delta: &S, d: &S) -> Result<S> {
    if *delta <= S::zero() {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    if delta > d {
        return Err(Error::Domain(format!("need delta <= d, got {delta} > {d}")));
    }
    Ok(space.min_ball_measure(delta) / space.max_ball_measure(d))
}

/// Two-sided bracket on `eta` from inf/sup of ball measures over a net.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaBracket {
    pub lo: f64,
    pub hi: f64,
    pub net_size: usize,
    pub cover_radius: f64,
}

impl EtaBracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Net estimate of `eta` with net radius `delta / 10`.
///
/// Net values give an upper bound on the infimum and a lower bound on the
/// supremum; the Lipschitz bound of `x -> mu(B(r, x))` times the achieved
/// cover radius bounds the discretization error in the other direction.
pub fn eta_net_bracket<S: Scalar>(space: &Space<S>, delta: &S, d: &S) -> Result<EtaBracket> {
    if *delta <= S::zero() || delta > d {
        return Err(Error::Domain(format!("need 0 < delta <= d, got {delta}, {d}")));
    }
    let net_radius = delta.clone() / S::from_ratio(10, 1);
    let net = space.epsilon_net(&net_radius)?;
    let h = space.net_cover_radius(&net_radius).to_f64();
    let mut inf_small = f64::INFINITY;
    let mut sup_big = 0.0f64;
    for c in &net {
        inf_small = inf_small.min(space.ball_measure(c, delta)?.to_f64());
        sup_big = sup_big.max(space.ball_measure(c, d)?.to_f64());
    }
    let lip_small = space.ball_measure_center_lipschitz(delta).to_f64();
    let lip_big = space.ball_measure_center_lipschitz(d).to_f64();
    let inf_lo = (inf_small - lip_small * h).max(0.0);
    let sup_hi = sup_big + lip_big * h;
    // one ulp-scale widening each way absorbs rounding in the quotients
    let widen = 1e-12;
    Ok(EtaBracket {
        lo: inf_lo / sup_hi * (1.0 - widen),
        hi: inf_small / sup_big * (1.0 + widen),
        net_size: net.len(),
        cover_radius: h,
    })
}

/// `eta^length`: lower bound on the probability that a random
/// `d`-pseudotrajectory follows the `delta`-tube of a `d/2`-pseudotrajectory
/// for `length` steps.
pub fn tube_probability_bound<S: Scalar>(eta: &S, length: usize) -> Result<S> {
    check_eta(eta)?;
    Ok(powi(eta, length))
}

/// `1 - (1 - eta^L)^k`: lower bound on the probability that the first `k`
/// blocks of length `L` contain a non-shadowable block.
pub fn nonshadow_lower_bound<S: Scalar>(eta: &S, block: usize, k: usize) -> Result<S> {
    check_eta(eta)?;
    if block == 0 {
        return Err(Error::Domain("block length must be >= 1".into()));
    }
    Ok(S::one() - powi(&(S::one() - powi(eta, block)), k))
}

/// Smallest `k` with `1 - (1 - eta^L)^k >= target`, computed in `f64`.
pub fn blocks_for_confidence(eta: f64, block: usize, target: f64) -> Option<usize> {
    let p = eta.powi(block as i32);
    if p.is_nan() || p <= 0.0 || !(0.0..1.0).contains(&target) {
        return None;
    }
    if p >= 1.0 {
        return Some(if target > 0.0 { 1 } else { 0 });
    }
    let k = ((1.0 - target).ln() / (1.0 - p).ln()).ceil();
    Some(k.max(0.0) as usize)
}

fn check_eta<S: Scalar>(eta: &S) -> Result<()> {
    if *eta <= S::zero() || *eta > S::one() {
        return Err(Error::Domain(format!("eta must lie in (0, 1], got {eta}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverTime {
    pub k1: usize,
    pub k2: usize,
    pub k: usize,
}

/// Visits of the orbit of `r` to the cells of the `delta1`-net.
///
/// A visit to cell `i` means an orbit point whose nearest net center is
/// `c_i`; cells are subsets of the cover balls, so every visited cell puts
/// the orbit within `delta1` of that center. `K1` is the first time all
/// cells have been visited, `K2` the same count for the orbit restarted at
/// `f^(K1+1)(r)`, and `K = K1 + K2 + 1`.
pub fn cover_time<S: Scalar>(system: &MapSystem<S>, r: &Point<S>, delta1: &S, horizon: usize) -> Result<CoverTime> {
    let space = system.space();
    let net = space.epsilon_net(delta1)?;
    let start = space.point(r.coords.clone())?;
    let (k1, after) = first_full_visit(system, &start, delta1, &net, horizon)?;
    let restart = system.apply(&after);
    let (k2, _) = first_full_visit(system, &restart, delta1, &net, horizon.saturating_sub(k1 + 1))?;
    Ok(CoverTime { k1, k2, k: k1 + k2 + 1 })
}

fn first_full_visit<S: Scalar>(
    system: &MapSystem<S>,
    start: &Point<S>,
    delta1: &S,
    net: &[Point<S>],
    horizon: usize,
) -> Result<(usize, Point<S>)> {
    let space = system.space();
    let mut visited = vec![false; net.len()];
    let mut remaining = net.len();
    let mut x = start.clone();
    let mut period = None;
    for n in 0..=horizon {
        let cell = space.net_cell(&x, delta1);
        if !visited[cell] {
            visited[cell] = true;
            remaining -= 1;
            if remaining == 0 {
                return Ok((n, x));
            }
        }
        x = system.apply(&x);
        if x == *start {
            period = Some(n + 1);
            break;
        }
    }
    let missing = &net[visited.iter().position(|v| !v).unwrap_or(0)];
    Err(Error::SearchFailure(match period {
        Some(p) => format!("orbit is periodic with period {p} and never visits the net ball around {missing}"),
        None => format!("orbit did not visit the net ball around {missing} within {horizon} steps"),
    }))
}

/// Monte Carlo frequency with which a random `d`-pseudotrajectory started
/// uniformly in `B(delta, p_0)` stays in `B(delta, p_n)` for `n = 1..=len`.
pub fn empirical_tube_frequency<S: Scalar>(
    system: &MapSystem<S>,
    tube: &Pseudotrajectory<S>,
    delta: &S,
    d: &S,
    trials: usize,
    seed: u64,
) -> Result<(usize, usize)> {
    use rayon::prelude::*;
    let space = system.space();
    let len = tube.horizon();
    let stays = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<bool> {
            let mut rng = trial_rng(seed, t);
            let z0 = space.sample_uniform_ball(&tube.points[0], delta, &mut rng)?;
            let z = generate(system, &z0, d, len, &mut rng)?;
            Ok(z.points
                .iter()
                .zip(&tube.points)
                .all(|(a, b)| space.dist_unchecked(a, b) < *delta))
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok((stays.into_iter().filter(|s| *s).count(), trials))
}

/// Quantities for the transitive argument on one system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitiveQuantities {
    pub d: f64,
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub delta1: f64,
    pub cover: Option<CoverTime>,
    pub cover_error: Option<String>,
    pub tail_length: Option<usize>,
    pub block_length: Option<usize>,
    /// `log10(eta^L)`, finite even when `eta^L` underflows.
    pub log10_eta_pow_block: Option<f64>,
    pub exact: TransitiveExact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitiveExact {
    pub delta: String,
    pub eta: String,
    pub delta1: String,
}

/// `delta = min(d / (2 (1 + Lip)), eps / 4)`, `eta`, `delta1 = delta / 4`,
/// the cover time of the orbit of `r`, and for rotations the length of the
/// explicit non-shadowable tail, giving `L = K + N + 1`.
pub fn transitive_quantities<S: Scalar>(
    system: &MapSystem<S>,
    d: &S,
    eps: &S,
    r: &Point<S>,
    horizon: usize,
) -> Result<TransitiveQuantities> {
    let delta = smin(&delta_for_inclusion(system, d)?, &(eps.clone() / S::from_ratio(4, 1)));
    let eta_value = eta(system.space(), &delta, d)?;
    let delta1 = delta.clone() / S::from_ratio(4, 1);
    let (cover, cover_error) = match cover_time(system, r, &delta1, horizon) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let tail_length = match system.kind() {
        MapKind::Rotation { .. } if eps.clone() + eps.clone() < S::from_ratio(1, 4) => Some(
            crate::pseudotraj::worst_case_pseudotrajectory(
                system,
                &Point::scalar(S::zero()),
                d,
                &(eps.clone() + eps.clone()),
            )?
            .horizon(),
        ),
        _ => None,
    };
    let block_length = match (cover, tail_length) {
        (Some(c), Some(n)) => Some(c.k + n + 1),
        _ => None,
    };
    let log10_eta_pow_block = block_length.map(|l| l as f64 * eta_value.to_f64().log10());
    Ok(TransitiveQuantities {
        d: d.to_f64(),
        eps: eps.to_f64(),
        delta: delta.to_f64(),
        eta: eta_value.to_f64(),
        delta1: delta1.to_f64(),
        cover,
        cover_error,
        tail_length,
        block_length,
        log10_eta_pow_block,
        exact: TransitiveExact {
            delta: exact_string(&delta),
            eta: exact_string(&eta_value),
            delta1: exact_string(&delta1),
        },
    })
}

/// Quantities for the attractor argument on the annulus spiral.
#[derive(Clone, Debug, PartialEq)]
pub struct AttractorQuantities<S> {
    pub lambda: S,
    pub eps: S,
    /// `eps / 4`, the shadowing scale that fails with probability one.
    pub eps0: S,
    /// Half-width of the absorbing neighbourhood `W = {|r - 1| <= rho}`.
    pub rho: S,
    /// First `n` with `lambda^n |r0 - 1| <= lambda rho` (noise-free entry).
    pub n0: usize,
    pub d0: S,
    /// Entry time into `W` guaranteed for every `d < d0`.
    pub n0_robust: usize,
    /// Noise level the remaining fields refer to (default `d0 / 2`).
    pub d: S,
    /// Entry time into `W` guaranteed at noise `d`.
    pub entry: usize,
    pub delta: S,
    /// First `n` with `lambda^n rho <= delta / 4`.
    pub settle: usize,
}

/// Computes `rho = min(eps/4, w/2)`, `n0`, `d0`, entry times and `S`.
///
/// `d0 = min(eps/4, (1 - lambda) rho) (1 - margin)`. Below `d0` the closed
/// `d0`-neighbourhood of `closure(f(W)) = {|r-1| <= lambda rho}` stays in
/// `W`, and the perturbed radial recursion `|r_{n+1}-1| <= lambda |r_n-1| + d`
/// enters `W` by the first `n` with
/// `lambda^n |r0-1| + d (1 - lambda^n) / (1 - lambda) <= rho`.
pub fn attractor_quantities<S: Scalar>(
    system: &MapSystem<S>,
    eps: &S,
    y0: &Point<S>,
    d: Option<&S>,
    margin: &S,
) -> Result<AttractorQuantities<S>> {
    let lambda = match system.kind() {
        MapKind::AnnulusSpiral { lambda, .. } => lambda.clone(),
        _ => return Err(Error::Usage(format!("attractor quantities need an annulus spiral, got {system}"))),
    };
    if *eps <= S::zero() {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if *margin < S::zero() || *margin >= S::one() {
        return Err(Error::Domain(format!("margin must lie in [0, 1), got {margin}")));
    }
    let space = system.space();
    debug_assert_eq!(space.kind(), SpaceKind::Annulus);
    let y0 = space.point(y0.coords.clone())?;
    let w = space.half_width().cloned().expect("annulus has a half-width");
    let four = S::from_ratio(4, 1);
    let eps0 = eps.clone() / four.clone();
    let rho = smin(&eps0, &(w * S::half()));
    let offset = (y0.coords[0].clone() - S::one()).abs();
    let one_minus = S::one() - lambda.clone();

    let n0 = first_n(|n| powi(&lambda, n) * offset.clone() <= lambda.clone() * rho.clone())?;
    let d0 = smin(&eps0, &(one_minus.clone() * rho.clone())) * (S::one() - margin.clone());
    let entry_at = |noise: &S| {
        first_n(|n| {
            let ln = powi(&lambda, n);
            ln.clone() * offset.clone() + noise.clone() * (S::one() - ln) / one_minus.clone() <= rho
        })
    };
    let n0_robust = entry_at(&d0)?;
    let d = match d {
        Some(d) => {
            if *d <= S::zero() || *d >= d0 {
                return Err(Error::Domain(format!("noise level must lie in (0, d0 = {d0}), got {d}")));
            }
            d.clone()
        }
        None => d0.clone() * S::half(),
    };
    let entry = entry_at(&d)?;
    let lip = system.lipschitz().clone();
    let inclusion = d.clone() / (S::from_ratio(2, 1) * (S::one() + lip));
    // strictly below d/4 and below eps/4
    let delta = smin(&inclusion, &eps0) * (S::one() - margin.clone());
    let settle = first_n(|n| powi(&lambda, n) * rho.clone() <= delta.clone() / four.clone())?;
    Ok(AttractorQuantities {
        lambda,
        eps: eps.clone(),
        eps0,
        rho,
        n0,
        d0,
        n0_robust,
        d,
        entry,
        delta,
        settle,
    })
}

fn first_n(pred: impl Fn(usize) -> bool) -> Result<usize> {
    (0..100_000)
        .find(|n| pred(*n))
        .ok_or_else(|| Error::SearchFailure("no admissible step count below 100000".into()))
}

impl<S: Scalar> AttractorQuantities<S> {
    /// `y` lies in `W`.
    pub fn in_absorbing_set(&self, y: &Point<S>) -> bool {
        (y.coords[0].clone() - S::one()).abs() <= self.rho
    }

    /// `d0`-neighbourhood of `closure(f(W))` lies in `W`.
    pub fn absorbing_margin_holds(&self) -> bool {
        self.lambda.clone() * self.rho.clone() + self.d0.clone() < self.rho
    }

    pub fn report(&self) -> AttractorReport {
        AttractorReport {
            lambda: self.lambda.to_f64(),
            eps: self.eps.to_f64(),
            eps0: self.eps0.to_f64(),
            rho: self.rho.to_f64(),
            n0: self.n0,
            d0: self.d0.to_f64(),
            n0_robust: self.n0_robust,
            d: self.d.to_f64(),
            entry: self.entry,
            delta: self.delta.to_f64(),
            settle: self.settle,
            w: format!("{{|r - 1| <= {}}}", exact_string(&self.rho)),
            exact_d0: exact_string(&self.d0),
            exact_d: exact_string(&self.d),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractorReport {
    pub lambda: f64,
    pub eps: f64,
    pub eps0: f64,
    pub rho: f64,
    pub n0: usize,
    pub d0: f64,
    pub n0_robust: usize,
    pub d: f64,
    pub entry: usize,
    pub delta: f64,
    pub settle: usize,
    pub w: String,
    pub exact_d0: String,
    pub exact_d: String,
}

/// Everything the `bounds` command reports for one system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofQuantities {
    pub system: String,
    pub lipschitz: f64,
    pub transitive: Option<TransitiveQuantities>,
    pub attractor: Option<AttractorReport>,
}

pub fn proof_quantities<S: Scalar>(
    system: &MapSystem<S>,
    d: &S,
    eps: &S,
    y0: Option<&Point<S>>,
) -> Result<ProofQuantities> {
    let attractor = match (system.kind(), y0) {
        (MapKind::AnnulusSpiral { .. }, Some(y0)) => Some(
            attractor_quantities(
                system,
                eps,
                y0,
                None,
                &S::from_ratio(DEFAULT_D0_MARGIN.0, DEFAULT_D0_MARGIN.1),
            )?
            .report(),
        ),
        (MapKind::AnnulusSpiral { .. }, None) => {
            return Err(Error::Usage("attractor quantities need --y0".into()))
        }
        _ => None,
    };
    let transitive = match system.kind() {
        MapKind::AnnulusSpiral { .. } => None,
        _ => {
            let r = Point::scalar(S::zero());
            Some(transitive_quantities(system, d, eps, &r, DEFAULT_COVER_HORIZON)?)
        }
    };
    Ok(ProofQuantities {
        system: system.spec().to_string(),
        lipschitz: system.lipschitz().to_f64(),
        transitive,
        attractor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    #[test]
    fn inclusion_radius() {
        let rot = MapSystem::<Q>::rotation(q(610, 987));
        assert_eq!(delta_for_inclusion(&rot, &q(1, 10)).unwrap(), q(1, 40));
        let dbl = MapSystem::<Q>::doubling();
        assert_eq!(delta_for_inclusion(&dbl, &q(6, 100)).unwrap(), q(1, 100));
        // symbolic chain: delta + d/2 + Lip * delta <= d
        for (sys, d) in [(&rot, q(1, 10)), (&dbl, q(6, 100))] {
            let delta = delta_for_inclusion(sys, &d).unwrap();
            assert!(delta.clone() + d.clone() / q(2, 1) + sys.lipschitz().clone() * delta <= d);
        }
    }

    #[test]
    fn inclusion_holds_on_random_probes() {
        // probe: x, z in B(delta, x), y in B(d/2, f(x)), w in B(delta, y);
        // then dist(w, f(z)) <= d
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let systems: Vec<(MapSystem<f64>, f64)> = vec![
            (MapSystem::rotation(610.0 / 987.0), 0.1),
            (MapSystem::doubling(), 0.06),
            (MapSystem::tent(1.5).unwrap(), 0.08),
            (MapSystem::annulus_spiral(0.5, 610.0 / 987.0, 0.5).unwrap(), 0.05),
        ];
        for (sys, d) in systems {
            let sp = sys.space();
            let delta = delta_for_inclusion(&sys, &d).unwrap();
            let center = sp.canonicalize(&Point { coords: vec![1.0; sp.dim()] });
            for _ in 0..10_000 {
                let x = sp.sample_uniform_ball(&center, &2.0, &mut rng).unwrap();
                let z = sp.sample_uniform_ball(&x, &delta, &mut rng).unwrap();
                let y = sp.sample_uniform_ball(&sys.apply(&x), &(d / 2.0), &mut rng).unwrap();
                let w = sp.sample_uniform_ball(&y, &delta, &mut rng).unwrap();
                assert!(sp.dist_unchecked(&w, &sys.apply(&z)) <= d + 1e-12, "{sys}");
            }
        }
    }

    #[test]
    fn eta_closed_forms() {
        assert_eq!(eta(&Space::<Q>::circle(), &q(1, 100), &q(1, 10)).unwrap(), q(1, 10));
        assert_eq!(eta(&Space::<Q>::interval(), &q(1, 100), &q(1, 10)).unwrap(), q(1, 20));
        assert_eq!(eta(&Space::<Q>::circle(), &q(1, 10), &q(1, 10)).unwrap(), q(1, 1));
        assert!(eta(&Space::<Q>::interval(), &q(1, 10), &q(1, 10)).unwrap() < q(1, 1));
        assert!(matches!(eta(&Space::<Q>::circle(), &q(0, 1), &q(1, 10)), Err(Error::Domain(_))));
        // annulus: boundary box over interior box
        let a = Space::<Q>::annulus(q(1, 2)).unwrap();
        assert_eq!(eta(&a, &q(1, 100), &q(1, 10)).unwrap(), q(1, 100) * q(2, 100) / (q(2, 10) * q(2, 10)));
    }

    #[test]
    fn net_bracket_contains_closed_form() {
        for space in [Space::<Q>::interval(), Space::<Q>::circle(), Space::<Q>::annulus(q(1, 2)).unwrap()] {
            let b = eta_net_bracket(&space, &q(1, 50), &q(1, 10)).unwrap();
            let exact = eta(&space, &q(1, 50), &q(1, 10)).unwrap().to_f64();
            assert!(b.contains(exact), "{space:?}: {b:?} vs {exact}");
        }
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(tube_probability_bound(&q(1, 10), 3).unwrap(), q(1, 1000));
        assert_eq!(tube_probability_bound(&q(1, 10), 0).unwrap(), q(1, 1));
        assert_eq!(nonshadow_lower_bound(&q(1, 2), 2, 3).unwrap(), q(37, 64));
        assert_eq!(nonshadow_lower_bound(&q(1, 2), 2, 0).unwrap(), q(0, 1));
        assert!(nonshadow_lower_bound(&q(0, 1), 2, 3).is_err());
        assert!(nonshadow_lower_bound(&q(1, 2), 0, 3).is_err());
        let k = blocks_for_confidence(0.5, 2, 0.99).unwrap();
        assert!(nonshadow_lower_bound(&0.5, 2, k).unwrap() >= 0.99);
        assert!(nonshadow_lower_bound(&0.5, 2, k - 1).unwrap() < 0.99);
    }

    #[test]
    fn cover_time_of_quarter_rotation() {
        let rot = MapSystem::<Q>::rotation(q(1, 4));
        let c = cover_time(&rot, &Point::scalar(q(0, 1)), &q(3, 10), 100).unwrap();
        assert_eq!(c, CoverTime { k1: 3, k2: 3, k: 7 });
    }

    #[test]
    fn cover_time_golden_rotation_rescan() {
        let rot = MapSystem::<Q>::rotation(q(610, 987));
        let delta1 = q(1, 20);
        let r = Point::scalar(q(0, 1));
        let c = cover_time(&rot, &r, &delta1, DEFAULT_COVER_HORIZON).unwrap();
        // independent re-scan: every net ball is entered (distance < delta1)
        // within the first K1 + 1 orbit points
        let net = rot.space().epsilon_net(&delta1).unwrap();
        let orbit = rot.orbit(&r, c.k1);
        for center in &net {
            assert!(orbit.iter().any(|x| rot.space().dist(x, center).unwrap() < delta1));
        }
        let tail = rot.orbit(&rot.apply(&orbit[c.k1]), c.k2);
        for center in &net {
            assert!(tail.iter().any(|x| rot.space().dist(x, center).unwrap() < delta1));
        }
    }

    #[test]
    fn cover_time_failure_is_clean() {
        let rot = MapSystem::<Q>::rotation(q(1, 2));
        let err = cover_time(&rot, &Point::scalar(q(0, 1)), &q(1, 10), 1000);
        assert!(matches!(err, Err(Error::SearchFailure(_))));
        // a doubling orbit of a rational point is eventually periodic; either
        // outcome is acceptable but it must not panic
        let dbl = MapSystem::<Q>::doubling();
        let _ = cover_time(&dbl, &Point::scalar(q(123_456_789, 1_000_000_007)), &q(1, 10), 10_000);
    }

    #[test]
    fn attractor_reference_values() {
        let sys = MapSystem::<Q>::annulus_spiral(q(1, 2), q(610, 987), q(1, 2)).unwrap();
        let aq = attractor_quantities(&sys, &q(1, 5), &Point::polar(q(7, 5), q(0, 1)), None, &q(1, 10)).unwrap();
        assert_eq!(aq.rho, q(1, 20));
        assert_eq!(aq.n0, 4);
        assert_eq!(aq.eps0, q(1, 20));
        // d0 = min(eps/4, (1 - lambda) rho) * 0.9
        assert_eq!(aq.d0, q(9, 400));
        assert!(aq.d0 < q(1, 20));
        assert!(aq.absorbing_margin_holds());
        assert_eq!(aq.d, q(9, 800));
        assert_eq!(aq.entry, 4);
        assert_eq!(aq.n0_robust, 7);
        assert!(aq.delta < aq.d.clone() / q(4, 1));
        assert!(powi(&q(1, 2), aq.settle) * aq.rho.clone() <= aq.delta.clone() / q(4, 1));
        assert!(attractor_quantities(&sys, &q(1, 5), &Point::polar(q(7, 5), q(0, 1)), Some(&q(1, 10)), &q(1, 10)).is_err());
        let rot = MapSystem::<Q>::rotation(q(1, 3));
        assert!(matches!(
            attractor_quantities(&rot, &q(1, 5), &Point::scalar(q(0, 1)), None, &q(1, 10)),
            Err(Error::Usage(_))
        ));
        assert!(attractor_quantities(&sys, &q(1, 5), &Point::polar(q(8, 5), q(0, 1)), None, &q(1, 10)).is_err());
    }

    #[test]
    fn perturbed_orbits_stay_in_absorbing_set() {
        let sys = MapSystem::<Q>::annulus_spiral(q(1, 2), q(610, 987), q(1, 2)).unwrap();
        let y0 = Point::polar(q(7, 5), q(0, 1));
        let aq = attractor_quantities(&sys, &q(1, 5), &y0, None, &q(1, 10)).unwrap();
        // f64 copy of the same chain keeps the test fast; the radial
        // recursion has O(1e-16) rounding against a margin of ~4e-3
        let fsys: MapSystem<f64> = sys.convert();
        let fy0: Point<f64> = y0.convert();
        let d = aq.d.to_f64();
        let rho = aq.rho.to_f64();
        for t in 0..10_000u64 {
            let mut rng = trial_rng(99, t);
            let traj = generate(&fsys, &fy0, &d, 60, &mut rng).unwrap();
            for y in &traj.points[aq.entry..] {
                assert!((y.coords[0] - 1.0).abs() <= rho, "trial {t}");
            }
        }
    }
}
