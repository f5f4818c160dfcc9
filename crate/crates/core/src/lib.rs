//! Random pseudotrajectories of model dynamical systems and their
//! shadowability.
//!
//! The crate samples pseudotrajectories as a Markov chain (each point drawn
//! uniformly from the `d`-ball around the image of the previous one),
//! decides finite-horizon shadowability with certified set propagation,
//! estimates shadowing probabilities by Monte Carlo, and computes the
//! constructive quantities (`delta`, `eta`, cover times, block bounds,
//! absorbing neighbourhoods) behind the transitive/attractor dichotomy.
//!
//! All numerical code is generic over [`Scalar`]; [`Exact`] (big rationals)
//! gives certified decisions, `f64` gives outer enclosures.

pub mod bounds;
pub mod enclosure;
pub mod error;
pub mod experiment;
pub mod io;
pub mod pseudotraj;
pub mod scalar;
pub mod shadowcheck;
pub mod spaces;
pub mod stats;
pub mod systems;

pub use enclosure::{EnclosureSet, Variant};
pub use error::{Error, Result};
pub use pseudotraj::{Provenance, Pseudotrajectory};
pub use scalar::Scalar;
pub use shadowcheck::{ShadowVerdict, Verdict};
pub use spaces::{Point, Space, SpaceKind};
pub use systems::{MapKind, MapSystem};

/// Exact rational scalar.
pub type Exact = num_rational::BigRational;

pub type ExactPoint = Point<Exact>;
pub type FloatPoint = Point<f64>;
pub type ExactSpace = Space<Exact>;
pub type FloatSpace = Space<f64>;
pub type ExactSystem = MapSystem<Exact>;
pub type FloatSystem = MapSystem<f64>;
pub type ExactSet = EnclosureSet<Exact>;
pub type FloatSet = EnclosureSet<f64>;
pub type ExactPseudotrajectory = Pseudotrajectory<Exact>;
pub type FloatPseudotrajectory = Pseudotrajectory<f64>;
