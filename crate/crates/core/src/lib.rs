//! Values, strategies and optimality certificates for the two-state
//! zero-sum repeated game in which only Player 1 observes the state.
//!
//! The state persists with probability `p ∈ [½, 1)` each round. Player 1
//! plays the strategy `σ*` built from the belief map `Φ`; Player 2's
//! candidate response is obtained from a contracting matrix recursion, and
//! its validity reduces to negativity of a thermodynamic pressure, which is
//! certified here by transfer-matrix spectral radii.

pub mod belief;
pub mod error;
pub mod linalg;
pub mod numeric;
pub mod perturbation;
pub mod pressure;
pub mod response;
pub mod sigma_star;
pub mod simulator;

pub use belief::{p_star, BeliefOrbit, GameParameter, Side};
pub use error::{Error, Result};
pub use numeric::{parse_exact, BigFloat, Precision, Rational, Real};
