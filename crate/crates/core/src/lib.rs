//! Massless scalar field in a one-dimensional cavity with one moving wall.
//!
//! The left wall sits at `x = 0`, the right wall follows a prescribed
//! trajectory `L(t)` and returns to rest at length `L`. Everything is built on
//! the Moore phase function `R(τ)`, which solves
//! `R(t + L(t)) - R(t - L(t)) = 2L`. From it the crate computes the
//! renormalized energy profile, the total energy, Bogolubov coefficients and
//! photon spectra. It also provides the `SL(2,R)` toolkit of minimal-energy
//! phase functions.
//!
//! Natural units (`c = ħ = 1`) are used throughout; `ω = π/L`.

pub mod cli;
pub mod error;
pub mod moebius;
pub mod observables;
pub mod particles;
pub mod phase;
pub mod quadrature;
pub mod roots;
pub mod trajectory;

pub use error::{CavityError, Result};
pub use moebius::{MinimalSolution, MoebiusElement};
pub use observables::{EnergyProfile, EnergyReport};
pub use particles::SpectrumResult;
pub use phase::{PhaseFunction, ResonantAnsatz};
pub use trajectory::{TrajectoryKind, WallTrajectory};
