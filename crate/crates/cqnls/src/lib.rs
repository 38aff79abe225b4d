//! Radial cubic-quintic nonlinear Schrödinger simulation and diagnostics.
//!
//! The equation under study is `i u_t + Δu = |u|²u − |u|⁴u` for radial
//! fields on ℝ³, a focusing-quintic, defocusing-cubic competition whose
//! global behaviour is organized by the static solution
//! `W(r) = (1 + r²/3)^{-1/2}` of the quintic-only problem. The crate
//! provides the discrete machinery to measure that organization:
//!
//! * [`grid`]: sine-spectral radial grid, exact linear propagator,
//!   quadrature and derivatives;
//! * [`ground_state`]: closed forms for `W`, its scaling family, and the
//!   reference constants every threshold comparison is made against;
//! * [`functionals`]: mass, energy, the critical energy, and the
//!   diagnostics record measured along trajectories;
//! * [`virial`]: truncated virial weights with certified curvature bound
//!   and the localized monotonicity functionals built from them;
//! * [`dynamics`]: Strang-split time integration with blowup and
//!   scattering-proxy outcome detection;
//! * [`modulation`]: decomposition of near-orbit states into phase, scale
//!   and remainder, with the quadratic forms controlling the remainder;
//! * [`experiments`]: amplitude tuning, identity verification, and the
//!   threshold dichotomy experiment with artifact emission;
//! * [`cli`]: the `cqnls` command-line front end.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod grid;
pub mod ground_state;
pub mod modulation;
pub mod quad;
pub mod virial;

pub use error::{Error, Result};
pub use grid::{make_grid, RadialField, RadialGrid};
pub use ground_state::{reference_constants, GroundStateRef};
