//! A desk-scale numerical laboratory for the one-dimensional defocusing
//! cubic wave equation with unit-modulus background and its quantum-fluid
//! (Madelung) formulation.
//!
//! The pieces, bottom to top:
//!
//! - [`field`]: periodic grid, complex fields, discrete Fourier conventions;
//! - [`spectral`]: `H^s` / homogeneous Sobolev norms and the
//!   Sobolev-Slobodeckij norm on balls;
//! - [`lp`]: dyadic frequency decomposition, Besov norms, the Bony
//!   paraproduct splitting and product-estimate probes;
//! - [`madelung`]: the transform `q -> (|q|^2, Im[q'/q])`, its anchored
//!   inverse and vacuum detection;
//! - [`energy`]: the Ginzburg-Landau and fractional energies, the
//!   dip-energy cubic with its inverse threshold, the minimizer family,
//!   no-vacuum certificates;
//! - [`metrics`]: the sech-localized phase-quotient distance, its ball
//!   variants, the plain Sobolev distance on fluid states, and the
//!   bilipschitz / phase-exponential probes;
//! - [`dynamics`]: split-step and RK4 solvers plus the conjugation harness
//!   relating them through the transform;
//! - [`acceptance`]: the numbered acceptance criteria with pinned
//!   tolerances.

pub mod acceptance;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod field;
pub mod io;
pub mod lp;
pub mod madelung;
pub mod metrics;
pub mod report;
pub mod sampling;
pub mod spectral;
pub mod util;

pub use error::{LabError, Result};
pub use field::{Ball, ComplexField, Grid1D, SobolevIndex};
pub use madelung::HydroState;

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex64;
