//! Numerical machinery for the slightly-critical Lane-Emden system with a
//! logarithmic nonlinearity: ground-state bubbles, reduction constants,
//! Green and Robin functions on balls and axisymmetric dumbbells, the
//! reduced energy functional, and a direct radial Newton solver.

pub mod bubble;
pub mod constants;
pub mod dd;
pub mod direct;
pub mod error;
pub mod exponents;
pub mod greens;
pub mod ode;
pub mod par;
pub mod quadrature;
pub mod reduced;

pub use error::*;
pub use exponents::{make_exponents, CriticalExponents};
pub use par::Exec;

/// Library version, recorded in every artifact the command-line tool writes.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
