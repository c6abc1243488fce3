//! Numerical laboratory for a damped quantum harmonic oscillator.
//!
//! The same open system is propagated under four descriptions and their
//! steady states are compared through the Uhlmann fidelity of Gaussian
//! states:
//!
//! * exact quantum Langevin dynamics ([`exact`]),
//! * the non-secular Redfield moment equations ([`master`]),
//! * the secular GKLS moment equations ([`master`]),
//! * the shifted, Lamb-shift-suppressed conventional variant.
//!
//! Everything is expressed in natural units `hbar = k_B = m = 1`; the bath
//! is an algebraic-Ohmic continuum `J(w) = lambda * w / (1 + (w/Lambda)^2)`.
//!
//! The modules are layered bottom-up: [`quad`] holds the adaptive
//! Gauss-Kronrod and principal-value machinery, [`bath`] the spectral
//! density, occupation, decay rates and Lamb shifts, [`gaussian`] the state
//! representation and fidelity, [`master`] the moment-space master
//! equations, and [`exact`] the propagator and covariance integrals of the
//! exact solution.

pub mod bath;
pub mod error;
pub mod exact;
pub mod gaussian;
pub mod master;
pub mod params;
pub mod quad;

pub use error::{Error, Result};
pub use params::ModelParams;

/// Default absolute tolerance for all bath and covariance integrals.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Stable hyperbolic cotangent for non-negative arguments.
///
/// Saturates to 1 beyond x = 40 (error below 1e-34) and accepts infinity,
/// which encodes the zero-temperature limit.
pub(crate) fn coth(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x > 40.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// x * coth(x), finite and equal to 1 at x = 0.
pub(crate) fn x_coth(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x > 40.0 {
        x
    } else if x < 1e-8 {
        1.0 + x * x / 3.0
    } else {
        x / x.tanh()
    }
}
