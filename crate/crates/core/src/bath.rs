//! Bath spectral functions and the derived master-equation coefficients.
//!
//! The bath is the algebraic-Ohmic continuum `J(w) = lambda w / (1 +
//! (w/Lambda)^2)`, extended to negative frequencies as an odd function.
//! From it follow the mean occupation, the decay rates `gamma(w)`, the
//! Lamb shifts `S(w)` (principal-value Hilbert transforms), and the scalar
//! coefficient set used by the moment equations:
//!
//! ```text
//! delta       = gamma(-wB) - gamma(wB)  = -2 J(wB)
//! sigma       = -gamma(-wB) - gamma(wB) = -2 J(wB) coth(wB/2T)
//! sigma_prime = -S(-wB) - S(wB)         =  lambda Lambda / (1 + (wB/Lambda)^2)
//! delta_prime =  S(-wB) - S(wB)
//! ```
//!
//! where `wB` is the Bohr frequency of the Hamiltonian the master equation
//! is derived from. All integrals carry an explicit absolute tolerance.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::quad;
use crate::{x_coth, DEFAULT_TOL};

/// Spectral density `J(w) = lambda w / (1 + (w/Lambda)^2)`, odd in `w`.
pub fn spectral_density(omega: f64, p: &ModelParams) -> f64 {
    let r = omega / p.cutoff;
    p.lambda * omega / (1.0 + r * r)
}

/// `J(w) coth(w/2T)`: even, non-negative, finite at `w = 0` where its
/// value is `2 lambda T`. At `T = 0` it degenerates to `|J(w)|`.
pub fn spectral_coth(omega: f64, p: &ModelParams) -> f64 {
    if p.temperature == 0.0 {
        return spectral_density(omega, p).abs();
    }
    let l2 = p.cutoff * p.cutoff;
    let j_over_w = p.lambda * l2 / (l2 + omega * omega);
    2.0 * p.temperature * j_over_w * x_coth(omega.abs() / (2.0 * p.temperature))
}

/// Mean bosonic occupation `n(w) = 1/(exp(w/T) - 1)`.
///
/// Satisfies the reflection identity `n(-w) = -(1 + n(w))`; at `T = 0` it
/// is 0 for positive and -1 for negative frequencies. The pole at `w = 0`
/// is never needed by any caller and is asserted away: quantities that
/// require a `w -> 0` limit go through [`spectral_coth`], which is finite.
pub fn bose_occupation(omega: f64, temperature: f64) -> f64 {
    assert!(omega != 0.0, "bosonic occupation pole at omega = 0");
    if temperature == 0.0 {
        return if omega > 0.0 { 0.0 } else { -1.0 };
    }
    1.0 / (omega / temperature).exp_m1()
}

/// Decay rate `gamma(w) = 2 J(w) (1 + n(w)) >= 0`.
///
/// Obeys detailed balance `gamma(-w) = exp(-w/T) gamma(w)`. Negative
/// frequencies are evaluated through the reflection identity as
/// `2 J(|w|) n(|w|)`, which stays accurate deep in the Boltzmann tail
/// where `1 + n(w)` would cancel.
pub fn decay_rate(omega: f64, p: &ModelParams) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    if omega > 0.0 {
        Ok(2.0 * spectral_density(omega, p) * (1.0 + bose_occupation(omega, p.temperature)))
    } else if p.temperature == 0.0 {
        Ok(0.0)
    } else {
        Ok(2.0 * spectral_density(-omega, p) * bose_occupation(-omega, p.temperature))
    }
}

/// Lamb shift `S(w) = -(1/pi) PV int J(v)(n(v)+1) / (v - w) dv`.
///
/// The integrand is evaluated through the identity `J(v)(n(v)+1) =
/// (J(v) coth(v/2T) + J(v)) / 2`, which is total on the real line (finite
/// at `v = 0` for every temperature). At `w = 0` the transform reduces to
/// `-reorg/2`, independent of temperature.
pub fn lamb_shift(omega: f64, p: &ModelParams) -> Result<f64> {
    lamb_shift_with_tol(omega, p, DEFAULT_TOL)
}

/// [`lamb_shift`] with an explicit absolute tolerance on the quadrature.
pub fn lamb_shift_with_tol(omega: f64, p: &ModelParams, tol: f64) -> Result<f64> {
    p.validate()?;
    if p.lambda == 0.0 {
        return Ok(0.0);
    }
    let window = if omega == 0.0 {
        p.cutoff / 2.0
    } else {
        omega.abs().min(p.cutoff) / 2.0
    };
    let f = |v: f64| 0.5 * (spectral_coth(v, p) + spectral_density(v, p));
    quad::hilbert_pv(f, omega, window, tol).map(|r| -r.value)
}

/// The scalar coefficient set entering the moment equations, evaluated at
/// the Bohr frequency of the derivation Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathCoefficients {
    /// gamma(+wB)
    pub gamma_plus: f64,
    /// gamma(-wB)
    pub gamma_minus: f64,
    /// S(+wB)
    pub s_plus: f64,
    /// S(-wB)
    pub s_minus: f64,
    /// gamma(-wB) - gamma(wB), negative for any nonzero coupling
    pub delta: f64,
    /// -gamma(-wB) - gamma(wB), negative for any nonzero coupling
    pub sigma: f64,
    /// -S(-wB) - S(wB)
    pub sigma_prime: f64,
    /// S(-wB) - S(wB)
    pub delta_prime: f64,
    /// reorganisation shift lambda * Lambda
    pub reorg: f64,
}

impl BathCoefficients {
    /// All-zero coefficient set (decoupled system).
    pub fn zero() -> Self {
        BathCoefficients {
            gamma_plus: 0.0,
            gamma_minus: 0.0,
            s_plus: 0.0,
            s_minus: 0.0,
            delta: 0.0,
            sigma: 0.0,
            sigma_prime: 0.0,
            delta_prime: 0.0,
            reorg: 0.0,
        }
    }

    /// Copy with every Lamb-shift quantity suppressed.
    pub fn without_lamb_shift(&self) -> Self {
        BathCoefficients {
            s_plus: 0.0,
            s_minus: 0.0,
            sigma_prime: 0.0,
            delta_prime: 0.0,
            ..*self
        }
    }
}

/// Evaluate [`BathCoefficients`] for the Hamiltonian described by `p`.
///
/// The Bohr frequency is `sqrt(p.effective_omega_sq())`, i.e. it reflects
/// the counter-term choice of the derivation Hamiltonian.
pub fn coefficients(p: &ModelParams) -> Result<BathCoefficients> {
    coefficients_with_tol(p, DEFAULT_TOL)
}

/// [`coefficients`] with an explicit quadrature tolerance. The computed
/// `sigma_prime` is compared against its closed form as a consistency
/// check on the principal-value engine.
pub fn coefficients_with_tol(p: &ModelParams, tol: f64) -> Result<BathCoefficients> {
    p.validate()?;
    if p.lambda == 0.0 {
        return Ok(BathCoefficients::zero());
    }
    let wb = p.bohr_frequency();
    if !(wb > 0.0) {
        return Err(Error::InvalidParams(format!(
            "Bohr frequency must be positive, got squared value {}",
            p.effective_omega_sq()
        )));
    }
    let gamma_plus = decay_rate(wb, p)?;
    let gamma_minus = decay_rate(-wb, p)?;
    let s_plus = lamb_shift_with_tol(wb, p, tol)?;
    let s_minus = lamb_shift_with_tol(-wb, p, tol)?;
    let sigma_prime = -s_minus - s_plus;

    let closed = p.reorg() / (1.0 + wb * wb / (p.cutoff * p.cutoff));
    let slack = 20.0 * tol + 1e-11 * closed.abs();
    if (sigma_prime - closed).abs() > slack {
        return Err(Error::CoefficientCheck(format!(
            "sigma_prime {} deviates from closed form {} by {:.3e}",
            sigma_prime,
            closed,
            (sigma_prime - closed).abs()
        )));
    }

    Ok(BathCoefficients {
        gamma_plus,
        gamma_minus,
        s_plus,
        s_minus,
        delta: gamma_minus - gamma_plus,
        sigma: -gamma_minus - gamma_plus,
        sigma_prime,
        delta_prime: s_minus - s_plus,
        reorg: p.reorg(),
    })
}

/// Reorganisation-induced frequency shift, `lambda * Lambda` in closed
/// form for the algebraic-Ohmic bath.
pub fn reorganisation(p: &ModelParams) -> f64 {
    p.reorg()
}

/// Quadrature self-check of [`reorganisation`]: evaluates the defining
/// integral `(1/pi) PV int J(w)/w dw` directly.
pub fn reorganisation_quadrature(p: &ModelParams, tol: f64) -> Result<f64> {
    p.validate()?;
    if p.lambda == 0.0 {
        return Ok(0.0);
    }
    quad::hilbert_pv(|v| spectral_density(v, p), 0.0, p.cutoff / 2.0, tol).map(|r| r.value)
}
