//! Single-mode Gaussian states, reference steady states and the Uhlmann
//! fidelity between undisplaced states.

use crate::coth;
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Tolerance absorbed into the physicality check `det >= 1/4`.
pub const PHYSICALITY_TOL: f64 = 1e-12;

/// Symmetric 2x2 covariance matrix of (x, p) in `hbar = m = 1` units:
/// `xx = Var x`, `pp = Var p`, `xp = <{x,p}>/2 - <x><p>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance {
    pub xx: f64,
    pub xp: f64,
    pub pp: f64,
}

impl Covariance {
    pub fn det(&self) -> f64 {
        self.xx * self.pp - self.xp * self.xp
    }
}

/// A single-mode Gaussian state: mean vector and covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    /// (<x>, <p>)
    pub mean: [f64; 2],
    pub cov: Covariance,
}

impl GaussianState {
    pub fn undisplaced(xx: f64, xp: f64, pp: f64) -> Self {
        GaussianState {
            mean: [0.0, 0.0],
            cov: Covariance { xx, xp, pp },
        }
    }
}

/// Gibbs state of an oscillator with squared trap frequency `omega_sq` at
/// temperature `t`: zero mean, `<x^2> = coth(w/2T)/(2w)`,
/// `<p^2> = (w/2) coth(w/2T)`.
pub fn thermal_state(omega_sq: f64, temperature: f64) -> Result<GaussianState> {
    if !(omega_sq > 0.0) || !omega_sq.is_finite() {
        return Err(Error::Unconfined(omega_sq));
    }
    if !(temperature >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "temperature must be >= 0, got {temperature}"
        )));
    }
    let w = omega_sq.sqrt();
    let c = if temperature == 0.0 {
        1.0
    } else {
        coth(w / (2.0 * temperature))
    };
    Ok(GaussianState::undisplaced(c / (2.0 * w), 0.0, w * c / 2.0))
}

/// Thermal state of the reorganisation-renormalised potential: the
/// classical-limit mean-force state, and the asymptotic state of the
/// shifted, Lamb-shift-suppressed master equation.
///
/// Fails when the renormalisation leaves the potential unconfining.
pub fn mean_force_classical(p: &ModelParams) -> Result<GaussianState> {
    p.validate()?;
    let w2 = p.renormalised_omega_sq();
    if w2 <= 0.0 {
        return Err(Error::Unconfined(w2));
    }
    thermal_state(w2, p.temperature)
}

/// Heisenberg physicality check: covariance symmetric positive definite
/// with `det >= 1/4` (up to [`PHYSICALITY_TOL`]). Returns the verdict and
/// the margin `det - 1/4`.
pub fn is_physical(s: &GaussianState) -> (bool, f64) {
    let det = s.cov.det();
    let ok = s.cov.xx > 0.0 && det > 0.0 && det >= 0.25 - PHYSICALITY_TOL;
    (ok, det - 0.25)
}

/// Uhlmann fidelity between undisplaced single-mode Gaussian states,
/// squared-trace convention: `F = [tr sqrt(sqrt(r1) r2 sqrt(r1))]^2`.
///
/// For covariance matrices S1, S2 this is `2 / (sqrt(k + u) - sqrt(u))`
/// with `k = 4 det(S1+S2)` and `u = (4 det S1 - 1)(4 det S2 - 1)`; the
/// identity `F(a, a) = 1` pins the `k + u` combination under the root.
///
/// Displaced or unphysical inputs are rejected.
pub fn fidelity(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    for s in [a, b] {
        if s.mean[0].abs() > 1e-12 || s.mean[1].abs() > 1e-12 {
            return Err(Error::DisplacedState(s.mean[0], s.mean[1]));
        }
        let det = s.cov.det();
        if !(s.cov.xx > 0.0) || !(det > 0.0) || det < 0.25 - 1e-10 {
            return Err(Error::Unphysical(format!(
                "det = {det}, diagonal = ({}, {})",
                s.cov.xx, s.cov.pp
            )));
        }
    }
    let kappa = 4.0
        * Covariance {
            xx: a.cov.xx + b.cov.xx,
            xp: a.cov.xp + b.cov.xp,
            pp: a.cov.pp + b.cov.pp,
        }
        .det();
    let upsilon = ((4.0 * a.cov.det() - 1.0) * (4.0 * b.cov.det() - 1.0)).max(0.0);
    let f = 2.0 / ((kappa + upsilon).sqrt() - upsilon.sqrt());
    Ok(f.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_state_ground_and_hot() {
        let g = thermal_state(1.0, 0.0).unwrap();
        assert_eq!(g.cov, Covariance { xx: 0.5, xp: 0.0, pp: 0.5 });

        let hot = thermal_state(1.0, 10.0).unwrap();
        let c = 1.0 / (0.05f64).tanh();
        assert!((hot.cov.xx - c / 2.0).abs() < 1e-14);
        assert!((hot.cov.xx - 10.008_331).abs() < 1e-5);
        // equipartition bound from below
        assert!(hot.cov.xx > 10.0);

        let stiff = thermal_state(4.0, 0.0).unwrap();
        assert_eq!(stiff.cov, Covariance { xx: 0.25, xp: 0.0, pp: 1.0 });

        assert!(thermal_state(0.0, 1.0).is_err());
        assert!(thermal_state(-3.0, 1.0).is_err());
    }

    #[test]
    fn mean_force_classical_cancels_counter_term() {
        let p = ModelParams::new(1.0, 0.1, 100.0, 2.0).unwrap();
        let mf = mean_force_classical(&p).unwrap();
        let th = thermal_state(1.0, 2.0).unwrap();
        assert_eq!(mf, th);

        // no bath, no shift
        let free = ModelParams::new(1.5, 0.0, 100.0, 2.0).unwrap();
        assert_eq!(
            mean_force_classical(&free).unwrap(),
            thermal_state(2.25, 2.0).unwrap()
        );

        // bare well softened: omega0^2 - reorg = 4 - 1 = 3
        let soft = ModelParams::new(2.0, 0.1, 10.0, 5.0)
            .unwrap()
            .with_counter_term(false);
        assert_eq!(
            mean_force_classical(&soft).unwrap(),
            thermal_state(3.0, 5.0).unwrap()
        );

        // renormalisation destabilises the bare well
        let bad = ModelParams::new(1.0, 0.1, 100.0, 1.0)
            .unwrap()
            .with_counter_term(false);
        assert!(matches!(mean_force_classical(&bad), Err(Error::Unconfined(_))));
    }

    #[test]
    fn physicality_check() {
        let (ok, margin) = is_physical(&GaussianState::undisplaced(0.5, 0.0, 0.5));
        assert!(ok);
        assert!(margin.abs() < 1e-15);

        let (bad, margin) = is_physical(&GaussianState::undisplaced(0.4, 0.0, 0.4));
        assert!(!bad);
        assert!((margin - (0.16 - 0.25)).abs() < 1e-15);

        let (neg, _) = is_physical(&GaussianState::undisplaced(-1.0, 0.0, 2.0));
        assert!(!neg);
    }

    #[test]
    fn fidelity_identity_and_known_value() {
        let a = GaussianState::undisplaced(0.7, 0.1, 0.6);
        assert_eq!(fidelity(&a, &a).unwrap(), 1.0);

        // vacuum vs thermal with mean occupation 1: F = 1/(1+n) = 1/2
        let vac = GaussianState::undisplaced(0.5, 0.0, 0.5);
        let th = GaussianState::undisplaced(1.5, 0.0, 1.5);
        assert!((fidelity(&vac, &th).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fidelity_rejects_bad_inputs() {
        let ok = GaussianState::undisplaced(0.5, 0.0, 0.5);
        let displaced = GaussianState {
            mean: [0.3, 0.0],
            cov: ok.cov,
        };
        assert!(matches!(
            fidelity(&ok, &displaced),
            Err(Error::DisplacedState(_, _))
        ));
        let squeezed_too_far = GaussianState::undisplaced(0.4, 0.0, 0.4);
        assert!(matches!(
            fidelity(&ok, &squeezed_too_far),
            Err(Error::Unphysical(_))
        ));
    }

    #[test]
    fn fidelity_symmetric_and_bounded() {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut rng = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            // random physical covariances: thermal base plus correlation
            // kept inside the Heisenberg bound
            let mk = |r: &mut dyn FnMut() -> f64| {
                let xx = 0.3 + 3.0 * r();
                let pp = 0.3 + 3.0 * r();
                let cap = (xx * pp - 0.2501).max(0.0).sqrt();
                let xp = (2.0 * r() - 1.0) * cap;
                GaussianState::undisplaced(xx, xp, pp)
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            if is_physical(&a).0 && is_physical(&b).0 {
                let fab = fidelity(&a, &b).unwrap();
                let fba = fidelity(&b, &a).unwrap();
                assert_eq!(fab, fba);
                assert!(fab > 0.0 && fab <= 1.0);
            }
        }
    }

    #[test]
    fn fidelity_monotone_in_temperature_gap() {
        let grid: Vec<f64> = (0..20).map(|k| 0.1 * 10f64.powf(k as f64 / 9.5)).collect();
        let base = thermal_state(1.0, 1.0).unwrap();
        let mut last = 1.0;
        for &t in grid.iter().filter(|&&t| t >= 1.0) {
            let f = fidelity(&base, &thermal_state(1.0, t).unwrap()).unwrap();
            assert!(f <= last + 1e-12, "fidelity not decreasing at T={t}");
            last = f;
        }
        let mut last = 1.0;
        for &t in grid.iter().filter(|&&t| t <= 1.0).rev() {
            let f = fidelity(&base, &thermal_state(1.0, t).unwrap()).unwrap();
            assert!(f <= last + 1e-12, "fidelity not decreasing at T={t}");
            last = f;
        }
    }
}
