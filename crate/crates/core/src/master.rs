//! Redfield and secular-GKLS dynamics as linear ODE systems on the first
//! and second moments, their analytic fixed points, and propagation by
//! adaptive Runge-Kutta with a matrix-exponential reference path.
//!
//! The structural variants compose as follows: the counter-term flag of
//! [`ModelParams`] fixes the squared frequency `w_eff^2` fed to both the
//! commutator and the bath-coefficient evaluation; `lamb_shift = false`
//! zeroes `sigma_prime` and `delta_prime`; `secular = true` selects the
//! GKLS equations. The conventional shifted recipe is obtained by deriving
//! from [`ModelParams::shifted`] with the Lamb shift suppressed.

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector3};

use crate::bath::{self, BathCoefficients};
use crate::error::{Error, Result};
use crate::gaussian::{thermal_state, Covariance, GaussianState};
use crate::params::ModelParams;

/// Raw (non-central) first and second moments: `(<x>, <p>)` and
/// `(<x^2>, <p^2>, <{x,p}>)`. The anticommutator is carried in full, not
/// halved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState {
    pub mean: [f64; 2],
    pub second: [f64; 3],
}

impl MomentState {
    pub fn from_gaussian(g: &GaussianState) -> Self {
        let [mx, mp] = g.mean;
        MomentState {
            mean: g.mean,
            second: [
                g.cov.xx + mx * mx,
                g.cov.pp + mp * mp,
                2.0 * (g.cov.xp + mx * mp),
            ],
        }
    }

    pub fn to_gaussian(&self) -> GaussianState {
        let [mx, mp] = self.mean;
        GaussianState {
            mean: self.mean,
            cov: Covariance {
                xx: self.second[0] - mx * mx,
                pp: self.second[1] - mp * mp,
                xp: 0.5 * self.second[2] - mx * mp,
            },
        }
    }

    fn to_vec5(&self) -> [f64; 5] {
        [
            self.mean[0],
            self.mean[1],
            self.second[0],
            self.second[1],
            self.second[2],
        ]
    }

    fn from_vec5(y: &[f64; 5]) -> Self {
        MomentState {
            mean: [y[0], y[1]],
            second: [y[2], y[3], y[4]],
        }
    }
}

/// Time grid with the moments along it and a variant label.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MomentState>,
    pub label: String,
}

/// Time derivative of the moments under the non-secular Redfield
/// equation, with `omega_eff_sq` the squared frequency of the derivation
/// Hamiltonian. Suppressing the Lamb shift is expressed by passing
/// coefficients with `sigma_prime = delta_prime = 0`.
pub fn redfield_rhs(s: &MomentState, c: &BathCoefficients, omega_eff_sq: f64) -> MomentState {
    let w2 = omega_eff_sq;
    let w = w2.sqrt();
    let spring = w2 - c.sigma_prime;
    let [x, p] = s.mean;
    let [xx, pp, xpa] = s.second;
    MomentState {
        mean: [p, -spring * x + 0.5 * c.delta / w * p],
        second: [
            xpa,
            c.delta / w * pp - spring * xpa - 0.5 * c.sigma,
            -2.0 * spring * xx + 2.0 * pp + 0.5 * c.delta / w * xpa - c.delta_prime / w,
        ],
    }
}

/// Time derivative of the moments under the secular GKLS equation.
/// `delta_prime` does not enter; `lamb_shift = false` additionally zeroes
/// `sigma_prime`.
pub fn gkls_rhs(s: &MomentState, c: &BathCoefficients, omega_eff_sq: f64) -> MomentState {
    let w2 = omega_eff_sq;
    let w = w2.sqrt();
    let a = w2 - 0.5 * c.sigma_prime;
    let [x, p] = s.mean;
    let [xx, pp, xpa] = s.second;
    MomentState {
        mean: [
            0.25 * c.delta / w * x + a / w2 * p,
            -a * x + 0.25 * c.delta / w * p,
        ],
        second: [
            0.5 * c.delta / w * xx + a / w2 * xpa - 0.25 * c.sigma / w2,
            0.5 * c.delta / w * pp - a * xpa - 0.25 * c.sigma,
            -(2.0 * w2 - c.sigma_prime) * xx + 2.0 * a / w2 * pp + 0.5 * c.delta / w * xpa,
        ],
    }
}

/// Constant-coefficient generator of the selected moment equations.
#[derive(Debug, Clone)]
pub struct Generator {
    coeffs: BathCoefficients,
    omega_eff_sq: f64,
    secular: bool,
}

impl Generator {
    pub fn new(coeffs: BathCoefficients, omega_eff_sq: f64, secular: bool) -> Result<Self> {
        if !(omega_eff_sq > 0.0) || !omega_eff_sq.is_finite() {
            return Err(Error::InvalidParams(format!(
                "Bohr frequency must be positive: omega_eff_sq = {omega_eff_sq}"
            )));
        }
        Ok(Generator {
            coeffs,
            omega_eff_sq,
            secular,
        })
    }

    pub fn rhs(&self, s: &MomentState) -> MomentState {
        if self.secular {
            gkls_rhs(s, &self.coeffs, self.omega_eff_sq)
        } else {
            redfield_rhs(s, &self.coeffs, self.omega_eff_sq)
        }
    }

    /// 2x2 linear map of the first moments.
    fn mean_matrix(&self) -> Matrix2<f64> {
        let c = &self.coeffs;
        let w2 = self.omega_eff_sq;
        let w = w2.sqrt();
        if self.secular {
            let a = w2 - 0.5 * c.sigma_prime;
            Matrix2::new(0.25 * c.delta / w, a / w2, -a, 0.25 * c.delta / w)
        } else {
            Matrix2::new(0.0, 1.0, -(w2 - c.sigma_prime), 0.5 * c.delta / w)
        }
    }

    /// 3x3 linear map and constant drive of the second moments, ordered
    /// (<x^2>, <p^2>, <{x,p}>).
    fn second_matrix(&self) -> (Matrix3<f64>, Vector3<f64>) {
        let c = &self.coeffs;
        let w2 = self.omega_eff_sq;
        let w = w2.sqrt();
        if self.secular {
            let a = w2 - 0.5 * c.sigma_prime;
            (
                Matrix3::new(
                    0.5 * c.delta / w,
                    0.0,
                    a / w2,
                    0.0,
                    0.5 * c.delta / w,
                    -a,
                    -(2.0 * w2 - c.sigma_prime),
                    2.0 * a / w2,
                    0.5 * c.delta / w,
                ),
                Vector3::new(-0.25 * c.sigma / w2, -0.25 * c.sigma, 0.0),
            )
        } else {
            let spring = w2 - c.sigma_prime;
            (
                Matrix3::new(
                    0.0,
                    0.0,
                    1.0,
                    0.0,
                    c.delta / w,
                    -spring,
                    -2.0 * spring,
                    2.0,
                    0.5 * c.delta / w,
                ),
                Vector3::new(0.0, -0.5 * c.sigma, -c.delta_prime / w),
            )
        }
    }

    /// Hurwitz check on both moment blocks, in closed form.
    ///
    /// The secular generator has eigenvalues `delta/2w` and
    /// `delta/2w +- 2i|w^2 - sigma_prime/2|/w`, so damping alone decides.
    /// The non-secular blocks are Hurwitz iff `delta < 0` and the
    /// effective potential `w^2 - sigma_prime` stays confining
    /// (Routh-Hurwitz on their characteristic cubics; the remaining
    /// condition holds automatically).
    pub fn is_stable(&self) -> bool {
        let damped = self.coeffs.delta < 0.0;
        if self.secular {
            damped
        } else {
            damped && self.omega_eff_sq > self.coeffs.sigma_prime
        }
    }

    /// Analytic fixed point of the second moments (first moments vanish).
    ///
    /// Non-secular: `<p^2> = w sigma / (2 delta)`, `<x^2> = (2 <p^2> -
    /// delta_prime / w) / (2 (w^2 - sigma_prime))`. Secular: thermal
    /// moments `<x^2> = <p^2> / w^2` independent of the Lamb shift.
    pub fn steady(&self) -> Result<MomentState> {
        let c = &self.coeffs;
        let w2 = self.omega_eff_sq;
        let w = w2.sqrt();
        if c.delta == 0.0 {
            return Err(Error::Unstable(
                "zero coupling has no relaxing fixed point".into(),
            ));
        }
        let pp = 0.5 * w * c.sigma / c.delta;
        let xx = if self.secular {
            pp / w2
        } else {
            let spring = w2 - c.sigma_prime;
            if spring <= 0.0 {
                return Err(Error::Unstable(format!(
                    "effective potential inverted: omega_eff_sq - sigma_prime = {spring}"
                )));
            }
            (2.0 * pp - c.delta_prime / w) / (2.0 * spring)
        };
        if !self.is_stable() {
            return Err(Error::Unstable(
                "moment generator has eigenvalues outside the left half-plane".into(),
            ));
        }
        Ok(MomentState {
            mean: [0.0, 0.0],
            second: [xx, pp, 0.0],
        })
    }

    /// Exact propagation over `dt` through matrix exponentials; the
    /// second-moment drive is folded in by augmenting to 4x4.
    fn step_matrices(&self, dt: f64) -> (Matrix2<f64>, Matrix4<f64>) {
        let e2 = (self.mean_matrix() * dt).exp();
        let (a3, b3) = self.second_matrix();
        let mut aug = Matrix4::zeros();
        aug.fixed_view_mut::<3, 3>(0, 0).copy_from(&a3);
        aug.fixed_view_mut::<3, 1>(0, 3).copy_from(&b3);
        let e4 = (aug * dt).exp();
        (e2, e4)
    }
}

/// Bath coefficients for the master equation described by `p`, with the
/// Lamb-shift terms suppressed when `p.lamb_shift` is false.
pub fn effective_coefficients(p: &ModelParams) -> Result<BathCoefficients> {
    let c = bath::coefficients(p)?;
    Ok(if p.lamb_shift {
        c
    } else {
        c.without_lamb_shift()
    })
}

fn generator(p: &ModelParams) -> Result<Generator> {
    Generator::new(effective_coefficients(p)?, p.effective_omega_sq(), p.secular)
}

/// Asymptotic Gaussian state of the master equation selected by `p`.
///
/// At zero coupling every thermal state is stationary; the local Gibbs
/// state is returned as the zero-coupling limit.
pub fn steady_state(p: &ModelParams) -> Result<GaussianState> {
    p.validate()?;
    if p.lambda == 0.0 {
        return thermal_state(p.effective_omega_sq(), p.temperature);
    }
    Ok(generator(p)?.steady()?.to_gaussian())
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid[0] != 0.0 {
        return Err(Error::InvalidParams(
            "time grid must start at t = 0".into(),
        ));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Integrate the selected moment equations from `initial` over `t_grid`
/// with the default tolerances (relative 1e-9, absolute 1e-12).
pub fn evolve(p: &ModelParams, initial: &GaussianState, t_grid: &[f64]) -> Result<Trajectory> {
    evolve_with_tol(p, initial, t_grid, 1e-9, 1e-12)
}

/// [`evolve`] with explicit integrator tolerances.
pub fn evolve_with_tol(
    p: &ModelParams,
    initial: &GaussianState,
    t_grid: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Trajectory> {
    p.validate()?;
    check_grid(t_grid)?;
    let gen = generator(p)?;
    let y0 = MomentState::from_gaussian(initial).to_vec5();
    let rhs = |y: &[f64; 5]| gen.rhs(&MomentState::from_vec5(y)).to_vec5();
    let ys = dopri5(rhs, y0, t_grid, rtol, atol)?;
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states: ys.iter().map(MomentState::from_vec5).collect(),
        label: if p.secular { "gkls" } else { "redfield" }.into(),
    })
}

/// Closed-form propagation of the same linear system through matrix
/// exponentials; exact up to the exponential evaluation and used as the
/// oracle for [`evolve`].
pub fn evolve_expm(p: &ModelParams, initial: &GaussianState, t_grid: &[f64]) -> Result<Trajectory> {
    p.validate()?;
    check_grid(t_grid)?;
    let gen = generator(p)?;
    let mut states = Vec::with_capacity(t_grid.len());
    let mut current = MomentState::from_gaussian(initial);
    states.push(current);
    for w in t_grid.windows(2) {
        let dt = w[1] - w[0];
        let (e2, e4) = gen.step_matrices(dt);
        let m = e2 * nalgebra::Vector2::new(current.mean[0], current.mean[1]);
        let aug = nalgebra::Vector4::new(
            current.second[0],
            current.second[1],
            current.second[2],
            1.0,
        );
        let s = e4 * aug;
        current = MomentState {
            mean: [m[0], m[1]],
            second: [s[0], s[1], s[2]],
        };
        states.push(current);
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        label: if p.secular { "gkls" } else { "redfield" }.into(),
    })
}

/// Dormand-Prince 5(4) with PI-free step control, stepping exactly onto
/// every grid point.
fn dopri5<F: Fn(&[f64; 5]) -> [f64; 5]>(
    f: F,
    y0: [f64; 5],
    t_grid: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Vec<[f64; 5]>> {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    // difference between the 5th- and 4th-order weights
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];

    let axpy = |y: &[f64; 5], ks: &[[f64; 5]], coef: &[f64], h: f64| {
        let mut out = *y;
        for (k, c) in ks.iter().zip(coef) {
            if *c != 0.0 {
                for i in 0..5 {
                    out[i] += h * c * k[i];
                }
            }
        }
        out
    };

    let mut out = Vec::with_capacity(t_grid.len());
    let mut y = y0;
    out.push(y);
    let mut k1 = f(&y);
    let mut t = t_grid[0];
    let mut h: f64 = 1e-4;
    let mut steps = 0usize;
    const MAX_STEPS: usize = 50_000_000;

    for &t_target in &t_grid[1..] {
        while t < t_target {
            let h_step = h.min(t_target - t);
            let k2 = f(&axpy(&y, &[k1], &A[0][..1], h_step));
            let k3 = f(&axpy(&y, &[k1, k2], &A[1][..2], h_step));
            let k4 = f(&axpy(&y, &[k1, k2, k3], &A[2][..3], h_step));
            let k5 = f(&axpy(&y, &[k1, k2, k3, k4], &A[3][..4], h_step));
            let k6 = f(&axpy(&y, &[k1, k2, k3, k4, k5], &A[4][..5], h_step));
            let y_new = axpy(&y, &[k1, k2, k3, k4, k5, k6], &A[5][..6], h_step);
            let k7 = f(&y_new);

            let ks = [k1, k2, k3, k4, k5, k6, k7];
            let mut err_sq = 0.0;
            for i in 0..5 {
                let mut e = 0.0;
                for (k, c) in ks.iter().zip(&E) {
                    e += c * k[i];
                }
                e *= h_step;
                let scale = atol + rtol * y[i].abs().max(y_new[i].abs());
                err_sq += (e / scale) * (e / scale);
            }
            let err = (err_sq / 5.0).sqrt();

            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::Integration {
                    t,
                    reason: "step budget exhausted".into(),
                });
            }

            // error-per-unit-step acceptance: local error <= tol * h, so
            // the accumulated error over [0, T] stays of order tol * T
            let bound = h_step.min(1.0);
            if err <= bound {
                t += h_step;
                y = y_new;
                k1 = k7;
                let grow = if err == 0.0 {
                    2.0
                } else {
                    (0.85 * (bound / err).powf(0.25)).clamp(0.2, 2.0)
                };
                h = h_step * grow;
            } else {
                h = h_step * (0.85 * (bound / err).powf(0.25)).clamp(0.2, 1.0);
                if !(h > 0.0) || t + h == t {
                    return Err(Error::Integration {
                        t,
                        reason: "step size underflow".into(),
                    });
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}
