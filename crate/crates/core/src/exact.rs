//! Exact Gaussian dynamics of the damped oscillator from the quantum
//! Langevin equation: characteristic roots of the retarded propagator,
//! closed-form `G(t)`, frequency-resolved transient covariances, and the
//! steady-state quadratures.
//!
//! The retarded kernel is `g_hat(s) = 1 / (s^2 + w_eff^2 - chi_hat(s))`
//! with the memory kernel `chi_hat(s) = lambda Lambda^2 / (s + Lambda)`.
//! Clearing denominators gives the cubic
//! `(s^2 + w_eff^2)(s + Lambda) - lambda Lambda^2`, whose roots and
//! partial-fraction residues make every inverse Laplace transform an
//! explicit exponential sum. Stability is equivalent to
//! `w_eff^2 > lambda Lambda`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bath;
use crate::error::{Error, Result};
use crate::gaussian::{thermal_state, GaussianState};
use crate::master::{MomentState, Trajectory};
use crate::params::ModelParams;
use crate::quad;
use crate::DEFAULT_TOL;

/// Relative root separation below which the construction errors out.
const DEGENERATE_SEP: f64 = 1e-9;
/// Relative root separation below which the exponential sums switch to
/// the divided-difference form.
const CLUSTERED_SEP: f64 = 1e-6;

/// Characteristic roots and partial-fraction residues of the retarded
/// propagator kernel.
#[derive(Debug, Clone)]
pub struct Propagator {
    /// Zeros of `(s^2 + w_eff^2)(s + Lambda) - lambda Lambda^2`, sorted by
    /// real part then imaginary part.
    pub roots: [Complex64; 3],
    /// Residues `c_k = (s_k + Lambda) / prod_{j != k} (s_k - s_j)`.
    pub residues: [Complex64; 3],
    pub omega_eff_sq: f64,
    pub lambda: f64,
    pub cutoff: f64,
    clustered: bool,
}

/// Roots of the monic cubic `s^3 + a2 s^2 + a1 s + a0` by the
/// depressed-cubic closed form, polished with two Newton steps.
fn cubic_roots(a2: f64, a1: f64, a0: f64) -> [Complex64; 3] {
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    let shift = -a2 / 3.0;
    let disc = 0.25 * q * q + p * p * p / 27.0;

    let mut roots = if disc > 0.0 {
        // one real root plus a conjugate pair
        let sq = disc.sqrt();
        let u = if q >= 0.0 { -0.5 * q - sq } else { -0.5 * q + sq };
        let y = if u == 0.0 {
            0.0
        } else {
            let cb = u.cbrt();
            cb - p / (3.0 * cb)
        };
        let r = y + shift;
        // deflate and solve the quadratic factor
        let b = a2 + r;
        let c = a1 + r * b;
        let d2 = b * b - 4.0 * c;
        let re = -0.5 * b;
        let im = 0.5 * (-d2).max(0.0).sqrt();
        [
            Complex64::new(r, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    } else {
        // three real roots, trigonometric form
        let m = 2.0 * (-p / 3.0).max(0.0).sqrt();
        let arg = if p == 0.0 {
            0.0
        } else {
            (3.0 * q / (p * m)).clamp(-1.0, 1.0)
        };
        let theta = arg.acos() / 3.0;
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (k, slot) in out.iter_mut().enumerate() {
            let y = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
            *slot = Complex64::new(y + shift, 0.0);
        }
        out
    };

    // Newton polish on the original cubic
    let f = |s: Complex64| ((s + a2) * s + a1) * s + a0;
    let df = |s: Complex64| (3.0 * s + 2.0 * a2) * s + a1;
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let d = df(*r);
            if d.norm() > 0.0 {
                *r -= f(*r) / d;
            }
        }
    }
    // real coefficients: keep the complex pair exactly conjugate
    if roots[1].im != 0.0 {
        roots[2] = roots[1].conj();
    }
    // the +0.0 washes out negative zeros before ordering
    roots.sort_by(|x, y| {
        (x.re + 0.0)
            .total_cmp(&(y.re + 0.0))
            .then((x.im + 0.0).total_cmp(&(y.im + 0.0)))
    });
    roots
}

/// Build the propagator for the given squared trap frequency and bath.
///
/// Fails on invalid bath parameters or when two characteristic roots
/// coincide to within relative separation 1e-9 (a measure-zero parameter
/// set; perturbing `lambda` by one part in 1e9 resolves it).
pub fn characteristic_roots(omega_eff_sq: f64, lambda: f64, cutoff: f64) -> Result<Propagator> {
    if !(cutoff > 0.0) || !(lambda >= 0.0) || !omega_eff_sq.is_finite() {
        return Err(Error::InvalidParams(format!(
            "need cutoff > 0 and lambda >= 0, got lambda={lambda}, cutoff={cutoff}"
        )));
    }
    let a2 = cutoff;
    let a1 = omega_eff_sq;
    let a0 = cutoff * (omega_eff_sq - lambda * cutoff);
    let roots = cubic_roots(a2, a1, a0);

    let scale = roots.iter().map(|r| r.norm()).fold(1.0f64, f64::max);
    let mut min_sep = f64::INFINITY;
    for i in 0..3 {
        for j in (i + 1)..3 {
            min_sep = min_sep.min((roots[i] - roots[j]).norm());
        }
    }
    if min_sep < DEGENERATE_SEP * scale {
        return Err(Error::DegenerateRoots(min_sep));
    }
    let clustered = min_sep < CLUSTERED_SEP * scale;

    let mut residues = [Complex64::new(0.0, 0.0); 3];
    for k in 0..3 {
        let mut denom = Complex64::new(1.0, 0.0);
        for j in 0..3 {
            if j != k {
                denom *= roots[k] - roots[j];
            }
        }
        residues[k] = (roots[k] + cutoff) / denom;
    }

    // partial-fraction identities (g(0) = 0, g'(0) = 1); for clustered
    // roots the residues are individually huge and evaluation goes
    // through divided differences instead, so the cancellation test is
    // meaningless there
    if !clustered {
        let c_scale = residues.iter().map(|c| c.norm()).fold(1.0f64, f64::max);
        let cs_scale = residues
            .iter()
            .zip(&roots)
            .map(|(c, s)| (c * s).norm())
            .fold(1.0f64, f64::max);
        let sum_c: Complex64 = residues.iter().sum();
        let sum_cs: Complex64 = residues.iter().zip(&roots).map(|(c, s)| c * s).sum();
        if sum_c.norm() > 1e-10 * c_scale
            || (sum_cs - Complex64::new(1.0, 0.0)).norm() > 1e-10 * cs_scale
        {
            return Err(Error::DegenerateRoots(min_sep));
        }
    }

    Ok(Propagator {
        roots,
        residues,
        omega_eff_sq,
        lambda,
        cutoff,
        clustered,
    })
}

/// Propagator for the physical Hamiltonian described by `p`.
pub fn propagator(p: &ModelParams) -> Result<Propagator> {
    p.validate()?;
    characteristic_roots(p.effective_omega_sq(), p.lambda, p.cutoff)
}

/// Second divided difference of `f` over three nodes, replacing first
/// differences of nearly coincident nodes by the midpoint derivative.
fn divided_diff2(
    nodes: [Complex64; 3],
    f: impl Fn(Complex64) -> Complex64,
    df: impl Fn(Complex64) -> Complex64,
    delta: f64,
) -> Complex64 {
    // order so the closest pair is adjacent
    let sep = |i: usize, j: usize| (nodes[i] - nodes[j]).norm();
    let order: [usize; 3] = if sep(0, 1) <= sep(0, 2) && sep(0, 1) <= sep(1, 2) {
        [2, 0, 1]
    } else if sep(1, 2) <= sep(0, 2) {
        [0, 1, 2]
    } else {
        [1, 0, 2]
    };
    let x = [nodes[order[0]], nodes[order[1]], nodes[order[2]]];
    let d01 = if (x[1] - x[0]).norm() < delta {
        df(0.5 * (x[0] + x[1]))
    } else {
        (f(x[1]) - f(x[0])) / (x[1] - x[0])
    };
    let d12 = if (x[2] - x[1]).norm() < delta {
        df(0.5 * (x[1] + x[2]))
    } else {
        (f(x[2]) - f(x[1])) / (x[2] - x[1])
    };
    (d12 - d01) / (x[2] - x[0])
}

impl Propagator {
    /// All characteristic roots strictly in the open left half-plane.
    pub fn is_stable(&self) -> bool {
        self.roots.iter().all(|r| r.re < 0.0)
    }

    /// Slowest decay rate `min_k |Re s_k|`.
    pub fn slowest_rate(&self) -> f64 {
        self.roots.iter().map(|r| r.re.abs()).fold(f64::INFINITY, f64::min)
    }

    /// `(g(t), g'(t))`: the inverse transform of the kernel and its
    /// derivative, satisfying `g(0) = 0`, `g'(0) = 1`.
    pub fn g(&self, t: f64) -> (f64, f64) {
        let m = self.fundamental(t);
        (m[0], m[1])
    }

    /// `[g, g', g'']` at time `t`.
    fn fundamental(&self, t: f64) -> [f64; 3] {
        if self.clustered {
            let lam = self.cutoff;
            let scale = self.roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
            let delta = CLUSTERED_SEP * scale;
            let e = |s: Complex64| (s * t).exp();
            let g = divided_diff2(
                self.roots,
                |s| (s + lam) * e(s),
                |s| e(s) * (Complex64::new(1.0, 0.0) + t * (s + lam)),
                delta,
            );
            let gp = divided_diff2(
                self.roots,
                |s| s * (s + lam) * e(s),
                |s| e(s) * (2.0 * s + lam + t * s * (s + lam)),
                delta,
            );
            let gpp = divided_diff2(
                self.roots,
                |s| s * s * (s + lam) * e(s),
                |s| e(s) * (3.0 * s * s + 2.0 * lam * s + t * s * s * (s + lam)),
                delta,
            );
            [g.re, gp.re, gpp.re]
        } else {
            let mut acc = [Complex64::new(0.0, 0.0); 3];
            for (c, s) in self.residues.iter().zip(&self.roots) {
                let e = c * (s * t).exp();
                acc[0] += e;
                acc[1] += e * s;
                acc[2] += e * s * s;
            }
            [acc[0].re, acc[1].re, acc[2].re]
        }
    }

    /// Full propagator matrix `G(t) = [[g', g], [g'', g']]`.
    pub fn matrix(&self, t: f64) -> [[f64; 2]; 2] {
        let m = self.fundamental(t);
        [[m[1], m[0]], [m[2], m[1]]]
    }

    /// `g_hat(i w)` evaluated directly from the kernel.
    pub fn g_hat(&self, omega: f64) -> Complex64 {
        let chi = self.lambda * self.cutoff * self.cutoff
            / Complex64::new(self.cutoff, omega);
        1.0 / (Complex64::new(self.omega_eff_sq - omega * omega, 0.0) - chi)
    }

    /// `g_hat(i w)` through the residue sum, as a cross-check of the
    /// partial-fraction decomposition.
    pub fn g_hat_residues(&self, omega: f64) -> Complex64 {
        let iw = Complex64::new(0.0, omega);
        self.residues
            .iter()
            .zip(&self.roots)
            .map(|(c, s)| c / (iw - s))
            .sum()
    }
}

/// Symmetrised bath noise weight `nu(w) = (2/pi) J(w) coth(w/2T)`, with
/// its finite limit `4 lambda T / pi` at zero frequency.
#[derive(Debug, Clone)]
pub struct NoiseSpectrum {
    params: ModelParams,
}

impl NoiseSpectrum {
    pub fn new(p: &ModelParams) -> Self {
        NoiseSpectrum { params: p.clone() }
    }

    pub fn value(&self, omega: f64) -> f64 {
        std::f64::consts::FRAC_2_PI * bath::spectral_coth(omega, &self.params)
    }
}

/// Quadrature breakpoints concentrating panels on the damped resonance.
fn resonance_seeds(prop: &Propagator, p: &ModelParams, w_max: f64) -> Vec<f64> {
    let mut wr2 = prop.omega_eff_sq;
    for _ in 0..40 {
        let sigma = p.lambda * p.cutoff.powi(3) / (p.cutoff * p.cutoff + wr2);
        wr2 = prop.omega_eff_sq - sigma;
        if !(wr2 > 0.0) {
            wr2 = prop.omega_eff_sq;
            break;
        }
    }
    let wr = wr2.sqrt();
    let width = (bath::spectral_density(wr, p).abs() / wr).max(1e-9 * wr);
    let mut pts = vec![
        0.0,
        wr - 30.0 * width,
        wr - 3.0 * width,
        wr,
        wr + 3.0 * width,
        wr + 30.0 * width,
        2.0 * wr,
        p.cutoff,
        w_max,
    ];
    pts.retain(|&x| (0.0..=w_max).contains(&x));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * w_max);
    if pts.first() != Some(&0.0) {
        pts.insert(0, 0.0);
    }
    if *pts.last().unwrap() < w_max {
        pts.push(w_max);
    }
    pts
}

fn quadrature_cutoff(p: &ModelParams) -> f64 {
    10.0 * p
        .effective_omega_sq()
        .sqrt()
        .max(p.cutoff)
        .max(p.temperature)
}

/// Steady-state covariances of the exact dynamics:
/// `<x^2> = (1/2) int |g_hat(iw)|^2 nu(w) dw`, `<p^2>` with an extra
/// `w^2`, vanishing cross covariance and zero mean. This is the exact
/// mean-force equilibrium state of the oscillator.
///
/// At zero coupling the (marginal) limit value, the local thermal state,
/// is returned.
pub fn steady_covariance(p: &ModelParams) -> Result<GaussianState> {
    steady_covariance_with_tol(p, DEFAULT_TOL)
}

/// [`steady_covariance`] with an explicit absolute quadrature tolerance.
pub fn steady_covariance_with_tol(p: &ModelParams, tol: f64) -> Result<GaussianState> {
    p.validate()?;
    if p.lambda == 0.0 {
        return thermal_state(p.effective_omega_sq(), p.temperature);
    }
    if !p.is_exact_stable() {
        return Err(Error::Unstable(format!(
            "exact dynamics unstable: omega_eff_sq = {} <= reorg = {}",
            p.effective_omega_sq(),
            p.reorg()
        )));
    }
    let prop = propagator(p)?;
    steady_covariance_from(&prop, p, tol, quadrature_cutoff(p))
}

/// Internal: steady covariances with explicit cutoff (the tail beyond it
/// is integrated exactly through the inverse-coordinate transform).
fn steady_covariance_from(
    prop: &Propagator,
    p: &ModelParams,
    tol: f64,
    w_max: f64,
) -> Result<GaussianState> {
    // Below machine-resolvable linewidths the damped resonance acts as a
    // delta weight and the state is thermal to O(width/frequency).
    let wr = prop.slowest_rate().max(0.0);
    let w_res = p.effective_omega_sq().sqrt();
    if wr <= 1e-12 * w_res {
        return thermal_state(p.effective_omega_sq(), p.temperature);
    }
    let nu = NoiseSpectrum::new(p);
    let integrand = |w: f64| {
        let a = 0.5 * prop.g_hat(w).norm_sqr() * nu.value(w);
        [a, w * w * a, 0.0]
    };
    let seeds = resonance_seeds(prop, p, w_max);
    let main = quad::integrate3(integrand, &seeds, 0.5 * tol, 60_000)?;
    let tail = quad::integrate3_upper_tail(integrand, w_max, 0.25 * tol, 20_000)?;
    Ok(GaussianState::undisplaced(
        main[0].value + tail[0].value,
        0.0,
        main[1].value + tail[1].value,
    ))
}

/// Memory-integral integrand machinery for one time point.
struct MemoryIntegrand<'a> {
    prop: &'a Propagator,
    nu: &'a NoiseSpectrum,
    t: f64,
    /// residues scaled by the decayed exponentials `c_k exp(s_k t)`
    decayed: [Complex64; 3],
}

impl<'a> MemoryIntegrand<'a> {
    fn new(prop: &'a Propagator, nu: &'a NoiseSpectrum, t: f64) -> Self {
        let mut decayed = [Complex64::new(0.0, 0.0); 3];
        for k in 0..3 {
            decayed[k] = prop.residues[k] * (prop.roots[k] * t).exp();
        }
        MemoryIntegrand {
            prop,
            nu,
            t,
            decayed,
        }
    }

    /// (h_inf, r, hp_inf, rp) with `h = h_inf + e^{iwt} r` and
    /// `h_p = hp_inf + e^{iwt} rp`.
    fn parts(&self, w: f64) -> (Complex64, Complex64, Complex64, Complex64) {
        let iw = Complex64::new(0.0, w);
        let mut h_inf = Complex64::new(0.0, 0.0);
        let mut r = Complex64::new(0.0, 0.0);
        let mut hp_inf = Complex64::new(0.0, 0.0);
        let mut rp = Complex64::new(0.0, 0.0);
        for k in 0..3 {
            let d = self.prop.roots[k] + iw;
            let c_over = self.prop.residues[k] / d;
            let e_over = self.decayed[k] / d;
            h_inf -= c_over;
            r += e_over;
            hp_inf -= c_over * self.prop.roots[k];
            rp += e_over * self.prop.roots[k];
        }
        (h_inf, r, hp_inf, rp)
    }

    /// Full integrand `nu(w) * (sigma_xx, sigma_pp, sigma_xp)(t, w)` with
    /// the cross covariance in the half-anticommutator convention.
    fn full(&self, w: f64) -> [f64; 3] {
        let (h_inf, r, hp_inf, rp) = self.parts(w);
        let phase = Complex64::new(0.0, w * self.t).exp();
        let h = h_inf + phase * r;
        let hp = hp_inf + phase * rp;
        let n = self.nu.value(w);
        [
            0.5 * n * h.norm_sqr(),
            0.5 * n * hp.norm_sqr(),
            0.5 * n * (h.conj() * hp).re,
        ]
    }

    /// Phase-free part of the integrand, valid for the infinite tail.
    fn non_oscillatory(&self, w: f64) -> [f64; 3] {
        let (h_inf, r, hp_inf, rp) = self.parts(w);
        let n = self.nu.value(w);
        [
            0.5 * n * (h_inf.norm_sqr() + r.norm_sqr()),
            0.5 * n * (hp_inf.norm_sqr() + rp.norm_sqr()),
            0.5 * n * (h_inf.conj() * hp_inf + r.conj() * rp).re,
        ]
    }

    /// Complex amplitudes `q(w)` of the oscillatory remainder
    /// `Re[q(w) e^{iwt}]` per component.
    fn oscillatory_amplitude(&self, w: f64) -> [Complex64; 3] {
        let (h_inf, r, hp_inf, rp) = self.parts(w);
        let n = self.nu.value(w);
        [
            n * h_inf.conj() * r,
            n * hp_inf.conj() * rp,
            0.5 * n * (h_inf.conj() * rp + r * hp_inf.conj()),
        ]
    }
}

/// Transient covariance dynamics for a factorised initial preparation:
/// `Sigma(t) = G(t) Sigma(0) G(t)^T + Sigma_mi(t)` with the memory
/// integral evaluated in its frequency-resolved form, and first moments
/// propagated by `G(t)`. The grid must start at 0.
pub fn transient_covariance(
    p: &ModelParams,
    initial: &GaussianState,
    t_grid: &[f64],
) -> Result<Trajectory> {
    transient_covariance_with_tol(p, initial, t_grid, 1e-6, false)
}

/// [`transient_covariance`] with explicit absolute tolerance for the
/// frequency quadrature; `allow_unstable` permits finite-time evolution
/// of unstable (but non-marginal) models.
pub fn transient_covariance_with_tol(
    p: &ModelParams,
    initial: &GaussianState,
    t_grid: &[f64],
    tol: f64,
    allow_unstable: bool,
) -> Result<Trajectory> {
    p.validate()?;
    if t_grid.is_empty() || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(
            "time grid must start at 0 and increase strictly".into(),
        ));
    }

    // Zero coupling: pure rotation of the initial covariance.
    if p.lambda == 0.0 {
        let prop = propagator(p)?;
        let states = t_grid
            .iter()
            .map(|&t| propagate_free(&prop, initial, t))
            .collect();
        return Ok(Trajectory {
            times: t_grid.to_vec(),
            states,
            label: "exact".into(),
        });
    }

    let prop = propagator(p)?;
    if !allow_unstable && !prop.is_stable() {
        return Err(Error::Unstable(format!(
            "exact dynamics unstable: omega_eff_sq = {} <= reorg = {}",
            p.effective_omega_sq(),
            p.reorg()
        )));
    }
    let scale = prop.roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    if prop.slowest_rate() < 1e-12 * scale {
        return Err(Error::Unstable(
            "marginal characteristic root on the imaginary axis".into(),
        ));
    }

    let nu = NoiseSpectrum::new(p);
    let w_max = quadrature_cutoff(p);
    let seeds = resonance_seeds(&prop, p, w_max);

    let states: Result<Vec<MomentState>> = t_grid
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(MomentState::from_gaussian(initial));
            }
            let free = propagate_free(&prop, initial, t);
            let mi = memory_integral(&prop, &nu, t, &seeds, w_max, tol)?;
            Ok(MomentState {
                mean: free.mean,
                second: [
                    free.second[0] + mi[0],
                    free.second[1] + mi[1],
                    free.second[2] + 2.0 * mi[2],
                ],
            })
        })
        .collect();

    Ok(Trajectory {
        times: t_grid.to_vec(),
        states: states?,
        label: "exact".into(),
    })
}

/// `G(t) Sigma(0) G(t)^T` and `G(t) mean(0)` as raw moments.
fn propagate_free(prop: &Propagator, initial: &GaussianState, t: f64) -> MomentState {
    let g = prop.matrix(t);
    let m = [
        g[0][0] * initial.mean[0] + g[0][1] * initial.mean[1],
        g[1][0] * initial.mean[0] + g[1][1] * initial.mean[1],
    ];
    let c = initial.cov;
    let xx = g[0][0] * g[0][0] * c.xx + 2.0 * g[0][0] * g[0][1] * c.xp + g[0][1] * g[0][1] * c.pp;
    let pp = g[1][0] * g[1][0] * c.xx + 2.0 * g[1][0] * g[1][1] * c.xp + g[1][1] * g[1][1] * c.pp;
    let xp = g[0][0] * g[1][0] * c.xx
        + (g[0][0] * g[1][1] + g[0][1] * g[1][0]) * c.xp
        + g[0][1] * g[1][1] * c.pp;
    MomentState {
        mean: m,
        second: [xx + m[0] * m[0], pp + m[1] * m[1], 2.0 * (xp + m[0] * m[1])],
    }
}

/// Frequency-resolved memory integral `(xx, pp, xp)` at one time point,
/// with the cross term in the half-anticommutator convention.
///
/// The integrand oscillates as `e^{iwt}`; on `[0, w_max]` it is resolved
/// adaptively. Beyond the cutoff the phase-free part is integrated
/// exactly through the inverse-coordinate transform while the oscillatory
/// remainder is reduced by two integrations by parts, leaving a residual
/// of order `|q'(w_max)| / t^2`.
fn memory_integral(
    prop: &Propagator,
    nu: &NoiseSpectrum,
    t: f64,
    seeds: &[f64],
    w_max: f64,
    tol: f64,
) -> Result<[f64; 3]> {
    let mi = MemoryIntegrand::new(prop, nu, t);
    let main = quad::integrate3(|w| mi.full(w), seeds, 0.6 * tol, 400_000)?;

    let mut out = [main[0].value, main[1].value, main[2].value];

    if t * w_max < 50.0 {
        // phase barely winds over the tail; map it whole
        let tail = quad::integrate3_upper_tail(|w| mi.full(w), w_max, 0.4 * tol, 40_000)?;
        for c in 0..3 {
            out[c] += tail[c].value;
        }
    } else {
        let tail = quad::integrate3_upper_tail(|w| mi.non_oscillatory(w), w_max, 0.4 * tol, 40_000)?;
        for c in 0..3 {
            out[c] += tail[c].value;
        }
        // boundary terms of the oscillatory remainder:
        // int_W^inf Re[q e^{iwt}] ~ Re[e^{iWt} (i q(W)/t - q'(W)/t^2)]
        let q = mi.oscillatory_amplitude(w_max);
        let dw = 1e-4 * w_max;
        let q_hi = mi.oscillatory_amplitude(w_max + dw);
        let q_lo = mi.oscillatory_amplitude(w_max - dw);
        let phase = Complex64::new(0.0, w_max * t).exp();
        for c in 0..3 {
            let dq = (q_hi[c] - q_lo[c]) / (2.0 * dw);
            out[c] += (phase * (Complex64::new(0.0, 1.0) * q[c] / t - dq / (t * t))).re;
        }
    }
    Ok(out)
}

/// Noise kernel `mu(t) = int_0^inf nu(w) cos(w t) dw`, the cosine
/// transform of the symmetrised bath noise. Diagnostic only; diverges
/// logarithmically at `t = 0`.
///
/// The oscillatory, conditionally convergent tail is summed over cosine
/// half-periods with Euler acceleration.
pub fn noise_kernel(p: &ModelParams, t: f64, tol: f64) -> Result<f64> {
    p.validate()?;
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidParams(
            "noise kernel requires a finite nonzero time".into(),
        ));
    }
    if p.lambda == 0.0 {
        return Ok(0.0);
    }
    let tau = t.abs();
    let nu = NoiseSpectrum::new(p);
    let mut f = |w: f64| nu.value(w) * (w * tau).cos();

    let half_period = std::f64::consts::PI / tau;
    let w0 = 10.0 * p.cutoff.max(p.temperature).max(1.0 / tau);
    // end the bulk range at a zero of the cosine
    let k = ((w0 * tau / std::f64::consts::PI - 0.5).ceil()).max(1.0);
    let w_edge = (k + 0.5) * half_period;
    let bulk_pts: Vec<f64> = if w_edge > 4.0 * half_period {
        let mut v = vec![0.0];
        let mut x = half_period.min(w_edge / 4.0);
        while x < w_edge {
            v.push(x);
            x *= 2.0;
        }
        v.push(w_edge);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    } else {
        vec![0.0, w_edge]
    };
    let bulk = quad::integrate(&mut f, &bulk_pts, 0.5 * tol, 50_000)?;

    // alternating half-period chunks, Euler-accelerated
    let mut workspace: Vec<f64> = Vec::with_capacity(64);
    let mut sum = 0.0f64;
    let mut prev = f64::INFINITY;
    let mut settled = 0;
    for m in 0..200_000 {
        let a = w_edge + m as f64 * half_period;
        let (chunk, _) = quad::kronrod15(&mut f, a, a + half_period);
        sum = euler_step(&mut workspace, chunk, sum);
        if (sum - prev).abs() < 0.5 * tol {
            settled += 1;
            if settled >= 3 {
                return Ok(bulk.value + sum);
            }
        } else {
            settled = 0;
        }
        prev = sum;
    }
    Err(Error::QuadratureNonConvergence {
        estimate: (sum - prev).abs(),
        tol,
    })
}

/// One term of van Wijngaarden's Euler transformation for alternating
/// series; returns the updated accelerated sum.
fn euler_step(workspace: &mut Vec<f64>, term: f64, sum: f64) -> f64 {
    if workspace.is_empty() {
        workspace.push(term);
        return sum + 0.5 * term;
    }
    let mut tmp = workspace[0];
    workspace[0] = term;
    for k in 0..workspace.len() - 1 {
        let d = workspace[k + 1];
        workspace[k + 1] = 0.5 * (workspace[k] + tmp);
        tmp = d;
    }
    let next = 0.5 * (workspace[workspace.len() - 1] + tmp);
    if next.abs() <= workspace[workspace.len() - 1].abs() && workspace.len() < 32 {
        workspace.push(next);
        sum + 0.5 * next
    } else {
        sum + next
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical(temperature: f64) -> ModelParams {
        ModelParams::new(1.0, 0.1, 100.0, temperature).unwrap()
    }

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn free_oscillator_roots() {
        let prop = characteristic_roots(4.0, 0.0, 50.0).unwrap();
        let mut expect = [
            Complex64::new(-50.0, 0.0),
            Complex64::new(0.0, -2.0),
            Complex64::new(0.0, 2.0),
        ];
        expect.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        for (r, e) in prop.roots.iter().zip(&expect) {
            assert!((r - e).norm() < 1e-10, "{r} vs {e}");
        }
        // g(t) = sin(w t)/w for the free oscillator
        for &t in &[0.0, 0.4, 2.7, 11.0] {
            let (g, gp) = prop.g(t);
            assert!((g - (2.0 * t).sin() / 2.0).abs() < 1e-10);
            assert!((gp - (2.0 * t).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn canonical_roots_and_residues() {
        // references from 40-digit polynomial solving
        let prop = characteristic_roots(11.0, 0.1, 100.0).unwrap();
        assert!((prop.roots[0] - Complex64::new(-99.899_909_838_640_2, 0.0)).norm() < 1e-9);
        assert!(
            (prop.roots[1] - Complex64::new(-0.050_045_080_679_898_4, -0.999_248_414_720_329_9))
                .norm()
                < 1e-9
        );
        assert!(
            (prop.roots[2] - Complex64::new(-0.050_045_080_679_898_4, 0.999_248_414_720_329_9))
                .norm()
                < 1e-9
        );
        assert!(
            (prop.residues[0] - Complex64::new(1.003_813_275_430_929e-5, 0.0)).norm() < 1e-12
        );
        assert!(
            (prop.residues[2]
                - Complex64::new(-5.019_066_377_154_645e-6, -0.500_877_605_334_055_6))
            .norm()
                < 1e-10
        );
        assert!(prop.is_stable());
        assert!((prop.slowest_rate() - 0.050_045_080_679_898_4).abs() < 1e-9);
    }

    #[test]
    fn residue_identities_random_stable() {
        let mut st = 7u64;
        for _ in 0..100 {
            let w0 = 0.3 + 3.0 * splitmix(&mut st);
            let cutoff = 2.0 + 120.0 * splitmix(&mut st);
            // keep stable: reorg < w_eff^2
            let lambda = 0.9 * w0 * w0 / cutoff * splitmix(&mut st);
            let prop = characteristic_roots(w0 * w0, lambda, cutoff).unwrap();
            let sum_c: Complex64 = prop.residues.iter().sum();
            let sum_cs: Complex64 = prop
                .residues
                .iter()
                .zip(&prop.roots)
                .map(|(c, s)| c * s)
                .sum();
            assert!(sum_c.norm() < 1e-10, "sum c = {sum_c}");
            assert!((sum_cs - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            assert!(prop.is_stable());

            let (g0, gp0) = prop.g(0.0);
            assert!(g0.abs() < 1e-12 && (gp0 - 1.0).abs() < 1e-12);

            // conjugate-pair structure keeps the exponential sum real
            for t in [0.3, 7.0, 41.0, 100.0] {
                let sum: Complex64 = prop
                    .residues
                    .iter()
                    .zip(&prop.roots)
                    .map(|(c, s)| c * (s * t).exp())
                    .sum();
                assert!(sum.im.abs() < 1e-12, "t={t}: im = {}", sum.im);
            }
        }
    }

    #[test]
    fn stability_matches_root_signs() {
        let mut st = 99u64;
        for _ in 0..100 {
            let w2 = 0.1 + 20.0 * splitmix(&mut st);
            let cutoff = 1.0 + 100.0 * splitmix(&mut st);
            let lambda = 2.0 * w2 / cutoff * splitmix(&mut st);
            if (w2 - lambda * cutoff).abs() < 1e-6 {
                continue; // skip near-marginal draws
            }
            let prop = characteristic_roots(w2, lambda, cutoff).unwrap();
            let max_re = prop.roots.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(
                w2 > lambda * cutoff,
                max_re < 0.0,
                "w2={w2} lambda={lambda} cutoff={cutoff} max_re={max_re}"
            );
        }
    }

    #[test]
    fn unstable_root_detected() {
        // omega_eff^2 = 9 < reorg = 10: one root crosses into the right
        // half-plane
        let prop = characteristic_roots(9.0, 0.1, 100.0).unwrap();
        assert!(!prop.is_stable());
        assert!(prop.roots.iter().any(|r| r.re > 0.0));
    }

    #[test]
    fn imaginary_part_of_g_vanishes() {
        let prop = characteristic_roots(11.0, 0.1, 100.0).unwrap();
        for k in 0..=100 {
            let t = k as f64;
            let sum: Complex64 = prop
                .residues
                .iter()
                .zip(&prop.roots)
                .map(|(c, s)| c * (s * t).exp())
                .sum();
            assert!(sum.im.abs() < 1e-12, "t={t}: im = {}", sum.im);
        }
    }

    #[test]
    fn clustered_roots_evaluate_stably() {
        // near-critical damping: double root at -1/2 split by ~1e-7
        let prop = characteristic_roots(0.25, 0.25 - 1e-14, 1.0).unwrap();
        assert!(prop.clustered);
        let (g0, gp0) = prop.g(0.0);
        assert!(g0.abs() < 1e-8, "g(0) = {g0}");
        assert!((gp0 - 1.0).abs() < 1e-8, "g'(0) = {gp0}");
        // compare against a comfortably separated neighbour
        let loose = characteristic_roots(0.25, 0.2499, 1.0).unwrap();
        assert!(!loose.clustered);
        let (ga, _) = prop.g(3.0);
        let (gb, _) = loose.g(3.0);
        assert!((ga - gb).abs() < 1e-2 * gb.abs().max(1.0));
    }

    #[test]
    fn exact_degeneracy_rejected() {
        // triple-root-free but exactly repeated pair: critically damped
        let err = characteristic_roots(0.25, 0.25, 1.0);
        assert!(matches!(err, Err(Error::DegenerateRoots(_))));
    }

    #[test]
    fn g_hat_two_routes_agree() {
        let prop = characteristic_roots(11.0, 0.1, 100.0).unwrap();
        for k in 0..1000 {
            let w = 1e-3 + k as f64 * 0.5;
            let a = prop.g_hat(w);
            let b = prop.g_hat_residues(w);
            assert!(
                (a - b).norm() <= 1e-10 * a.norm(),
                "w={w}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn g_hat_limits() {
        let prop = characteristic_roots(11.0, 0.1, 100.0).unwrap();
        let z = prop.g_hat(0.0);
        assert!((z - Complex64::new(1.0 / (11.0 - 10.0), 0.0)).norm() < 1e-12);

        let free = characteristic_roots(4.0, 0.0, 50.0).unwrap();
        let near = free.g_hat(1.999).norm();
        assert!(near > 100.0); // undamped resonance blows up
    }

    #[test]
    fn noise_spectrum_zero_frequency_limit() {
        let p = canonical(10.0);
        let nu = NoiseSpectrum::new(&p);
        let expect = 4.0 * 0.1 * 10.0 / std::f64::consts::PI;
        assert!((nu.value(0.0) - expect).abs() < 1e-12);
        assert!(nu.value(1e-9) >= 0.0 && (nu.value(1e-9) - expect).abs() < 1e-9);
    }

    // Steady covariances against 40-digit quadrature of the defining
    // integrals, canonical parameters with counter term.
    #[test]
    fn steady_covariance_reference_values() {
        let cases = [
            (1.0, 1.081_129_593_600_087_4, 1.187_082_248_589_783_3),
            (10.0, 10.008_326_378_264_32, 10.050_451_865_150_438),
            (100.0, 100.000_833_319_888, 100.008_317_899_701_63),
        ];
        for (t, xx, pp) in cases {
            let s = steady_covariance(&canonical(t)).unwrap();
            assert!(
                (s.cov.xx - xx).abs() < 1e-6 * xx,
                "T={t}: xx {} vs {xx}",
                s.cov.xx
            );
            assert!(
                (s.cov.pp - pp).abs() < 1e-6 * pp,
                "T={t}: pp {} vs {pp}",
                s.cov.pp
            );
            assert_eq!(s.cov.xp, 0.0);
        }
    }

    #[test]
    fn steady_covariance_unstable_rejected() {
        let p = canonical(1.0).with_counter_term(false);
        assert!(matches!(steady_covariance(&p), Err(Error::Unstable(_))));
    }

    #[test]
    fn steady_covariance_physical_on_grid() {
        for i in 0..5 {
            for j in 0..5 {
                let t = 0.2 * 10f64.powf(i as f64 / 2.0);
                let lambda = 0.01 * 10f64.powf(j as f64 / 3.0);
                let p = ModelParams::new(1.0, lambda, 100.0, t).unwrap();
                let s = steady_covariance_with_tol(&p, 1e-7).unwrap();
                let (ok, margin) = crate::gaussian::is_physical(&s);
                assert!(ok, "T={t} lambda={lambda}: margin {margin}");
            }
        }
    }

    #[test]
    fn steady_covariance_cutoff_doubling() {
        let p = canonical(1.0);
        let prop = propagator(&p).unwrap();
        let w = quadrature_cutoff(&p);
        let a = steady_covariance_from(&prop, &p, 1e-9, w).unwrap();
        let b = steady_covariance_from(&prop, &p, 1e-9, 2.0 * w).unwrap();
        assert!((a.cov.xx - b.cov.xx).abs() <= 1e-6 * b.cov.xx);
        assert!((a.cov.pp - b.cov.pp).abs() <= 1e-6 * b.cov.pp);
    }

    #[test]
    fn transient_starts_exactly_at_initial_state() {
        let p = canonical(10.0);
        let init = thermal_state(11.0, 10.0).unwrap();
        let tr = transient_covariance(&p, &init, &[0.0, 0.5]).unwrap();
        let first = tr.states[0].to_gaussian();
        assert_eq!(first.cov, init.cov);
    }

    // Memory-integral entries against 40-digit quadrature at t = 1, 2
    // (canonical parameters, T = 10).
    #[test]
    fn memory_integral_reference_values() {
        let p = canonical(10.0);
        let prop = propagator(&p).unwrap();
        let nu = NoiseSpectrum::new(&p);
        let w_max = quadrature_cutoff(&p);
        let seeds = resonance_seeds(&prop, &p, w_max);
        let cases = [
            (1.0, [0.529_100_715_174_666, 1.374_428_280_006_503, 0.654_989_253_380_737]),
            (2.0, [2.113_243_286_888_049, 1.511_081_808_093_613, 0.669_563_556_412_309]),
        ];
        for (t, expect) in cases {
            let mi = memory_integral(&prop, &nu, t, &seeds, w_max, 1e-8).unwrap();
            for c in 0..3 {
                assert!(
                    (mi[c] - expect[c]).abs() < 1e-6,
                    "t={t} c={c}: {} vs {}",
                    mi[c],
                    expect[c]
                );
            }
        }
    }

    #[test]
    fn transient_relaxes_to_steady_state() {
        let p = canonical(10.0);
        let prop = propagator(&p).unwrap();
        let t_relax = 10.0 / prop.slowest_rate();
        let init = thermal_state(11.0, 10.0).unwrap();
        let tr = transient_covariance(&p, &init, &[0.0, t_relax]).unwrap();
        let last = tr.states.last().unwrap().to_gaussian();
        let steady = steady_covariance(&p).unwrap();
        assert!((last.cov.xx - steady.cov.xx).abs() < 1e-4 * steady.cov.xx);
        assert!((last.cov.pp - steady.cov.pp).abs() < 1e-4 * steady.cov.pp);
        assert!(last.cov.xp.abs() < 1e-4);
    }

    #[test]
    fn transient_free_evolution_at_zero_coupling() {
        let mut p = canonical(5.0);
        p.lambda = 0.0;
        let init = thermal_state(1.0, 5.0).unwrap();
        let grid: Vec<f64> = (0..=10).map(|k| 0.7 * k as f64).collect();
        let tr = transient_covariance(&p, &init, &grid).unwrap();
        // thermal state of the evolving Hamiltonian is stationary
        for s in &tr.states {
            let g = s.to_gaussian();
            assert!((g.cov.xx - init.cov.xx).abs() < 1e-10);
            assert!((g.cov.pp - init.cov.pp).abs() < 1e-10);
        }
    }

    #[test]
    fn transient_displaced_mean_follows_propagator() {
        let p = canonical(1.0);
        let prop = propagator(&p).unwrap();
        let init = GaussianState {
            mean: [1.0, -0.5],
            cov: thermal_state(11.0, 1.0).unwrap().cov,
        };
        let tr = transient_covariance(&p, &init, &[0.0, 3.0]).unwrap();
        let g = prop.matrix(3.0);
        let want = [
            g[0][0] * 1.0 + g[0][1] * -0.5,
            g[1][0] * 1.0 + g[1][1] * -0.5,
        ];
        let got = tr.states[1].mean;
        assert!((got[0] - want[0]).abs() < 1e-12);
        assert!((got[1] - want[1]).abs() < 1e-12);
    }

    // Noise kernel against 40-digit oscillatory quadrature.
    #[test]
    fn noise_kernel_reference_values() {
        let cases = [
            (10.0, 0.01, -12.213_219_501_658_29),
            (10.0, 0.02, -79.524_548_843_187_24),
            (10.0, 0.05, -18.293_236_500_535_128),
            (0.0, 0.05, -31.940_512_431_382_585),
            (0.0, 1.0, -0.063_700_251_140_665_22),
            (1.0, 0.3, -0.535_318_242_038_570_7),
        ];
        for (temp, tau, expect) in cases {
            let p = canonical(temp);
            let mu = noise_kernel(&p, tau, 1e-7).unwrap();
            assert!(
                (mu - expect).abs() < 1e-5 * expect.abs().max(1.0),
                "T={temp} tau={tau}: {mu} vs {expect}"
            );
        }
    }

    #[test]
    fn noise_kernel_zero_coupling_and_bad_time() {
        let mut p = canonical(1.0);
        p.lambda = 0.0;
        assert_eq!(noise_kernel(&p, 1.0, 1e-8).unwrap(), 0.0);
        assert!(noise_kernel(&canonical(1.0), 0.0, 1e-8).is_err());
    }
}
