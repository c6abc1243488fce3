//! Adaptive Gauss-Kronrod quadrature and the principal-value Hilbert
//! transform used for the bath integrals.
//!
//! The building block is the classic 15-point Kronrod rule with embedded
//! 7-point Gauss rule and the QUADPACK error estimate. On top of it sit
//!
//! * [`integrate`]: globally adaptive integration over a list of seed
//!   segments, splitting the worst panel first,
//! * [`integrate3`]: the same for three integrands sharing one evaluation,
//! * inverse-coordinate transforms for infinite tails of integrands
//!   decaying at least as `1/x^2`,
//! * [`hilbert_pv`]: the singularity-subtracted Cauchy principal value
//!   `(1/pi) PV int f(v)/(v - w0) dv` over the whole real line.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_27,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Weights of the embedded 7-point Gauss rule (nodes XGK[1], XGK[3],
/// XGK[5], centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// Value and attached absolute-error estimate of a quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// One 15-point Kronrod panel. Returns (integral, error estimate).
pub(crate) fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(centre);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    let mut resabs = WGK[7] * fc.abs();
    let mut fv = [[0.0f64; 2]; 7];

    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(centre - x);
        let f2 = f(centre + x);
        fv[j] = [f1, f2];
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }

    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j][0] - reskh).abs() + (fv[j][1] - reskh).abs());
    }

    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * 1.0f64.min((200.0 * err / resasc).powf(1.5));
    }
    let round = 50.0 * f64::EPSILON * resabs;
    if round > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(round);
    }
    (result, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel<V> {
    a: f64,
    b: f64,
    value: V,
    key: f64,
    error: V,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key)
    }
}

/// Globally adaptive integration over the union of `segments`.
///
/// Segments are given as a strictly increasing list of breakpoints; the
/// integral runs over `[points[0], points[last]]` with an initial panel
/// per consecutive pair. Fails if `max_panels` panels cannot reach `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    assert!(points.len() >= 2, "need at least one segment");
    let mut heap: BinaryHeap<Panel<f64>> = BinaryHeap::with_capacity(64);
    let mut total_err = 0.0f64;
    let mut npanels = 0usize;
    for w in points.windows(2) {
        let (v, e) = kronrod15(&mut f, w[0], w[1]);
        total_err += e;
        npanels += 1;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            key: e,
            error: e,
        });
    }

    while total_err > tol {
        if npanels >= max_panels {
            return Err(Error::QuadratureNonConvergence {
                estimate: total_err,
                tol,
            });
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // at floating-point resolution and still too inaccurate
            return Err(Error::QuadratureNonConvergence {
                estimate: total_err,
                tol,
            });
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        total_err += e1 + e2 - worst.error;
        npanels += 1;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            key: e1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            key: e2,
            error: e2,
        });
    }

    let mut value = 0.0;
    let mut error = 0.0;
    for p in heap {
        value += p.value;
        error += p.error;
    }
    Ok(QuadResult { value, error })
}

/// Three-component variant of [`integrate`] for integrands sharing one
/// evaluation; the adaptive criterion is the worst component error.
pub fn integrate3<F: FnMut(f64) -> [f64; 3]>(
    mut f: F,
    points: &[f64],
    tol: f64,
    max_panels: usize,
) -> Result<[QuadResult; 3]> {
    assert!(points.len() >= 2);

    fn kronrod15_3<F: FnMut(f64) -> [f64; 3]>(f: &mut F, a: f64, b: f64) -> ([f64; 3], [f64; 3]) {
        let centre = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let fc = f(centre);
        let mut resk = [0.0; 3];
        let mut resg = [0.0; 3];
        let mut vals = [[0.0; 3]; 15];
        vals[14] = fc;
        for c in 0..3 {
            resk[c] = WGK[7] * fc[c];
            resg[c] = WG[3] * fc[c];
        }
        for j in 0..7 {
            let x = half * XGK[j];
            let f1 = f(centre - x);
            let f2 = f(centre + x);
            vals[2 * j] = f1;
            vals[2 * j + 1] = f2;
            for c in 0..3 {
                resk[c] += WGK[j] * (f1[c] + f2[c]);
                if j % 2 == 1 {
                    resg[c] += WG[j / 2] * (f1[c] + f2[c]);
                }
            }
        }
        let mut value = [0.0; 3];
        let mut error = [0.0; 3];
        for c in 0..3 {
            let reskh = 0.5 * resk[c];
            let mut resasc = WGK[7] * (vals[14][c] - reskh).abs();
            for j in 0..7 {
                resasc +=
                    WGK[j] * ((vals[2 * j][c] - reskh).abs() + (vals[2 * j + 1][c] - reskh).abs());
            }
            resasc *= half.abs();
            value[c] = resk[c] * half;
            let mut err = ((resk[c] - resg[c]) * half).abs();
            if resasc != 0.0 && err != 0.0 {
                err = resasc * 1.0f64.min((200.0 * err / resasc).powf(1.5));
            }
            error[c] = err;
        }
        (value, error)
    }

    let key_of = |e: &[f64; 3]| e[0].max(e[1]).max(e[2]);

    let mut heap: BinaryHeap<Panel<[f64; 3]>> = BinaryHeap::with_capacity(64);
    let mut total = [0.0f64; 3];
    let mut npanels = 0usize;
    for w in points.windows(2) {
        let (v, e) = kronrod15_3(&mut f, w[0], w[1]);
        for c in 0..3 {
            total[c] += e[c];
        }
        npanels += 1;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            key: key_of(&e),
            error: e,
        });
    }

    while total[0].max(total[1]).max(total[2]) > tol {
        if npanels >= max_panels {
            return Err(Error::QuadratureNonConvergence {
                estimate: total[0].max(total[1]).max(total[2]),
                tol,
            });
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::QuadratureNonConvergence {
                estimate: total[0].max(total[1]).max(total[2]),
                tol,
            });
        }
        let (v1, e1) = kronrod15_3(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15_3(&mut f, mid, worst.b);
        for c in 0..3 {
            total[c] += e1[c] + e2[c] - worst.error[c];
        }
        npanels += 1;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            key: key_of(&e1),
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            key: key_of(&e2),
            error: e2,
        });
    }

    let mut value = [0.0f64; 3];
    let mut error = [0.0f64; 3];
    for p in heap {
        for c in 0..3 {
            value[c] += p.value[c];
            error[c] += p.error[c];
        }
    }
    Ok([
        QuadResult {
            value: value[0],
            error: error[0],
        },
        QuadResult {
            value: value[1],
            error: error[1],
        },
        QuadResult {
            value: value[2],
            error: error[2],
        },
    ])
}

/// Integral of `f` over `[start, inf)` via the substitution `v = 1/u`.
///
/// Valid when `f(v)` decays at least as fast as `1/v^2`; the transformed
/// integrand `f(1/u)/u^2` is then bounded on `(0, 1/start]`.
pub fn integrate_upper_tail<F: FnMut(f64) -> f64>(
    mut f: F,
    start: f64,
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    assert!(start > 0.0);
    integrate(
        |u| f(1.0 / u) / (u * u),
        &[0.0, 1.0 / start],
        tol,
        max_panels,
    )
}

/// Integral of `f` over `(-inf, end]` via the reflected tail transform.
pub fn integrate_lower_tail<F: FnMut(f64) -> f64>(
    mut f: F,
    end: f64,
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    assert!(end < 0.0);
    integrate_upper_tail(|v| f(-v), -end, tol, max_panels)
}

/// Three-component upper-tail transform, companion to [`integrate3`].
pub fn integrate3_upper_tail<F: FnMut(f64) -> [f64; 3]>(
    mut f: F,
    start: f64,
    tol: f64,
    max_panels: usize,
) -> Result<[QuadResult; 3]> {
    assert!(start > 0.0);
    integrate3(
        |u| {
            let v = f(1.0 / u);
            let s = 1.0 / (u * u);
            [v[0] * s, v[1] * s, v[2] * s]
        },
        &[0.0, 1.0 / start],
        tol,
        max_panels,
    )
}

/// Cauchy principal value `(1/pi) PV int_{-inf}^{inf} f(v)/(v - omega0) dv`.
///
/// The singular window `[omega0 - window, omega0 + window]` is integrated
/// with the subtracted integrand `(f(v) - f(omega0))/(v - omega0)`, exact
/// because the principal value of `1/(v - omega0)` over the symmetric
/// window vanishes. The exterior is integrated directly, with the
/// unbounded parts mapped through `v -> 1/v`; this requires `f` to decay
/// at least as `1/|v|` so the mapped integrand stays bounded.
///
/// Returns value and total error estimate; fails when the estimate cannot
/// be brought below `tol`.
pub fn hilbert_pv<F: Fn(f64) -> f64>(
    f: F,
    omega0: f64,
    window: f64,
    tol: f64,
) -> Result<QuadResult> {
    assert!(window > 0.0 && window.is_finite());
    let f0 = f(omega0);
    let lo = omega0 - window;
    let hi = omega0 + window;
    // five sub-integrals share the budget
    let budget = tol / 8.0;
    let max_panels = 4000;

    // Subtracted integrand over the window, split at the singular point so
    // no node lands exactly on it.
    let inner = integrate(
        |v| (f(v) - f0) / (v - omega0),
        &[lo, omega0, hi],
        budget,
        max_panels,
    )?;

    // Exterior: finite parts up to +-turn, then inverse-mapped tails.
    let turn = 8.0 * omega0.abs().max(window).max(1.0);
    let mut upper_pts = vec![hi];
    if hi < 0.0 {
        upper_pts.push(0.0); // keep a breakpoint at the origin kink
    }
    upper_pts.push(turn.max(2.0 * hi));
    let upper = integrate(|v| f(v) / (v - omega0), &upper_pts, budget, max_panels)?;
    let upper_tail = integrate_upper_tail(
        |v| f(v) / (v - omega0),
        *upper_pts.last().unwrap(),
        budget,
        max_panels,
    )?;

    let mut lower_pts = vec![(-turn).min(2.0 * lo)];
    if lo > 0.0 {
        lower_pts.push(0.0);
    }
    lower_pts.push(lo);
    let lower = integrate(|v| f(v) / (v - omega0), &lower_pts, budget, max_panels)?;
    let lower_tail = integrate_lower_tail(
        |v| f(v) / (v - omega0),
        lower_pts[0],
        budget,
        max_panels,
    )?;

    let value = inner.value + upper.value + upper_tail.value + lower.value + lower_tail.value;
    let error = inner.error + upper.error + upper_tail.error + lower.error + lower_tail.error;
    if error > tol {
        return Err(Error::QuadratureNonConvergence {
            estimate: error,
            tol,
        });
    }
    Ok(QuadResult {
        value: value / std::f64::consts::PI,
        error: error / std::f64::consts::PI,
    })
}
