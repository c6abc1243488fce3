//! Brute-force reference computations for the test suites.
//!
//! Everything here is deliberately independent of the main crate: density
//! matrices are built in a truncated number basis and manipulated by dense
//! eigendecomposition, and time integrals are done by plain product
//! trapezoid rules. Slow, simple, and used only to cross-check the fast
//! closed-form paths.

use nalgebra::DMatrix;

/// Matrix of `x^2` in the number basis of a unit oscillator
/// (`x = (a + a^dag)/sqrt(2)`).
fn x_squared(dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        m[(n, n)] = n as f64 + 0.5;
        if n + 2 < dim {
            let v = (((n + 1) * (n + 2)) as f64).sqrt() / 2.0;
            m[(n, n + 2)] = v;
            m[(n + 2, n)] = v;
        }
    }
    m
}

/// Matrix of `p^2` in the same basis (`p = i (a^dag - a)/sqrt(2)`).
fn p_squared(dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        m[(n, n)] = n as f64 + 0.5;
        if n + 2 < dim {
            let v = -(((n + 1) * (n + 2)) as f64).sqrt() / 2.0;
            m[(n, n + 2)] = v;
            m[(n + 2, n)] = v;
        }
    }
    m
}

/// Apply `f` to the eigenvalues of a symmetric matrix.
fn symmetric_function(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let sym = 0.5 * (m + m.transpose());
    let eig = sym.symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Density matrix, in a `dim`-dimensional number basis, of the zero-mean
/// Gaussian state with diagonal covariance `(xx, pp)`.
///
/// The state is realised as the Gibbs state `exp(-h)/Z` of the quadratic
/// form `h = c_x x^2 + c_p p^2` whose parameters reproduce the requested
/// covariances. Requires `4 xx pp > 1` (mixed state).
pub fn gaussian_density_matrix(xx: f64, pp: f64, dim: usize) -> DMatrix<f64> {
    assert!(xx > 0.0 && pp > 0.0 && 4.0 * xx * pp > 1.0);
    let nu = 2.0 * (xx * pp).sqrt();
    let big_omega = ((nu + 1.0) / (nu - 1.0)).ln();
    let cx = 0.5 * (pp / xx).sqrt() * big_omega;
    let cp = 0.5 * (xx / pp).sqrt() * big_omega;
    let h = cx * x_squared(dim) + cp * p_squared(dim);
    let rho = symmetric_function(&h, |e| (-e).exp());
    let z = rho.trace();
    rho / z
}

/// Eigenvectors of the Gibbs generator for the state together with its
/// Boltzmann weights `exp(-mu_i) / Z`.
fn gibbs_eigensystem(xx: f64, pp: f64, dim: usize) -> (DMatrix<f64>, Vec<f64>) {
    assert!(xx > 0.0 && pp > 0.0 && 4.0 * xx * pp > 1.0);
    let nu = 2.0 * (xx * pp).sqrt();
    let big_omega = ((nu + 1.0) / (nu - 1.0)).ln();
    let cx = 0.5 * (pp / xx).sqrt() * big_omega;
    let cp = 0.5 * (xx / pp).sqrt() * big_omega;
    let h = cx * x_squared(dim) + cp * p_squared(dim);
    let eig = (0.5 * (&h + h.transpose())).symmetric_eigen();
    let z: f64 = eig.eigenvalues.iter().map(|&m| (-m).exp()).sum();
    let weights = eig.eigenvalues.iter().map(|&m| (-m).exp() / z).collect();
    (eig.eigenvectors, weights)
}

/// Uhlmann fidelity `[tr sqrt(sqrt(r1) r2 sqrt(r1))]^2` between two
/// zero-mean Gaussian states with diagonal covariances, computed entirely
/// in the truncated number basis.
///
/// Evaluated as the squared trace norm of `sqrt(r1) sqrt(r2)`: with both
/// roots formed in their own eigenbases the product matrix is built from
/// exact scalings of an orthogonal overlap, so its small singular values
/// never pass through a lossy square root of a noisy eigenvalue.
pub fn fock_fidelity(cov1: (f64, f64), cov2: (f64, f64), dim: usize) -> f64 {
    let (v1, w1) = gibbs_eigensystem(cov1.0, cov1.1, dim);
    let (v2, w2) = gibbs_eigensystem(cov2.0, cov2.1, dim);
    let mut overlap = v1.transpose() * v2;
    for i in 0..dim {
        let ri = w1[i].sqrt();
        for j in 0..dim {
            overlap[(i, j)] *= ri * w2[j].sqrt();
        }
    }
    let tr: f64 = overlap.singular_values().iter().sum();
    tr * tr
}

/// Sanity check of the truncation: occupation of the last basis state.
pub fn truncation_weight(xx: f64, pp: f64, dim: usize) -> f64 {
    gaussian_density_matrix(xx, pp, dim)[(dim - 1, dim - 1)]
}

/// Memory-integral covariance contributions at time `t` from the raw
/// double time integral over the noise kernel, discretised as an `n x n`
/// product trapezoid rule.
///
/// `g` returns `(g(u), g'(u))`; `nu` is the symmetrised noise weight.
/// Writing the kernel as a cosine transform of `nu` factorises the double
/// trapezoid sum exactly into `|sum_i w_i g(u_i) e^{i w u_i}|^2`, which is
/// then integrated over frequency by a plain Simpson rule up to the grid's
/// resolution limit `pi / h`.
pub fn double_time_memory_integral(
    g: &dyn Fn(f64) -> (f64, f64),
    nu: &dyn Fn(f64) -> f64,
    t: f64,
    n: usize,
    n_freq: usize,
) -> [f64; 3] {
    assert!(t > 0.0 && n >= 2 && n_freq >= 2);
    let h = t / n as f64;
    // time samples and trapezoid weights
    let samples: Vec<(f64, f64, f64)> = (0..=n)
        .map(|i| {
            let u = i as f64 * h;
            let w = if i == 0 || i == n { 0.5 * h } else { h };
            let (gu, gpu) = g(u);
            (u, w * gu, w * gpu)
        })
        .collect();

    let w_max = std::f64::consts::PI / h;
    let dw = w_max / n_freq as f64;
    let mut acc = [0.0f64; 3];
    for k in 0..=n_freq {
        let w = k as f64 * dw;
        // Simpson weights
        let sw = if k == 0 || k == n_freq {
            dw / 3.0
        } else if k % 2 == 1 {
            4.0 * dw / 3.0
        } else {
            2.0 * dw / 3.0
        };
        let (mut hre, mut him, mut pre, mut pim) = (0.0, 0.0, 0.0, 0.0);
        for &(u, wg, wgp) in &samples {
            let (s, c) = (w * u).sin_cos();
            hre += wg * c;
            him += wg * s;
            pre += wgp * c;
            pim += wgp * s;
        }
        let nuv = nu(w) * sw;
        acc[0] += nuv * 0.5 * (hre * hre + him * him);
        acc[1] += nuv * 0.5 * (pre * pre + pim * pim);
        acc[2] += nuv * 0.5 * (hre * pre + him * pim);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_matrix_reproduces_covariances() {
        let dim = 60;
        let (xx, pp) = (1.3, 0.7);
        let rho = gaussian_density_matrix(xx, pp, dim);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        let got_xx = (x_squared(dim) * &rho).trace();
        let got_pp = (p_squared(dim) * &rho).trace();
        assert!((got_xx - xx).abs() < 1e-8, "xx {got_xx}");
        assert!((got_pp - pp).abs() < 1e-8, "pp {got_pp}");
    }

    #[test]
    fn fidelity_of_identical_states_is_one() {
        let f = fock_fidelity((0.8, 0.8), (0.8, 0.8), 50);
        assert!((f - 1.0).abs() < 1e-10);
    }

    #[test]
    fn thermal_pair_closed_form() {
        // two thermal states: F = (sqrt((1+n1)(1+n2)) - sqrt(n1 n2))^-2
        let cases: [(f64, f64); 3] = [(0.5 + 1e-7, 1.5), (0.9, 1.5), (0.6, 2.4)];
        for (x1, x2) in cases {
            let (n1, n2) = (x1 - 0.5, x2 - 0.5);
            let expected =
                ((1.0 + n1) * (1.0 + n2)).sqrt() - (n1 * n2).sqrt();
            let expected = 1.0 / (expected * expected);
            let f = fock_fidelity((x1, x1), (x2, x2), 60);
            assert!(
                (f - expected).abs() < 1e-6,
                "x1={x1} x2={x2}: {f} vs {expected}"
            );
        }
    }
}
