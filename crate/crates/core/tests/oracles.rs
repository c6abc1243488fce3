//! Brute-force oracle comparisons: the Gaussian fidelity formula against
//! truncated-number-basis density matrices, and the frequency-resolved
//! memory integral against the raw double time integral.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oscbath::exact::{propagator, transient_covariance_with_tol, NoiseSpectrum};
use oscbath::gaussian::{fidelity, thermal_state, GaussianState};
use oscbath::ModelParams;

#[test]
fn gaussian_formula_matches_fock_basis_fidelity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    let dim = 60;
    for k in 0..25 {
        // thermal occupations up to 1.5 (covariance determinant <= 4) with
        // moderate squeezing, away from purity so the Gibbs construction
        // is well conditioned
        let draw = |rng: &mut ChaCha8Rng| {
            let nbar: f64 = rng.gen_range(0.05..1.5);
            let squeeze: f64 = rng.gen_range(0.85..1.18);
            let nu = nbar + 0.5;
            (nu * squeeze * squeeze, nu / (squeeze * squeeze))
        };
        let (x1, p1) = draw(&mut rng);
        let (x2, p2) = draw(&mut rng);

        let a = GaussianState::undisplaced(x1, 0.0, p1);
        let b = GaussianState::undisplaced(x2, 0.0, p2);
        let formula = fidelity(&a, &b).unwrap();
        let brute = testkit::fock_fidelity((x1, p1), (x2, p2), dim);
        assert!(
            (formula - brute).abs() < 1e-5,
            "pair {k}: formula {formula} vs fock {brute} for ({x1},{p1}) ({x2},{p2})"
        );
    }
}

#[test]
fn fock_truncation_is_negligible_for_sampled_states() {
    // occupation left in the highest basis state, worst sampled case;
    // must sit far below the 1e-5 fidelity gate
    let s2 = 1.18 * 1.18;
    let w = testkit::truncation_weight(2.0 * s2, 2.0 / s2, 60);
    assert!(w < 1e-9, "truncation weight {w}");
}

/// The raw double-time-integral route, discretised 200 x 200, against the
/// frequency-resolved memory integral on the canonical hot panel.
#[test]
fn double_time_integral_matches_frequency_resolved_form() {
    let p = ModelParams::new(1.0, 0.1, 100.0, 10.0).unwrap();
    let prop = propagator(&p).unwrap();
    let nu = NoiseSpectrum::new(&p);
    let g = |u: f64| prop.g(u);
    let nu_f = |w: f64| nu.value(w);

    // ground initial state: the free part is easy to subtract exactly
    let init = thermal_state(11.0, 10.0).unwrap();

    // The discrete grid truncates the noise spectrum at pi * n / t, which
    // bounds the oracle's own accuracy; n grows with t to keep that bias
    // below the 1e-3 gate.
    for (t, n, n_freq) in [(0.5, 200, 40_000), (1.0, 800, 40_000), (2.0, 1600, 80_000)] {
        let grid = [0.0, t];
        let tr = transient_covariance_with_tol(&p, &init, &grid, 1e-9, false).unwrap();
        let full = tr.states[1];

        // subtract the propagated initial covariance to isolate the
        // memory integral
        let gm = prop.matrix(t);
        let c = init.cov;
        let free_xx =
            gm[0][0] * gm[0][0] * c.xx + 2.0 * gm[0][0] * gm[0][1] * c.xp + gm[0][1] * gm[0][1] * c.pp;
        let free_pp =
            gm[1][0] * gm[1][0] * c.xx + 2.0 * gm[1][0] * gm[1][1] * c.xp + gm[1][1] * gm[1][1] * c.pp;
        let free_xp = gm[0][0] * gm[1][0] * c.xx
            + (gm[0][0] * gm[1][1] + gm[0][1] * gm[1][0]) * c.xp
            + gm[0][1] * gm[1][1] * c.pp;
        let fast = [
            full.second[0] - free_xx,
            full.second[1] - free_pp,
            0.5 * full.second[2] - free_xp,
        ];

        let slow = testkit::double_time_memory_integral(&g, &nu_f, t, n, n_freq);
        for comp in 0..3 {
            assert!(
                (fast[comp] - slow[comp]).abs() <= 1e-3 * (1.0 + fast[comp].abs()),
                "t={t} comp={comp}: fast {} vs slow {}",
                fast[comp],
                slow[comp]
            );
        }
    }
}
