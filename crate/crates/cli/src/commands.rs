//! The four subcommands: coefficient tables, dynamics runs, steady-state
//! comparisons, and the (T, lambda) fidelity map.

use rayon::prelude::*;

use oscbath::gaussian::{fidelity, thermal_state, GaussianState};
use oscbath::{bath, exact, master, ModelParams};

use crate::config::{Method, RunConfig, VariantSpec};
use crate::output::{fmt_float, CsvWriter};
use crate::CliError;

const DEFAULT_QUAD_TOL: f64 = 1e-8;
/// Transient frequency quadratures are looser by default; they feed plots
/// and 1e-6 is far below line width.
const DEFAULT_DYNAMICS_TOL: f64 = 1e-6;

fn numerical(e: oscbath::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

fn io_error(e: std::io::Error) -> CliError {
    CliError::Numerical(format!("i/o failure: {e}"))
}

/// Local thermal state of the physical Hamiltonian: the factorised
/// initial preparation used by dynamics runs.
fn initial_state(model: &ModelParams) -> oscbath::Result<GaussianState> {
    thermal_state(model.effective_omega_sq(), model.temperature)
}

fn variant_stable(spec: &VariantSpec, model: &ModelParams) -> Result<bool, CliError> {
    if model.lambda == 0.0 {
        return Ok(true); // bounded free motion
    }
    match spec.method {
        Method::Exact => {
            let prop = exact::propagator(model).map_err(numerical)?;
            Ok(prop.is_stable())
        }
        _ => {
            let me = spec.me_params(model).map_err(numerical)?;
            master::steady_state(&me)
                .map(|_| true)
                .or_else(|e| match e {
                    oscbath::Error::Unstable(_) => Ok(false),
                    other => Err(numerical(other)),
                })
        }
    }
}

pub fn cmd_coefficients(cfg: &RunConfig) -> Result<(), CliError> {
    let model = &cfg.model;
    let tol = cfg.tol.unwrap_or(DEFAULT_QUAD_TOL);
    let c = bath::coefficients_with_tol(model, tol).map_err(numerical)?;
    let s_zero = bath::lamb_shift_with_tol(0.0, model, tol).map_err(numerical)?;
    let stable = model.lambda == 0.0 || model.is_exact_stable();

    let rows: Vec<(&str, String)> = vec![
        ("omega0", fmt_float(model.omega0)),
        ("lambda", fmt_float(model.lambda)),
        ("cutoff", fmt_float(model.cutoff)),
        ("temperature", fmt_float(model.temperature)),
        ("bohr_frequency", fmt_float(model.bohr_frequency())),
        ("gamma_plus", fmt_float(c.gamma_plus)),
        ("gamma_minus", fmt_float(c.gamma_minus)),
        ("s_plus", fmt_float(c.s_plus)),
        ("s_minus", fmt_float(c.s_minus)),
        ("delta", fmt_float(c.delta)),
        ("sigma", fmt_float(c.sigma)),
        ("sigma_prime", fmt_float(c.sigma_prime)),
        ("delta_prime", fmt_float(c.delta_prime)),
        ("reorg", fmt_float(c.reorg)),
        ("s_zero", fmt_float(s_zero)),
        ("stable", if stable { "1".into() } else { "0".into() }),
    ];

    for (k, v) in &rows {
        println!("{k:<16} {v}");
    }
    if !stable {
        println!("# verdict: unstable (omega_eff_sq <= lambda*cutoff)");
    }

    if let Some(path) = &cfg.out {
        let header: Vec<String> = rows.iter().map(|(k, _)| k.to_string()).collect();
        let mut w = CsvWriter::create(path, &header).map_err(io_error)?;
        w.row(&rows.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>())
            .map_err(io_error)?;
        w.finish().map_err(io_error)?;
    }
    Ok(())
}

pub fn cmd_dynamics(cfg: &RunConfig) -> Result<(), CliError> {
    let model = &cfg.model;
    let grid = cfg.time_grid();
    let tol = cfg.tol.unwrap_or(DEFAULT_DYNAMICS_TOL);
    let init = initial_state(model).map_err(numerical)?;

    for spec in &cfg.variants {
        if !cfg.allow_unstable && !variant_stable(spec, model)? {
            return Err(CliError::Numerical(format!(
                "variant '{}' is unstable; rerun with --allow-unstable for finite-time output",
                spec.label(model)
            )));
        }
    }

    let runs: Result<Vec<(String, master::Trajectory)>, CliError> = cfg
        .variants
        .iter()
        .map(|spec| {
            let label = spec.label(model);
            let tr = match spec.method {
                Method::Exact => exact::transient_covariance_with_tol(
                    model,
                    &init,
                    &grid,
                    tol,
                    cfg.allow_unstable,
                )
                .map_err(numerical)?,
                _ => {
                    let me = spec.me_params(model).map_err(numerical)?;
                    master::evolve(&me, &init, &grid).map_err(numerical)?
                }
            };
            Ok((label, tr))
        })
        .collect();
    let runs = runs?;

    let path = cfg
        .out
        .as_ref()
        .ok_or_else(|| CliError::Config("dynamics requires --out <path>".into()))?;
    let mut header = vec!["t".to_string()];
    for (label, _) in &runs {
        header.push(format!("{label}_xx"));
        header.push(format!("{label}_pp"));
        header.push(format!("{label}_xp"));
    }
    let mut w = CsvWriter::create(path, &header).map_err(io_error)?;
    for (i, &t) in grid.iter().enumerate() {
        let mut row = vec![fmt_float(t)];
        for (_, tr) in &runs {
            let g = tr.states[i].to_gaussian();
            row.push(fmt_float(g.cov.xx));
            row.push(fmt_float(g.cov.pp));
            row.push(fmt_float(g.cov.xp));
        }
        w.row(&row).map_err(io_error)?;
    }
    w.finish().map_err(io_error)?;
    Ok(())
}

/// Steady state of one master-equation variant.
fn variant_steady(spec: &VariantSpec, model: &ModelParams) -> oscbath::Result<GaussianState> {
    let me = spec.me_params(model)?;
    master::steady_state(&me)
}

pub fn cmd_steady(cfg: &RunConfig) -> Result<(), CliError> {
    let model = &cfg.model;
    let tol = cfg.tol.unwrap_or(DEFAULT_QUAD_TOL);
    let exact_state = exact::steady_covariance_with_tol(model, tol).map_err(numerical)?;

    let mut rows: Vec<(String, GaussianState, f64)> =
        vec![("exact".into(), exact_state, 1.0)];
    for spec in &cfg.variants {
        if spec.method == Method::Exact {
            continue;
        }
        let label = spec.label(model);
        let state = variant_steady(spec, model).map_err(numerical)?;
        let f = fidelity(&exact_state, &state).map_err(numerical)?;
        rows.push((label, state, f));
    }

    println!(
        "{:<24} {:>24} {:>24} {:>24} {:>22}",
        "variant", "xx", "pp", "xp", "fidelity_vs_exact"
    );
    for (label, s, f) in &rows {
        println!(
            "{label:<24} {:>24} {:>24} {:>24} {:>22}",
            fmt_float(s.cov.xx),
            fmt_float(s.cov.pp),
            fmt_float(s.cov.xp),
            fmt_float(*f)
        );
    }

    if let Some(path) = &cfg.out {
        let header: Vec<String> = ["variant", "xx", "pp", "xp", "fidelity_vs_exact"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut w = CsvWriter::create(path, &header).map_err(io_error)?;
        for (label, s, f) in &rows {
            w.row(&[
                label.clone(),
                fmt_float(s.cov.xx),
                fmt_float(s.cov.pp),
                fmt_float(s.cov.xp),
                fmt_float(*f),
            ])
            .map_err(io_error)?;
        }
        w.finish().map_err(io_error)?;
    }
    Ok(())
}

/// One fidelity-map cell: exact steady state against the three benchmark
/// variants. Unstable or otherwise failing entries become NaN.
fn map_point(model: &ModelParams, tol: f64) -> (bool, [f64; 3]) {
    let stable = model.lambda == 0.0 || model.is_exact_stable();
    let exact_state = match exact::steady_covariance_with_tol(model, tol) {
        Ok(s) => s,
        Err(_) => return (false, [f64::NAN; 3]),
    };
    let specs = [
        VariantSpec::parse("redfield+ls").unwrap(),
        VariantSpec::parse("gkls").unwrap(),
        VariantSpec::parse("redfield+shifted+nols").unwrap(),
    ];
    let mut out = [f64::NAN; 3];
    for (slot, spec) in out.iter_mut().zip(&specs) {
        if let Ok(state) = variant_steady(spec, model) {
            if let Ok(f) = fidelity(&exact_state, &state) {
                *slot = f;
            }
        }
    }
    (stable, out)
}

pub fn cmd_fidelity_map(cfg: &RunConfig) -> Result<(), CliError> {
    let tol = cfg.tol.unwrap_or(DEFAULT_QUAD_TOL);
    let temps = cfg.temperature_axis.values();
    let lambdas = cfg.lambda_axis.values();

    let cells: Vec<(f64, f64, bool, [f64; 3])> = temps
        .iter()
        .flat_map(|&t| lambdas.iter().map(move |&l| (t, l)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(t, l)| {
            let mut point = cfg.model.clone();
            point.temperature = t;
            point.lambda = l;
            let (stable, f) = map_point(&point, tol);
            (t, l, stable, f)
        })
        .collect();

    let path = cfg
        .out
        .as_ref()
        .ok_or_else(|| CliError::Config("fidelity-map requires --out <path>".into()))?;
    let header: Vec<String> = [
        "T",
        "lambda",
        "fidelity_redfield_LS",
        "fidelity_gkls",
        "fidelity_shifted_noLS",
        "stable",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut w = CsvWriter::create(path, &header).map_err(io_error)?;
    for (t, l, stable, f) in cells {
        w.row(&[
            fmt_float(t),
            fmt_float(l),
            fmt_float(f[0]),
            fmt_float(f[1]),
            fmt_float(f[2]),
            if stable { "1".into() } else { "0".into() },
        ])
        .map_err(io_error)?;
    }
    w.finish().map_err(io_error)?;
    Ok(())
}
