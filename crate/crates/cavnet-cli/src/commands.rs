//! Subcommand implementations: simulate, steady, design, sweep, figure.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use cavnet::dynamics::{
    propagate_lyapunov, solve_riccati, stability_class, steady_lyapunov, StabilityClass,
    STABILITY_TOL,
};
use cavnet::entanglement::{delta_tilde, log_negativity, purity};
use cavnet::gaussian::CovarianceMatrix;
use cavnet::networks::{ideal_uncontrolled, reduce_cavity_covariance, NetworkParams};

use crate::config::{FeedbackSpec, NetworkKind, RunConfig};
use crate::output::{
    fmt, open_out, write_line, STEADY_HEADER, SWEEP_HEADER, TRAJECTORY_HEADER,
};
use crate::CliError;

/// Physicality tolerance applied to every emitted covariance row.
const ROW_PHYSICALITY_TOL: f64 = 1e-8;

/// Maximum elementwise gap allowed between the closed-form and cascade
/// constructions when `--check-dual` is requested.
const DUAL_GAP_TOL: f64 = 1e-10;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn numeric(msg: impl Into<String>) -> CliError {
    CliError::Numeric(msg.into())
}

/// Builds both network routes and fails if they disagree beyond
/// [`DUAL_GAP_TOL`]; the measured gaps go to stderr.
fn run_dual_check(cfg: &RunConfig) -> Result<(), CliError> {
    let (da, dd) = cfg.dual_gaps()?;
    eprintln!("dual-route check: max |dA| = {da:.3e}, max |dD| = {dd:.3e}");
    if da > DUAL_GAP_TOL || dd > DUAL_GAP_TOL {
        return Err(numeric(format!(
            "dual-route mismatch: max |dA| = {da:.3e}, max |dD| = {dd:.3e} \
             (tolerance {DUAL_GAP_TOL:e})"
        )));
    }
    Ok(())
}

/// Reduces a full-state covariance to the cavity block, validates it, and
/// returns the CSV fields `EN, P, delta_tilde, detV, V11..V44`.
fn metrics_fields(v: &DMatrix<f64>, label: &str) -> Result<Vec<String>, CliError> {
    let block = reduce_cavity_covariance(v)?;
    let cv = CovarianceMatrix::new(block).map_err(|e| numeric(format!("{label}: {e}")))?;
    if !cv.is_physical(ROW_PHYSICALITY_TOL) {
        return Err(numeric(format!(
            "{label}: cavity covariance violates the uncertainty bound"
        )));
    }
    let m = cv.matrix();
    let mut fields = vec![
        fmt(log_negativity(&cv)?),
        fmt(purity(&cv)?),
        fmt(delta_tilde(&cv)?),
        fmt(m.determinant()),
    ];
    for i in 0..4 {
        for j in 0..4 {
            fields.push(fmt(m[(i, j)]));
        }
    }
    Ok(fields)
}

/// Integrates the configured network and writes the trajectory CSV.
pub fn simulate(cfg: &RunConfig, out: Option<&Path>, check_dual: bool) -> Result<(), CliError> {
    if check_dual {
        run_dual_check(cfg)?;
    }
    let dd = cfg.build()?;
    let v0 = cfg.initial_covariance()?;
    let traj = propagate_lyapunov(&dd.a, &dd.d, &v0, cfg.t_end, cfg.dt)?;
    let mut w = open_out(out)?;
    write_line(w.as_mut(), TRAJECTORY_HEADER)?;
    let last = traj.times.len() - 1;
    for (k, (t, v)) in traj.times.iter().zip(&traj.covariances).enumerate() {
        if k % cfg.stride != 0 && k != last {
            continue;
        }
        let mut fields = vec![fmt(*t)];
        fields.extend(metrics_fields(v, &format!("t = {t}"))?);
        write_line(w.as_mut(), &fields.join(","))?;
    }
    w.flush().map_err(|e| numeric(format!("write failed: {e}")))
}

/// Solves for the stationary covariance and writes a single-row CSV.
pub fn steady(cfg: &RunConfig, out: Option<&Path>, check_dual: bool) -> Result<(), CliError> {
    if check_dual {
        run_dual_check(cfg)?;
    }
    let dd = cfg.build()?;
    let class = stability_class(&dd.a, STABILITY_TOL);
    if class != StabilityClass::Stable {
        return Err(numeric(format!(
            "no steady state: the drift matrix is {}",
            class.label()
        )));
    }
    let v = steady_lyapunov(&dd.a, &dd.d)?;
    let mut w = open_out(out)?;
    write_line(w.as_mut(), STEADY_HEADER)?;
    write_line(w.as_mut(), &metrics_fields(&v, "steady state")?.join(","))?;
    w.flush().map_err(|e| numeric(format!("write failed: {e}")))
}

/// Runs the feedback-design Riccati solve for the configured cavity pairing
/// and prints the coefficient vector and stationary-state metrics.
pub fn design(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.network != NetworkKind::Ideal {
        return Err(usage(
            "design targets the ideal network; pass --network ideal",
        ));
    }
    let probe = NetworkParams::ideal(
        cfg.cavity1_params(),
        cfg.cavity2_params(),
        0.0,
        DVector::zeros(4),
    );
    let (base, ell) = ideal_uncontrolled(&probe)?;
    let sol = solve_riccati(&base.a, &base.d, &ell)?;
    let cv = CovarianceMatrix::new(sol.v_inf.clone())?;
    println!(
        "f_bar = {:.4} {:.4} {:.4} {:.4}",
        sol.f_bar[0], sol.f_bar[1], sol.f_bar[2], sol.f_bar[3]
    );
    println!("det_v_inf = {:.8}", sol.v_inf.determinant());
    println!("log_negativity = {:.8}", log_negativity(&cv)?);
    println!("purity = {:.8}", purity(&cv)?);
    println!("residual = {:.3e}", sol.residual);
    println!("iterations = {}", sol.iterations);
    Ok(())
}

/// Parses and validates the swept value list: nonempty, finite, strictly
/// monotone in either direction, and inside the parameter's domain.
fn parse_sweep_values(param: &str, values: &str) -> Result<Vec<f64>, CliError> {
    let vals: Vec<f64> = values
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("invalid value {s:?} in --values")))
        })
        .collect::<Result<_, _>>()?;
    if vals.is_empty() || vals.iter().any(|x| !x.is_finite()) {
        return Err(usage("--values needs a nonempty list of finite numbers"));
    }
    if vals.len() > 1 {
        let increasing = vals.windows(2).all(|w| w[0] < w[1]);
        let decreasing = vals.windows(2).all(|w| w[0] > w[1]);
        if !increasing && !decreasing {
            return Err(usage("--values must be strictly increasing or decreasing"));
        }
    }
    match param {
        "tau" if vals.iter().any(|&x| x <= 0.0) => {
            Err(usage("tau values must be positive"))
        }
        "alpha" if vals.iter().any(|&x| !(0.0..=1.0).contains(&x)) => {
            Err(usage("alpha values must lie in [0, 1]"))
        }
        _ => Ok(vals),
    }
}

/// Sweeps one parameter over a value list, solving each point's steady state
/// concurrently, and writes one CSV row per value in input order.
pub fn sweep(
    cfg: &RunConfig,
    param: &str,
    values: &str,
    out: Option<&Path>,
    check_dual: bool,
) -> Result<(), CliError> {
    if !matches!(param, "g" | "tau" | "alpha") {
        return Err(usage(format!(
            "unknown sweep parameter {param:?}; expected g, tau, or alpha"
        )));
    }
    if matches!(param, "tau" | "alpha") && cfg.network != NetworkKind::Realistic {
        return Err(usage(format!(
            "{param} sweeps need --network realistic"
        )));
    }
    let vals = parse_sweep_values(param, values)?;

    // Resolve the feedback vector once so every point shares the same design.
    let f = cfg.resolve_feedback()?;
    let f_arr = [f[0], f[1], f[2], f[3]];
    let points: Vec<RunConfig> = vals
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            c.f = FeedbackSpec::Explicit(f_arr);
            match param {
                "g" => c.gain = v,
                "tau" => c.tau = v,
                _ => c.alpha = v,
            }
            c
        })
        .collect();

    let rows: Vec<Result<(String, f64, f64), CliError>> = points
        .par_iter()
        .zip(vals.par_iter())
        .map(|(c, &v)| {
            let (mut ga, mut gd) = (0.0, 0.0);
            if check_dual {
                (ga, gd) = c.dual_gaps()?;
                if ga > DUAL_GAP_TOL || gd > DUAL_GAP_TOL {
                    return Err(numeric(format!(
                        "dual-route mismatch at {param} = {v}: \
                         max |dA| = {ga:.3e}, max |dD| = {gd:.3e}"
                    )));
                }
            }
            let dd = c.build()?;
            let class = stability_class(&dd.a, STABILITY_TOL);
            let row = if class == StabilityClass::Stable {
                let vst = steady_lyapunov(&dd.a, &dd.d)?;
                let block = reduce_cavity_covariance(&vst)?;
                let cv = CovarianceMatrix::new(block)
                    .map_err(|e| numeric(format!("{param} = {v}: {e}")))?;
                if !cv.is_physical(ROW_PHYSICALITY_TOL) {
                    return Err(numeric(format!(
                        "{param} = {v}: steady covariance violates the uncertainty bound"
                    )));
                }
                format!(
                    "{},{},{},stable",
                    fmt(v),
                    fmt(log_negativity(&cv)?),
                    fmt(purity(&cv)?)
                )
            } else {
                format!("{},,,{}", fmt(v), class.label())
            };
            Ok((row, ga, gd))
        })
        .collect();

    let mut w = open_out(out)?;
    write_line(w.as_mut(), SWEEP_HEADER)?;
    let (mut worst_a, mut worst_d) = (0.0f64, 0.0f64);
    for r in rows {
        let (row, ga, gd) = r?;
        worst_a = worst_a.max(ga);
        worst_d = worst_d.max(gd);
        write_line(w.as_mut(), &row)?;
    }
    if check_dual {
        eprintln!(
            "dual-route check over {} points: max |dA| = {worst_a:.3e}, max |dD| = {worst_d:.3e}",
            vals.len()
        );
    }
    w.flush().map_err(|e| numeric(format!("write failed: {e}")))
}

/// The two cavity pairings used by the bundled datasets.
fn pairings() -> [(&'static str, cavnet::networks::CavityKind); 2] {
    use cavnet::networks::CavityKind;
    [
        ("dispersive_damped", CavityKind::Dispersive),
        ("damped_damped", CavityKind::Damped),
    ]
}

/// Base configuration shared by the bundled datasets: ideal network,
/// m = 0.2, kappa = 1, V0 = 2I, integrated to t = 12.
fn figure_base(cavity1: cavnet::networks::CavityKind) -> RunConfig {
    RunConfig {
        cavity1,
        t_end: 12.0,
        ..RunConfig::default()
    }
}

/// Writes the CSV bundle underlying one of the bundled datasets (ids 2-6)
/// into `out_dir`, creating it if needed.
pub fn figure(id: u8, out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", out_dir.display())))?;
    let file = |name: &str| Some(out_dir.join(name));

    match id {
        // Uncontrolled transients for both pairings: EN/P (id 2) and the
        // separability indicators delta_tilde/detV (id 3) share one dataset.
        2 | 3 => {
            for (name, c1) in pairings() {
                let mut cfg = figure_base(c1);
                cfg.f = FeedbackSpec::Explicit([0.0; 4]);
                simulate(&cfg, file(&format!("fig{id}_{name}.csv")).as_deref(), false)?;
            }
        }
        // Steady entanglement against feedback gain for both pairings.
        4 => {
            for (name, c1) in pairings() {
                let cfg = figure_base(c1);
                let values: Vec<String> =
                    (0..=20).map(|k| format!("{}", k as f64 * 0.05)).collect();
                sweep(
                    &cfg,
                    "g",
                    &values.join(","),
                    file(&format!("fig4_{name}.csv")).as_deref(),
                    false,
                )?;
            }
        }
        // Controlled transients at unit gain with the designed coefficients.
        5 => {
            for (name, c1) in pairings() {
                let mut cfg = figure_base(c1);
                cfg.gain = 1.0;
                simulate(&cfg, file(&format!("fig5_{name}.csv")).as_deref(), false)?;
            }
        }
        // Realistic-model robustness: tau and alpha sweeps at unit gain,
        // with the ideal closed loop as the reference row.
        6 => {
            let mut ideal = figure_base(cavnet::networks::CavityKind::Dispersive);
            ideal.gain = 1.0;
            steady(&ideal, file("fig6_ideal.csv").as_deref(), false)?;

            let mut realistic = ideal.clone();
            realistic.network = NetworkKind::Realistic;
            sweep(
                &realistic,
                "tau",
                "0.01,0.2,0.4,0.6",
                file("fig6_tau.csv").as_deref(),
                false,
            )?;
            sweep(
                &realistic,
                "alpha",
                "0.90,0.95,0.99,1.0",
                file("fig6_alpha.csv").as_deref(),
                false,
            )?;
        }
        _ => return Err(usage(format!("unknown dataset id {id}; expected 2-6"))),
    }
    Ok(())
}
