//! One function per subcommand. Each writes its results into a fresh run
//! directory and returns that directory.

use std::path::PathBuf;

use ptdnls::dynamics::{
    integrate_observed, metastability_sweep, sample_perturbation, unwrap_near, OrbitFrame, SweepConfig,
};
use ptdnls::lattice::{DiagnosticRecord, Params};
use ptdnls::spectral::{dimer_block_eigenvalues, spectral_report};
use ptdnls::stationary::{dimer_branch_e, e0, solve_breather, BreatherProfile};

use crate::checks::run_checks;
use crate::config::{Command, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::json::fmt_f64;
use crate::output::{Rows, RunDir};
use crate::profile::ProfileFile;

/// Points of the amplitude grid on `[0, BRANCH_A_MAX]` for `branch`.
pub const BRANCH_POINTS: usize = 201;
pub const BRANCH_A_MAX: f64 = 2.0;

/// Time between recorded samples for `evolve` and between exit checks in `metastab`.
pub const SAMPLE_INTERVAL: f64 = 0.1;

pub fn run(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    match cfg.command {
        Command::Branch => cmd_branch(cfg),
        Command::Breather => cmd_breather(cfg),
        Command::Spectrum => cmd_spectrum(cfg),
        Command::Evolve => cmd_evolve(cfg),
        Command::Metastab => cmd_metastab(cfg),
        Command::Check => cmd_check(cfg),
    }
}

fn steps_per_sample(dt: f64) -> usize {
    ((SAMPLE_INTERVAL / dt).round() as usize).max(1)
}

/// The stored profile named in the config, or a fresh solve.
pub fn load_or_solve(cfg: &ExperimentConfig) -> CliResult<BreatherProfile> {
    match &cfg.profile {
        Some(path) => ProfileFile::read(path)?.to_profile(),
        None => Ok(solve_breather(&cfg.lattice_params()?, cfg.n_half, cfg.tol)?),
    }
}

pub fn branch_rows(params: &Params) -> CliResult<Rows> {
    if !(params.omega > params.gamma) {
        return Err(CliError::Validation(format!(
            "branch needs omega > gamma, got omega = {}, gamma = {}",
            params.omega, params.gamma
        )));
    }
    let mut rows = Rows::with_capacity(BRANCH_POINTS);
    for k in 0..BRANCH_POINTS {
        let a = BRANCH_A_MAX * k as f64 / (BRANCH_POINTS - 1) as f64;
        let e = if k == 0 { e0(params)? } else { dimer_branch_e(a, params)? };
        let a2 = a * a;
        let theta = 0.5 * f64::atan2(params.gamma / (params.omega + 4.0 * a2), e / (params.omega + 8.0 * a2));
        let mut row = vec![fmt_f64(a), fmt_f64(e), fmt_f64(-e), fmt_f64(theta)];
        if k == 0 {
            // the block formulas do not apply to the linear dimer
            row.extend([String::new(), String::new(), String::new()]);
        } else {
            let mu = dimer_block_eigenvalues(params, a)?;
            row.extend(mu[1..].iter().map(|&x| fmt_f64(x)));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn cmd_branch(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    let rows = branch_rows(&cfg.lattice_params()?)?;
    let mut dir = RunDir::create(cfg)?;
    dir.write_csv("branch.csv", &["A", "E_plus", "E_minus", "theta", "mu1", "mu2", "mu3"], &rows)?;
    dir.finish()
}

fn cmd_breather(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    let prof = solve_breather(&cfg.lattice_params()?, cfg.n_half, cfg.tol)?;
    let file = ProfileFile::from_profile(&prof, cfg.tol);
    let rows: Rows = (0..=prof.n_half as isize)
        .map(|n| {
            let m = prof.u_at(n).norm();
            vec![n.to_string(), fmt_f64(m), if m > 0.0 { fmt_f64(m.ln()) } else { String::new() }]
        })
        .collect();
    let mut dir = RunDir::create(cfg)?;
    dir.write("profile.json", file.to_json().as_bytes())?;
    dir.write_csv("decay.csv", &["n", "abs_U", "ln_abs_U"], &rows)?;
    dir.finish()
}

fn cmd_spectrum(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    let prof = load_or_solve(cfg)?;
    let report = spectral_report(&prof)?;
    let rows: Rows = report.eigenvalues.iter().enumerate().map(|(i, &x)| vec![i.to_string(), fmt_f64(x)]).collect();
    let mut dir = RunDir::create(cfg)?;
    dir.write_json("spectrum.json", &report)?;
    dir.write_csv("eigenvalues.csv", &["index", "eigenvalue"], &rows)?;
    dir.finish()
}

fn cmd_evolve(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    let prof = load_or_solve(cfg)?;
    let params = prof.params;
    let frame = OrbitFrame::new(&prof);
    let nu0 = frame.breather().norm();
    let mut psi0 = frame.breather().clone();
    if cfg.perturbation > 0.0 {
        psi0 = psi0.add_scaled(&sample_perturbation(&prof, cfg.perturbation, cfg.seed), 1.0);
    }
    let every = steps_per_sample(cfg.dt);
    let mut rows = Rows::new();
    let mut last_alpha: Option<f64> = None;
    integrate_observed(&psi0, &params, cfg.t_end, cfg.dt, |k, t, s| {
        if k % every != 0 {
            return Ok(true);
        }
        let d = DiagnosticRecord::of(t, s, &params);
        let mut row =
            vec![fmt_f64(t), fmt_f64(d.energy_h), fmt_f64(d.charge_q), fmt_f64(d.lambda_e), fmt_f64(d.norm_sq)];
        match frame.decompose(s, nu0) {
            Ok(m) => {
                let alpha = last_alpha.map_or(m.alpha, |prev| unwrap_near(prev, m.alpha));
                last_alpha = Some(alpha);
                let alpha_dot = frame.alpha_dot(&m).map(|a| fmt_f64(a.value)).unwrap_or_default();
                row.extend([fmt_f64(m.phi_norm()), fmt_f64(alpha), alpha_dot]);
            }
            // far from the orbit: the modulation columns stay empty
            Err(_) => row.extend([String::new(), String::new(), String::new()]),
        }
        rows.push(row);
        Ok(true)
    })?;
    let mut dir = RunDir::create(cfg)?;
    dir.write_csv("trajectory.csv", &["t", "H", "Q", "Lambda_E", "norm_sq", "phi_norm", "alpha", "alpha_dot"], &rows)?;
    dir.finish()
}

fn cmd_metastab(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    let base = cfg.lattice_params()?;
    let sweep = SweepConfig {
        n_half: cfg.n_half,
        dt: cfg.dt,
        delta: cfg.perturbation,
        nu_exit: cfg.nu_exit,
        t_max: cfg.t_end,
        check_every: steps_per_sample(cfg.dt),
        seed: cfg.seed,
        tol: cfg.tol,
    };
    let report = metastability_sweep(&base, &cfg.sweep_values(), &sweep)?;
    let rows: Rows = report
        .runs
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.epsilon),
                fmt_f64(r.t0),
                r.exited.to_string(),
                fmt_f64(r.max_phi),
                fmt_f64(r.max_alpha_dot_excess),
                fmt_f64(r.alpha_dot_constant),
            ]
        })
        .collect();
    let mut dir = RunDir::create(cfg)?;
    dir.write_json("metastability.json", &report)?;
    dir.write_csv(
        "exits.csv",
        &["epsilon", "t0", "exited", "max_phi_norm", "max_abs_alpha_dot_minus_E", "alpha_dot_constant"],
        &rows,
    )?;
    dir.finish()
}

fn cmd_check(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    let prof = load_or_solve(cfg)?;
    let results = run_checks(&prof, cfg)?;
    let width = results.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &results {
        println!(
            "{:<4}  {:<width$}  {:>12.3e}  (limit {:.1e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.limit
        );
    }
    let rows: Rows = results
        .iter()
        .map(|c| vec![c.name.to_string(), c.passed.to_string(), fmt_f64(c.value), fmt_f64(c.limit)])
        .collect();
    let mut dir = RunDir::create(cfg)?;
    dir.write_csv("checks.csv", &["check", "passed", "value", "limit"], &rows)?;
    let path = dir.finish()?;
    let failed: Vec<&str> = results.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(path)
    } else {
        Err(CliError::Invariant(format!("{} checks failed: {}", failed.len(), failed.join(", "))))
    }
}
