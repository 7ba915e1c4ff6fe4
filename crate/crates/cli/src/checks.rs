//! Invariant suite run by `ptlab check`.

use ptdnls::dynamics::{default_dt, integrate, modulation_decompose, sample_perturbation};
use ptdnls::lattice::{charge_q, energy_h, energy_h_complex, gauge_rotate, lambda_e, norm_balance_residual, rhs};
use ptdnls::spectral::{
    assemble_hessian, center_block_numeric, constrained_min_eigenvalue, dimer_block_eigenvalues, gamma0, k_grid,
    kernel_residual_of, sigma_phi, stability_boundary, HessianKind,
};
use ptdnls::stationary::{dimer_branch_e, dimer_solve, solve_correction, BreatherProfile, Expansion};
use ptdnls::C64;

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::profile::ProfileFile;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Self { name, value, limit, passed: value <= limit }
    }

    fn positive(name: &'static str, value: f64) -> Self {
        Self { name, value, limit: 0.0, passed: value > 0.0 }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs())
}

pub fn run_checks(prof: &BreatherProfile, cfg: &ExperimentConfig) -> CliResult<Vec<Check>> {
    let p = prof.params;
    let phi0 = prof.state();
    let mut out = Vec::new();

    out.push(Check::at_most("stationary_residual", prof.residual, 10.0 * cfg.tol));
    out.push(Check::at_most("parity_defect", prof.parity_defect(), 1e-10));

    let flow = rhs(&phi0, &p)?;
    let i = C64::new(0.0, 1.0);
    let frame_defect = (0..phi0.len())
        .map(|k| {
            let du = flow.u()[k] + i * p.e_freq * phi0.u()[k];
            let dv = flow.v()[k] + i * p.e_freq * phi0.v()[k];
            du.norm().max(dv.norm())
        })
        .fold(0.0, f64::max);
    out.push(Check::at_most("rotating_frame_defect", frame_defect, 1e-10));

    let psi = phi0.add_scaled(&sample_perturbation(prof, 0.05, cfg.seed), 1.0);
    let scale = 1.0 + psi.norm() * rhs(&psi, &p)?.norm();
    out.push(Check::at_most("norm_balance", norm_balance_residual(&psi, &p)?.abs() / scale, 1e-12));
    out.push(Check::at_most("energy_imaginary_part", energy_h_complex(&psi, &p).im.abs(), 1e-12));

    let turned = gauge_rotate(&psi, 0.7);
    let gauge = rel(energy_h(&psi, &p), energy_h(&turned, &p))
        .max(rel(charge_q(&psi), charge_q(&turned)))
        .max(rel(lambda_e(&psi, &p), lambda_e(&turned, &p)));
    out.push(Check::at_most("gauge_invariance", gauge, 1e-12));

    let padded = psi.padded(psi.n_half() + 3)?;
    out.push(Check::at_most("zero_padding", (energy_h(&padded, &p) - energy_h(&psi, &p)).abs(), 0.0));

    let a = prof.dimer.amplitude;
    let round_trip = dimer_solve(&p.with_e_freq(dimer_branch_e(a, &p)?))?.amplitude;
    out.push(Check::at_most("branch_round_trip", (round_trip - a).abs(), 1e-9));
    let mut closed = dimer_block_eigenvalues(&p, a)?;
    closed.sort_by(f64::total_cmp);
    let numeric = center_block_numeric(&p, a, p.e_freq)?;
    let block_gap = closed.iter().zip(numeric).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    out.push(Check::at_most("block_eigenvalues", block_gap, 1e-10));

    let extended = assemble_hessian(prof, HessianKind::Extended);
    let modified = assemble_hessian(prof, HessianKind::Modified);
    out.push(Check::at_most(
        "hessian_hermiticity",
        extended.hermiticity_defect().max(modified.hermiticity_defect()),
        0.0,
    ));
    let sigma = sigma_phi(prof);
    out.push(Check::at_most("kernel_residual", kernel_residual_of(&extended, &sigma), 1e-8));
    out.push(Check::positive("coercivity_c2", constrained_min_eigenvalue(&modified.matrix, &sigma.entries)));

    let ex = Expansion::new(prof);
    let mut gap: f64 = 0.0;
    for (j, size) in [1e-3, 1e-1, 1.0].iter().enumerate() {
        for k in 0..10u64 {
            let t = ex.terms(&sample_perturbation(prof, *size, cfg.seed + 100 * j as u64 + k))?;
            let s = t.n1.abs() + t.n2.abs() + t.n3.abs() + t.n4.abs();
            if s > 0.0 {
                gap = gap.max((t.delta - t.sum()).abs() / s);
            }
        }
    }
    out.push(Check::at_most("expansion_identity", gap, 1e-10));

    let corr = solve_correction(prof, cfg.tol)?;
    out.push(Check::at_most("correction_residual", corr.residual, 10.0 * cfg.tol));

    let m = modulation_decompose(&psi, prof)?;
    out.push(Check::at_most("modulation_orthogonality", m.ortho_residual / (1.0 + m.phi_norm()), 1e-10));

    let traj = integrate(&psi, &p, 10.0, default_dt(&p, &psi), 100)?;
    out.push(Check::at_most("energy_drift", traj.energy_drift(), 1e-8));
    out.push(Check::at_most("charge_drift", traj.charge_drift(), 1e-8));
    if p.omega > p.gamma + 4.0 * p.epsilon {
        let bound = traj.energy_bound_holds(&p, 1e-8);
        out.push(Check { name: "energy_lower_bound", value: if bound { 0.0 } else { 1.0 }, limit: 0.0, passed: bound });
    }

    let boundary = stability_boundary(p.omega, p.epsilon, 1e-4, &k_grid(1001))?;
    out.push(Check::at_most(
        "dispersion_threshold",
        (boundary - gamma0(p.omega, p.epsilon)).abs(),
        1e-4 * (1.0 + 1e-9),
    ));

    let text = ProfileFile::from_profile(prof, cfg.tol).to_json();
    let again = ProfileFile::parse(&text)?.to_json();
    let same = text == again;
    out.push(Check { name: "profile_round_trip", value: if same { 0.0 } else { 1.0 }, limit: 0.0, passed: same });

    Ok(out)
}
