use ptdnls::dynamics::{
    default_dt, delta_rate_check, integrate, integrate_drift_gated, integrate_observed, modulation_decompose,
    sample_flow, sample_perturbation, step_rk4, unwrap_near, OrbitFrame, Rk4,
};
use ptdnls::lattice::{local_charge, local_charge_flux, pt_apply, LatticeState, Params};
use ptdnls::stationary::{dimer_branch_e, solve_breather, solve_correction, BreatherProfile};
use ptdnls::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference(eps: f64, n_half: usize) -> BreatherProfile {
    let e = dimer_branch_e(0.5, &Params::new(0.75, 0.5, 0.0, 1.0).unwrap()).unwrap();
    solve_breather(&Params::new(0.75, 0.5, eps, e).unwrap(), n_half, 1e-13).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, n_half: usize, scale: f64) -> LatticeState {
    let m = 2 * n_half + 1;
    let mut draw = || (0..m).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let u = draw();
    let v = draw();
    LatticeState::new(n_half, u, v).unwrap().scaled(scale)
}

#[test]
fn zero_state_is_fixed() {
    let p = Params::new(0.75, 0.5, 0.1, 1.0).unwrap();
    let z = LatticeState::zeros(5);
    assert_eq!(step_rk4(&z, &p, 0.01).unwrap(), z);
    assert!(step_rk4(&z, &p, 0.0).is_err());
}

#[test]
fn anti_continuum_breather_returns_after_one_period() {
    let prof = reference(0.0, 3);
    let e = prof.params.e_freq;
    let period = 2.0 * std::f64::consts::PI / e;
    let traj = integrate(&prof.state(), &prof.params, period, 1e-3, 1000).unwrap();
    let back = traj.final_state.unwrap();
    assert!(back.max_abs_diff(&prof.state()) < 1e-9, "{}", back.max_abs_diff(&prof.state()));
}

#[test]
fn fourth_order_convergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = Params::new(0.75, 0.5, 0.1, 2.0).unwrap();
    let psi = random_state(&mut rng, 4, 0.4);
    let run = |dt: f64| integrate(&psi, &p, 1.0, dt, 1_000_000).unwrap().final_state.unwrap();
    let fine = run(1e-3);
    let e1 = run(0.04).max_abs_diff(&fine);
    let e2 = run(0.02).max_abs_diff(&fine);
    let ratio = e1 / e2;
    assert!((ratio / 16.0 - 1.0).abs() < 0.15, "ratio {ratio}");
}

#[test]
fn conserved_quantities_over_long_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = Params::new(0.75, 0.5, 0.05, 2.6).unwrap();
    for _ in 0..3 {
        let psi = random_state(&mut rng, 10, 0.3);
        let traj = integrate(&psi, &p, 50.0, default_dt(&p, &psi), 100).unwrap();
        assert!(traj.energy_drift() < 1e-8, "H drift {}", traj.energy_drift());
        assert!(traj.charge_drift() < 1e-8, "Q drift {}", traj.charge_drift());
    }
}

#[test]
fn drift_gate_refines_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = Params::new(0.75, 0.5, 0.05, 2.6).unwrap();
    let psi = random_state(&mut rng, 6, 0.8);
    let traj = integrate_drift_gated(&psi, &p, 5.0, 0.05, 0.5, 1e-8, 8).unwrap();
    assert!(traj.energy_drift() < 1e-8);
    assert!(traj.dt < 0.05);
    assert_eq!(traj.records.len(), 11);
}

fn evolve(psi: &LatticeState, p: &Params, t: f64, steps: usize) -> LatticeState {
    let mut rk = Rk4::new(psi.n_half());
    let mut s = psi.clone();
    let h = t / steps as f64;
    for _ in 0..steps {
        rk.step(&mut s, p, h);
    }
    s
}

#[test]
fn pt_symmetric_data_stay_pt_symmetric_along_trajectory() {
    let prof = reference(0.05, 10);
    let mut psi = prof.state();
    let pert = sample_perturbation(&prof, 0.05, 2);
    let m = psi.len();
    for i in 0..m {
        let w = 0.5 * (pert.u()[i] + pert.u()[m - 1 - i]);
        psi.u_mut()[i] += w;
        psi.v_mut()[i] += w.conj();
    }
    assert!(psi.is_pt_symmetric(1e-15));
    for t in [2.5, 5.0, 10.0] {
        let fwd = evolve(&psi, &prof.params, t, 10_000);
        let bwd = evolve(&psi, &prof.params, -t, 10_000);
        // v(t) = conj(u(-t)), u(t) = conj(v(-t)), and both fields stay even
        assert!(fwd.max_abs_diff(&pt_apply(&bwd, true)) < 1e-8);
        for n in 1..=10isize {
            assert!((fwd.u_at(n) - fwd.u_at(-n)).norm() < 1e-8);
            assert!((fwd.v_at(n) - fwd.v_at(-n)).norm() < 1e-8);
        }
    }
}

#[test]
fn local_flux_matches_finite_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = Params::new(0.75, 0.5, 0.2, 1.0).unwrap();
    let psi = random_state(&mut rng, 6, 0.5);
    let exact = local_charge_flux(&psi, &p).unwrap();
    let errs: Vec<f64> = [1e-2, 5e-3]
        .iter()
        .map(|&h| {
            let plus = evolve(&psi, &p, h, 10);
            let minus = evolve(&psi, &p, -h, 10);
            let fd = (local_charge(&plus) - local_charge(&minus)) / (2.0 * h);
            (fd - exact).abs()
        })
        .collect();
    assert!(errs[0] < 1e-3, "{errs:?}");
    assert!((errs[0] / errs[1] - 4.0).abs() < 0.5, "{errs:?}");
}

#[test]
fn alpha_dot_matches_phase_finite_differences() {
    let prof = reference(0.05, 10);
    let frame = OrbitFrame::new(&prof);
    let psi0 = prof.state().add_scaled(&sample_perturbation(&prof, 0.02, 4), 1.0);
    let dt = 1e-3;
    let mut alphas = Vec::new();
    let mut model = Vec::new();
    integrate_observed(&psi0, &prof.params, 20.0, dt, |k, _, s| {
        if k % 10 == 0 || k % 10 == 1 || k % 10 == 9 {
            let m = frame.decompose(s, 1.0)?;
            let prev = alphas.last().map(|&(_, a)| a).unwrap_or(m.alpha);
            alphas.push((k, unwrap_near(prev, m.alpha)));
            if k % 10 == 0 {
                model.push((k, frame.alpha_dot(&m)?.value));
            }
        }
        Ok(true)
    })
    .unwrap();
    let lookup = |k: usize| alphas.iter().find(|(j, _)| *j == k).map(|(_, a)| *a);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &(k, ad) in &model {
        if let (Some(a), Some(b)) = (lookup(k.wrapping_sub(1)), lookup(k + 1)) {
            let fd = (b - a) / (2.0 * dt);
            worst = worst.max((fd - ad).abs());
            scale = scale.max((ad - prof.params.e_freq).abs());
        }
    }
    assert!(scale > 1e-4, "perturbation too weak to test: {scale}");
    assert!(worst < 1e-5, "alpha dot mismatch {worst} (excess scale {scale})");
}

#[test]
fn modulation_of_perturbed_breather() {
    let prof = reference(0.05, 20);
    let pert = sample_perturbation(&prof, 1e-3, 9);
    let m = modulation_decompose(&prof.state().add_scaled(&pert, 1.0), &prof).unwrap();
    let sigma_norm = (2.0 * prof.state().norm_sq()).sqrt();
    assert!(m.ortho_residual <= 1e-10 * sigma_norm * (1.0 + m.phi_norm()));
    assert!(m.phi_norm() <= 1.01e-3);
}

#[test]
fn delta_rate_follows_flux_identity() {
    let mut maxima = Vec::new();
    for eps in [0.025, 0.05] {
        let prof = reference(eps, 12);
        let corr = solve_correction(&prof, 1e-13).unwrap();
        let psi0 = prof.state().add_scaled(&sample_perturbation(&prof, 0.01, 1), 1.0);
        let samples = sample_flow(&prof, &psi0, 20.0, 1e-3, 20).unwrap();
        let rep = delta_rate_check(&samples, &prof, &corr).unwrap();
        assert!(rep.max_fd_mismatch < 1e-6 * (1.0 + rep.max_rate) + 1e-9, "{rep:?}");
        assert!(rep.envelope_holds, "{rep:?}");
        assert!(rep.gronwall_short_holds && rep.gronwall_long_holds, "{rep:?}");
        maxima.push(rep.max_rate);
    }
    let growth = maxima[1] / maxima[0];
    assert!(growth > 1.0 && growth < 4.0, "{maxima:?}");
}

#[test]
fn delta_is_conserved_without_coupling() {
    let prof = reference(0.0, 6);
    let corr = solve_correction(&prof, 1e-13).unwrap();
    let psi0 = prof.state().add_scaled(&sample_perturbation(&prof, 0.01, 1), 1.0);
    let samples = sample_flow(&prof, &psi0, 10.0, 1e-3, 50).unwrap();
    let rep = delta_rate_check(&samples, &prof, &corr).unwrap();
    assert_eq!(rep.max_rate, 0.0);
    assert!(rep.max_fd_mismatch < 1e-9, "{rep:?}");
}
