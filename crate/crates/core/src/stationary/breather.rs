//! Newton continuation of the single-site breather in the coupling `epsilon`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::dimer::{dimer_solve, DimerSolution};
use crate::error::{Error, Result};
use crate::lattice::{LatticeState, Params};

const I: C64 = C64::new(0.0, 1.0);

/// Knobs for [`solve_breather_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target infinity norm of the stationary defect.
    pub tol: f64,
    pub max_iter: usize,
    pub eps_max: f64,
    /// Upper bound on accepted continuation steps.
    pub max_steps: usize,
    /// Refuse when `|E| - E0` falls below this.
    pub min_gap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 40, eps_max: 0.2, max_steps: 200, min_gap: 1e-8 }
    }
}

/// Converged stationary profile `U_n`; the second component is `V_n = conj(U_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BreatherProfile {
    pub params: Params,
    pub n_half: usize,
    pub u_profile: Vec<C64>,
    pub residual: f64,
    pub iterations: usize,
    pub continuation_steps: usize,
    pub dimer: DimerSolution,
}

impl BreatherProfile {
    /// The breather as a lattice state `(U, conj U)`.
    pub fn state(&self) -> LatticeState {
        LatticeState::from_profile(self.n_half, &self.u_profile).expect("profile length matches n_half")
    }

    pub fn u_at(&self, n: isize) -> C64 {
        let i = n + self.n_half as isize;
        if i < 0 || i as usize >= self.u_profile.len() {
            C64::new(0.0, 0.0)
        } else {
            self.u_profile[i as usize]
        }
    }

    /// `|U_0 - A e^{i theta}|`.
    pub fn center_offset(&self) -> f64 {
        (self.u_at(0) - self.dimer.u0()).norm()
    }

    /// `max_n |U_{-n} - U_n|`.
    pub fn parity_defect(&self) -> f64 {
        (1..=self.n_half as isize).map(|n| (self.u_at(n) - self.u_at(-n)).norm()).fold(0.0, f64::max)
    }

    /// Least-squares slope of `ln|U_n|` against `|n|` over `lo <= |n| <= hi`, both sides.
    pub fn decay_slope(&self, lo: usize, hi: usize) -> Result<f64> {
        if lo < 1 || hi <= lo || hi > self.n_half {
            return Err(Error::InvalidParams(format!(
                "decay fit window {lo}..={hi} must lie in 1..={} with at least two sites",
                self.n_half
            )));
        }
        let mut pts = Vec::with_capacity(2 * (hi - lo + 1));
        for k in lo..=hi {
            for n in [k as isize, -(k as isize)] {
                let m = self.u_at(n).norm();
                if !(m > 0.0) {
                    return Err(Error::InvalidState(format!("U_{n} vanishes; decay slope undefined")));
                }
                pts.push((k as f64, m.ln()));
            }
        }
        Ok(ls_slope(&pts))
    }
}

pub(crate) fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Defect of `E_n U_n = eps (ΔŪ)_n + i gamma U_n + Omega Ū_n + 6|U_n|^2 Ū_n + 2 U_n^3`,
/// returned as right side minus left side. `e_sites[n]` is the site frequency.
pub(crate) fn stationary_defect(u: &[C64], params: &Params, e_sites: &[f64]) -> Vec<C64> {
    let m = u.len();
    let zero = C64::new(0.0, 0.0);
    (0..m)
        .map(|i| {
            let c = u[i].conj();
            let left = if i > 0 { u[i - 1].conj() } else { zero };
            let right = if i + 1 < m { u[i + 1].conj() } else { zero };
            params.epsilon * (right - 2.0 * c + left)
                + I * params.gamma * u[i]
                + params.omega * c
                + 6.0 * u[i].norm_sqr() * c
                + 2.0 * u[i] * u[i] * u[i]
                - e_sites[i] * u[i]
        })
        .collect()
}

pub(crate) fn inf_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Jacobian of [`stationary_defect`] in the real unknowns `(Re U_n, Im U_n)`.
fn jacobian(u: &[C64], params: &Params, e_sites: &[f64]) -> DMatrix<f64> {
    let m = u.len();
    let eps = params.epsilon;
    let mut j = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for i in 0..m {
        let (z, c) = (u[i], u[i].conj());
        let a = I * params.gamma - e_sites[i] + 6.0 * (c * c + z * z);
        let b = C64::new(params.omega + 12.0 * z.norm_sqr() - 2.0 * eps, 0.0);
        let (p, q) = (a + b, a - b);
        j[(2 * i, 2 * i)] = p.re;
        j[(2 * i + 1, 2 * i)] = p.im;
        j[(2 * i, 2 * i + 1)] = -q.im;
        j[(2 * i + 1, 2 * i + 1)] = q.re;
        for k in [i.wrapping_sub(1), i + 1] {
            if k < m {
                j[(2 * i, 2 * k)] = eps;
                j[(2 * i + 1, 2 * k + 1)] = -eps;
            }
        }
    }
    j
}

#[derive(Debug)]
pub(crate) struct NewtonFailure {
    pub residual: f64,
    pub singular: bool,
}

/// Plain Newton on the stationary defect with site-dependent frequencies.
pub(crate) fn newton(
    params: &Params,
    e_sites: &[f64],
    mut u: Vec<C64>,
    tol: f64,
    max_iter: usize,
) -> std::result::Result<(Vec<C64>, f64, usize), NewtonFailure> {
    let m = u.len();
    let mut f = stationary_defect(&u, params, e_sites);
    let mut res = inf_norm(&f);
    let start = res.max(1e-300);
    for it in 0..=max_iter {
        if res <= tol {
            return Ok((u, res, it));
        }
        if it == max_iter || !res.is_finite() || res > 1e6 * start.max(1.0) {
            break;
        }
        let rhs = DVector::from_iterator(2 * m, f.iter().flat_map(|z| [-z.re, -z.im]));
        let lu = jacobian(&u, params, e_sites).lu();
        let Some(step) = lu.solve(&rhs) else {
            return Err(NewtonFailure { residual: res, singular: true });
        };
        if step.iter().any(|x| !x.is_finite()) {
            return Err(NewtonFailure { residual: res, singular: true });
        }
        for (i, z) in u.iter_mut().enumerate() {
            *z += C64::new(step[2 * i], step[2 * i + 1]);
        }
        f = stationary_defect(&u, params, e_sites);
        res = inf_norm(&f);
    }
    Err(NewtonFailure { residual: res, singular: false })
}

/// [`solve_breather_with`] using default options and the given tolerance.
pub fn solve_breather(params: &Params, n_half: usize, tol: f64) -> Result<BreatherProfile> {
    solve_breather_with(params, n_half, &SolverOptions { tol, ..SolverOptions::default() })
}

/// Continues the dimer `U_0 = A e^{i theta}` from `epsilon = 0` to `params.epsilon`.
///
/// Direct Newton at the target coupling first; on failure, steps `epsilon`
/// up from zero, doubling the step after each success and halving it after
/// each failure.
pub fn solve_breather_with(params: &Params, n_half: usize, opts: &SolverOptions) -> Result<BreatherProfile> {
    params.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance {} must be positive", opts.tol)));
    }
    if params.epsilon > opts.eps_max {
        return Err(Error::InvalidParams(format!("epsilon = {} exceeds eps_max = {}", params.epsilon, opts.eps_max)));
    }
    let dimer = dimer_solve(params)?;
    let e0 = params.e0().unwrap_or(0.0);
    let gap = params.e_freq.abs() - e0;
    if gap < opts.min_gap {
        return Err(Error::NearBifurcation { e_abs: params.e_freq.abs(), gap });
    }

    let m = 2 * n_half + 1;
    let e_sites = vec![params.e_freq; m];
    let mut seed = vec![C64::new(0.0, 0.0); m];
    seed[n_half] = dimer.u0();

    let near = |residual: f64, singular: bool, epsilon: f64| {
        if singular {
            Error::NearBifurcation { e_abs: params.e_freq.abs(), gap }
        } else {
            Error::Continuation { epsilon, residual }
        }
    };

    let build = |u_profile: Vec<C64>, residual, iterations, continuation_steps| BreatherProfile {
        params: *params,
        n_half,
        u_profile,
        residual,
        iterations,
        continuation_steps,
        dimer,
    };

    let direct = newton(params, &e_sites, seed.clone(), opts.tol, opts.max_iter);
    let first_failure = match direct {
        Ok((u, res, it)) => return Ok(build(u, res, it, 0)),
        Err(fail) => fail,
    };
    if params.epsilon == 0.0 {
        return Err(near(first_failure.residual, first_failure.singular, 0.0));
    }

    let target = params.epsilon;
    let mut current = 0.0;
    let mut u = seed;
    let mut step = target / 4.0;
    let mut steps = 0;
    let mut iterations = 0;
    let mut last_residual = first_failure.residual;
    while current < target {
        if steps >= opts.max_steps || step < target * 1e-8 {
            return Err(Error::Continuation { epsilon: current, residual: last_residual });
        }
        let next = (current + step).min(target);
        let p = params.with_epsilon(next);
        match newton(&p, &e_sites, u.clone(), opts.tol, opts.max_iter) {
            Ok((v, res, it)) => {
                u = v;
                current = next;
                steps += 1;
                iterations += it;
                last_residual = res;
                step *= 2.0;
            }
            Err(fail) if fail.singular => return Err(near(fail.residual, true, next)),
            Err(fail) => {
                last_residual = fail.residual;
                step *= 0.5;
            }
        }
    }
    Ok(build(u, last_residual, iterations, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::dimer::dimer_branch_e;

    fn reference(eps: f64) -> Params {
        let e = dimer_branch_e(0.5, &Params::new(0.75, 0.5, 0.0, 1.0).unwrap()).unwrap();
        Params::new(0.75, 0.5, eps, e).unwrap()
    }

    #[test]
    fn anti_continuum_profile_is_exact_dimer() {
        let prof = solve_breather(&reference(0.0), 20, 1e-12).unwrap();
        assert_eq!(prof.u_at(0), prof.dimer.u0());
        for n in 1..=20 {
            assert_eq!(prof.u_at(n), C64::new(0.0, 0.0));
            assert_eq!(prof.u_at(-n), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = reference(0.07);
        let u: Vec<C64> = (0..5).map(|k| C64::new(0.3 + 0.1 * k as f64, 0.05 * k as f64 - 0.1)).collect();
        let e_sites = vec![p.e_freq; 5];
        let j = jacobian(&u, &p, &e_sites);
        let h = 1e-6;
        for col in 0..10 {
            let mut up = u.clone();
            let mut dn = u.clone();
            let d = if col % 2 == 0 { C64::new(h, 0.0) } else { C64::new(0.0, h) };
            up[col / 2] += d;
            dn[col / 2] -= d;
            let fp = stationary_defect(&up, &p, &e_sites);
            let fm = stationary_defect(&dn, &p, &e_sites);
            for row in 0..10 {
                let dz = (fp[row / 2] - fm[row / 2]) / (2.0 * h);
                let fd = if row % 2 == 0 { dz.re } else { dz.im };
                assert!((fd - j[(row, col)]).abs() < 1e-7, "({row},{col}) {fd} vs {}", j[(row, col)]);
            }
        }
    }

    #[test]
    fn reference_breather_converges_and_is_even() {
        let prof = solve_breather(&reference(0.05), 20, 1e-12).unwrap();
        assert!(prof.residual < 1e-12);
        assert!(prof.parity_defect() < 1e-11);
        assert!(prof.center_offset() < 0.05);
        assert_eq!(prof.continuation_steps, 0);
    }

    #[test]
    fn decay_rate_follows_gap_scaled_coupling() {
        // Leading-order tail recurrence gives |U_{n+1}|/|U_n| ~ eps/(|E| - E0).
        for eps in [0.02, 0.05, 0.1] {
            let p = reference(eps);
            let prof = solve_breather(&p, 20, 1e-12).unwrap();
            let rate = prof.decay_slope(2, 6).unwrap().exp();
            let predicted = eps / (p.e_freq.abs() - p.e0().unwrap());
            assert!((rate / predicted - 1.0).abs() < 0.15, "eps={eps}: {rate} vs {predicted}");
        }
    }

    #[test]
    fn continuation_fallback_reaches_larger_coupling() {
        let p = reference(0.2);
        let prof = solve_breather(&p, 10, 1e-12).unwrap();
        assert!(prof.residual < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_input() {
        assert!(matches!(solve_breather(&reference(0.3), 10, 1e-12), Err(Error::InvalidParams(_))));
        let at_edge = reference(0.05).with_e_freq(5f64.sqrt() / 4.0 + 1e-10);
        assert!(matches!(solve_breather(&at_edge, 10, 1e-12), Err(Error::NearBifurcation { .. })));
        let gap = reference(0.05).with_e_freq(0.3);
        assert!(matches!(solve_breather(&gap, 10, 1e-12), Err(Error::OutOfBranch { .. })));
    }

    #[test]
    fn impossible_tolerance_reports_continuation_failure() {
        let err = solve_breather_with(
            &reference(0.05),
            10,
            &SolverOptions { tol: 1e-30, max_iter: 8, ..SolverOptions::default() },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Continuation { .. }));
    }
}
