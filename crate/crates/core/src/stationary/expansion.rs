//! The energy difference `Δ = Λ_E(Φ + φ) - Λ_E(Φ)` and its split into
//! linear, quadratic, cubic and quartic parts.

use num_complex::Complex64 as C64;

use super::breather::BreatherProfile;
use super::correction::CorrectionTerm;
use crate::error::Result;
use crate::lattice::{lambda_e, LatticeState};
use crate::spectral::{assemble_hessian, HessianKind, HessianMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionTerms {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
    pub delta: f64,
}

impl ExpansionTerms {
    pub fn sum(&self) -> f64 {
        self.n1 + self.n2 + self.n3 + self.n4
    }
}

/// Coefficients `c_k` of `Δ(sφ) = c1 s + c2 s² + c3 s³ + c4 s⁴`, accumulated site by site
/// from the differences of the local densities so that no large terms cancel.
fn delta_coefficients(
    phi_base: &LatticeState,
    pert: &LatticeState,
    omega: f64,
    gamma: f64,
    eps: f64,
    e: f64,
) -> [f64; 4] {
    let (uu, vv) = (phi_base.u(), phi_base.v());
    let (pu, pv) = (pert.u(), pert.v());
    let m = uu.len();
    let center = phi_base.center();
    let mut c = [0.0; 4];
    for i in 0..m {
        let (u, v, du, dv) = (uu[i], vv[i], pu[i], pv[i]);
        let a = u.norm_sqr() + v.norm_sqr();
        let la = 2.0 * (u.conj() * du + v.conj() * dv).re;
        let qa = du.norm_sqr() + dv.norm_sqr();
        let q = 2.0 * (u * v.conj()).re;
        let lin = u * dv.conj() + du * v.conj();
        let quad = du * dv.conj();
        let lq = 2.0 * lin.re;
        let qq = 2.0 * quad.re;
        // (a + da)^2 - a^2 and (q + dq)^2 - q^2
        c[0] += 2.0 * a * la + 2.0 * q * lq;
        c[1] += 2.0 * a * qa + la * la + 2.0 * q * qq + lq * lq;
        c[2] += 2.0 * (la * qa + lq * qq);
        c[3] += qa * qa + qq * qq;
        c[0] += omega * la - 2.0 * gamma * lin.im;
        c[1] += omega * qa - 2.0 * gamma * quad.im;
        if i == center {
            c[0] -= e * lq;
            c[1] -= e * qq;
        }
    }
    // bonds (i, i+1) for i = -1..m-1 with zero exterior
    let zero = C64::new(0.0, 0.0);
    let at = |x: &[C64], i: isize| if i < 0 || i as usize >= m { zero } else { x[i as usize] };
    for i in -1..m as isize {
        for (x, dx) in [(uu, pu), (vv, pv)] {
            let w = at(x, i + 1) - at(x, i);
            let dw = at(dx, i + 1) - at(dx, i);
            c[0] -= eps * 2.0 * (w.conj() * dw).re;
            c[1] -= eps * dw.norm_sqr();
        }
    }
    c
}

fn coefficients(profile: &BreatherProfile, phi: &LatticeState) -> Result<[f64; 4]> {
    let base = profile.state();
    base.require_same_lattice(phi)?;
    let p = &profile.params;
    Ok(delta_coefficients(&base, phi, p.omega, p.gamma, p.epsilon, p.e_freq))
}

/// `Δ(φ)` evaluated from per-site differences.
pub fn delta_of(profile: &BreatherProfile, phi: &LatticeState) -> Result<f64> {
    let c = coefficients(profile, phi)?;
    Ok(c[0] + c[1] + c[2] + c[3])
}

/// `Δ(φ)` as the difference of two `Λ_E` evaluations.
pub fn delta_two_evaluations(profile: &BreatherProfile, phi: &LatticeState) -> Result<f64> {
    let base = profile.state();
    base.require_same_lattice(phi)?;
    let shifted = base.add_scaled(phi, 1.0);
    Ok(lambda_e(&shifted, &profile.params) - lambda_e(&base, &profile.params))
}

/// `N1(φ) = E Σ_{n≠0} (V̄_n u_n + V_n ū_n + Ū_n v_n + U_n v̄_n)`.
pub fn linear_term(profile: &BreatherProfile, phi: &LatticeState) -> Result<f64> {
    let base = profile.state();
    base.require_same_lattice(phi)?;
    let center = base.center();
    let s: f64 = (0..base.len())
        .filter(|&i| i != center)
        .map(|i| 2.0 * (base.v()[i].conj() * phi.u()[i] + base.u()[i].conj() * phi.v()[i]).re)
        .sum();
    Ok(profile.params.e_freq * s)
}

/// `N2(φ) = ½⟨H''_E φ, φ⟩ + E Σ_{n≠0} (v̄_n u_n + v_n ū_n)` with a prebuilt extended Hessian.
pub fn quadratic_term(profile: &BreatherProfile, hessian: &HessianMatrix, phi: &LatticeState) -> Result<f64> {
    let form = hessian.quadratic_form(phi)?;
    let center = phi.center();
    let s: f64 = (0..phi.len()).filter(|&i| i != center).map(|i| 2.0 * (phi.v()[i].conj() * phi.u()[i]).re).sum();
    Ok(0.5 * form + profile.params.e_freq * s)
}

/// Reusable evaluator holding the extended Hessian of one profile.
#[derive(Debug, Clone)]
pub struct Expansion<'a> {
    profile: &'a BreatherProfile,
    hessian: HessianMatrix,
}

impl<'a> Expansion<'a> {
    pub fn new(profile: &'a BreatherProfile) -> Self {
        Self { profile, hessian: assemble_hessian(profile, HessianKind::Extended) }
    }

    /// `N1`, `N2` from their closed forms; `N3`, `N4` as the cubic and quartic
    /// coefficients of the polynomial `s -> Δ(sφ)`.
    pub fn terms(&self, phi: &LatticeState) -> Result<ExpansionTerms> {
        let c = coefficients(self.profile, phi)?;
        Ok(ExpansionTerms {
            n1: linear_term(self.profile, phi)?,
            n2: quadratic_term(self.profile, &self.hessian, phi)?,
            n3: c[2],
            n4: c[3],
            delta: c[0] + c[1] + c[2] + c[3],
        })
    }
}

pub fn expansion_terms(profile: &BreatherProfile, phi: &LatticeState) -> Result<ExpansionTerms> {
    Expansion::new(profile).terms(phi)
}

/// `Δ0 = N1(ρ) + N2(ρ) + N3(ρ) + N4(ρ)`.
pub fn delta_zero(profile: &BreatherProfile, correction: &CorrectionTerm) -> Result<f64> {
    Ok(expansion_terms(profile, &correction.perturbation())?.sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Params;
    use crate::stationary::{dimer_branch_e, solve_breather, solve_correction};

    fn profile(eps: f64) -> BreatherProfile {
        let e = dimer_branch_e(0.5, &Params::new(0.75, 0.5, 0.0, 1.0).unwrap()).unwrap();
        solve_breather(&Params::new(0.75, 0.5, eps, e).unwrap(), 8, 1e-13).unwrap()
    }

    fn wobble(n_half: usize, scale: f64, seed: u64) -> LatticeState {
        let mut x = seed;
        let mut next = move || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let m = 2 * n_half + 1;
        let u = (0..m).map(|_| C64::new(next(), next())).collect();
        let v = (0..m).map(|_| C64::new(next(), next())).collect();
        let s = LatticeState::new(n_half, u, v).unwrap();
        let n = s.norm();
        s.scaled(scale / n)
    }

    #[test]
    fn zero_perturbation() {
        let prof = profile(0.05);
        let t = expansion_terms(&prof, &LatticeState::zeros(8)).unwrap();
        assert_eq!((t.n1, t.n2, t.n3, t.n4, t.delta), (0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn both_delta_forms_agree() {
        let prof = profile(0.05);
        for seed in 0..10 {
            let phi = wobble(8, 0.3, seed);
            let a = delta_of(&prof, &phi).unwrap();
            let b = delta_two_evaluations(&prof, &phi).unwrap();
            assert!((a - b).abs() < 1e-13 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn center_only_perturbation_has_no_linear_part() {
        let prof = profile(0.05);
        let mut phi = LatticeState::zeros(8);
        phi.u_mut()[8] = C64::new(0.01, -0.02);
        phi.v_mut()[8] = C64::new(0.03, 0.0);
        assert_eq!(linear_term(&prof, &phi).unwrap(), 0.0);
    }

    #[test]
    fn gauge_direction_is_second_order() {
        let prof = profile(0.05);
        let base = prof.state();
        let mut prev = None;
        for tau in [1e-2, 5e-3] {
            let phi = crate::lattice::gauge_rotate(&base, std::f64::consts::FRAC_PI_2).scaled(tau);
            let d = delta_of(&prof, &phi).unwrap().abs();
            assert!(d < 10.0 * tau * tau, "tau {tau}: {d}");
            if let Some(p) = prev {
                let ratio: f64 = p / d;
                assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
            }
            prev = Some(d);
        }
    }

    #[test]
    fn delta_zero_vanishes_without_coupling() {
        let prof = profile(0.0);
        let c = solve_correction(&prof, 1e-13).unwrap();
        assert_eq!(delta_zero(&prof, &c).unwrap(), 0.0);
    }
}
