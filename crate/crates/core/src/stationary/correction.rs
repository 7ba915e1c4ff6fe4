//! The near-identity correction `rho = (a, conj a, conj a, a)` that removes
//! the linear part of the energy difference.

use num_complex::Complex64 as C64;

use super::breather::{inf_norm, newton, BreatherProfile};
use crate::error::{Error, Result};
use crate::lattice::LatticeState;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionTerm {
    pub n_half: usize,
    pub a_profile: Vec<C64>,
    /// Infinity norm of the defect of the correction equation.
    pub residual: f64,
    pub iterations: usize,
}

impl CorrectionTerm {
    pub fn a_at(&self, n: isize) -> C64 {
        let i = n + self.n_half as isize;
        if i < 0 || i as usize >= self.a_profile.len() {
            C64::new(0.0, 0.0)
        } else {
            self.a_profile[i as usize]
        }
    }

    /// `rho` as a two-component perturbation `(a, conj a)`.
    pub fn perturbation(&self) -> LatticeState {
        LatticeState::from_profile(self.n_half, &self.a_profile).expect("profile length matches n_half")
    }

    /// `|a_0| / eps^2`.
    pub fn center_constant(&self, epsilon: f64) -> f64 {
        self.a_at(0).norm() / (epsilon * epsilon)
    }

    /// `max_{1 <= |n| <= n_max} |a_n| / eps^{|n|}`.
    pub fn tail_constant(&self, epsilon: f64, n_max: usize) -> f64 {
        (1..=n_max.min(self.n_half) as isize)
            .flat_map(|n| [n, -n])
            .map(|n| self.a_at(n).norm() / epsilon.powi(n.abs() as i32))
            .fold(0.0, f64::max)
    }
}

/// Defect of the correction equation for a given `a`, written term by term:
///
/// `E a_n δ_{n0} - Ω ā_n - iγ a_n - ε(Δā)_n - 12|U_n|² ā_n - 6(U_n² + Ū_n²) a_n
///  - 6 U_n (a_n² + ā_n²) - 12 Ū_n |a_n|² - 6|a_n|² ā_n - 2 a_n³ - E U_n (1 - δ_{n0})`.
pub fn correction_defect(profile: &BreatherProfile, a: &[C64]) -> Result<Vec<C64>> {
    let m = profile.u_profile.len();
    if a.len() != m {
        return Err(Error::SizeMismatch { expected: profile.n_half, found: a.len().saturating_sub(1) / 2 });
    }
    let p = &profile.params;
    let zero = C64::new(0.0, 0.0);
    let center = profile.n_half;
    Ok((0..m)
        .map(|i| {
            let (u, an) = (profile.u_profile[i], a[i]);
            let ab = an.conj();
            let lap =
                if i + 1 < m { a[i + 1].conj() } else { zero } - 2.0 * ab + if i > 0 { a[i - 1].conj() } else { zero };
            let delta = if i == center { 1.0 } else { 0.0 };
            p.e_freq * an * delta
                - p.omega * ab
                - I * p.gamma * an
                - p.epsilon * lap
                - 12.0 * u.norm_sqr() * ab
                - 6.0 * (u * u + u.conj() * u.conj()) * an
                - 6.0 * u * (an * an + ab * ab)
                - 12.0 * u.conj() * an.norm_sqr()
                - 6.0 * an.norm_sqr() * ab
                - 2.0 * an * an * an
                - p.e_freq * u * (1.0 - delta)
        })
        .collect())
}

/// Solves for `a` through the Euler–Lagrange system of `Λ_E` at `u = U + a`,
/// seeded at `a = 0`.
pub fn solve_correction(profile: &BreatherProfile, tol: f64) -> Result<CorrectionTerm> {
    let m = profile.u_profile.len();
    let mut e_sites = vec![0.0; m];
    e_sites[profile.n_half] = profile.params.e_freq;
    let (u, _, iterations) = newton(&profile.params, &e_sites, profile.u_profile.clone(), tol, 40)
        .map_err(|f| Error::Continuation { epsilon: profile.params.epsilon, residual: f.residual })?;
    let a_profile: Vec<C64> = u.iter().zip(&profile.u_profile).map(|(x, y)| x - y).collect();
    let residual = inf_norm(&correction_defect(profile, &a_profile)?);
    Ok(CorrectionTerm { n_half: profile.n_half, a_profile, residual, iterations })
}
