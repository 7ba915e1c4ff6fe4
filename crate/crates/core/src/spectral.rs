//! Hessians of the extended energy on the 4-component space `(u, ū, v, v̄)`,
//! their block spectra, the gauge kernel and the constrained coercivity constant.

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeState, Params};
use crate::stationary::{dimer_branch_e, BreatherProfile};

const I: C64 = C64::new(0.0, 1.0);

/// Relative threshold below which an eigenvalue counts as a zero mode.
pub const ZERO_MODE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianKind {
    /// `H''_E`, with `E` in every site block.
    Extended,
    /// `Λ''_E`, with `E` kept only in the central block.
    Modified,
}

/// Dense Hermitian matrix ordered site-major, `(u, ū, v, v̄)` within a site.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianMatrix {
    pub kind: HessianKind,
    pub n_half: usize,
    pub matrix: DMatrix<C64>,
}

/// Site block at `(u, v)` without the coupling contribution. Row `k` holds
/// the derivatives of `∂H/∂(conj of component k)`.
pub fn site_block(u: C64, v: C64, params: &Params, e_site: f64) -> Matrix4<C64> {
    let a = u.norm_sqr() + v.norm_sqr();
    let q = 2.0 * (u * v.conj()).re;
    let d = C64::new(params.omega + 4.0 * a, 0.0);
    let t = 2.0 * (u * u + v * v);
    let x = 4.0 * u * v;
    let g = I * params.gamma;
    let lo = -e_site - g + 4.0 * q;
    let hi = -e_site + g + 4.0 * q;
    Matrix4::new(
        d,
        t,
        lo,
        x, //
        t.conj(),
        d,
        x.conj(),
        hi, //
        hi,
        x,
        d,
        t, //
        x.conj(),
        lo,
        t.conj(),
        d,
    )
}

fn assemble(state: &LatticeState, params: &Params, kind: HessianKind) -> DMatrix<C64> {
    let m = state.len();
    let center = state.center();
    let eps = params.epsilon;
    let mut h = DMatrix::<C64>::zeros(4 * m, 4 * m);
    for (i, (&u, &v)) in state.u().iter().zip(state.v()).enumerate() {
        let e_site = match kind {
            HessianKind::Modified if i != center => 0.0,
            _ => params.e_freq,
        };
        let b = site_block(u, v, params, e_site);
        h.view_mut((4 * i, 4 * i), (4, 4)).copy_from(&b);
        for k in 0..4 {
            h[(4 * i + k, 4 * i + k)] -= 2.0 * eps;
            if i + 1 < m {
                h[(4 * i + k, 4 * (i + 1) + k)] = C64::new(eps, 0.0);
                h[(4 * (i + 1) + k, 4 * i + k)] = C64::new(eps, 0.0);
            }
        }
    }
    h
}

/// Hessian at the breather profile.
pub fn assemble_hessian(profile: &BreatherProfile, kind: HessianKind) -> HessianMatrix {
    assemble_hessian_at(&profile.state(), &profile.params, kind)
}

/// Hessian at an arbitrary state.
pub fn assemble_hessian_at(state: &LatticeState, params: &Params, kind: HessianKind) -> HessianMatrix {
    HessianMatrix { kind, n_half: state.n_half(), matrix: assemble(state, params, kind) }
}

/// `(u, ū, v, v̄)` per site.
pub fn extend(state: &LatticeState) -> DVector<C64> {
    DVector::from_iterator(
        4 * state.len(),
        state.u().iter().zip(state.v()).flat_map(|(&u, &v)| [u, u.conj(), v, v.conj()]),
    )
}

impl HessianMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |M - M^†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// The 4x4 diagonal block of site `i` (0-based array index).
    pub fn block(&self, i: usize) -> Matrix4<C64> {
        self.matrix.fixed_view::<4, 4>(4 * i, 4 * i).into_owned()
    }

    /// `⟨M φ, φ⟩` on the extension of a two-component state.
    pub fn quadratic_form(&self, phi: &LatticeState) -> Result<f64> {
        if phi.n_half() != self.n_half {
            return Err(Error::SizeMismatch { expected: self.n_half, found: phi.n_half() });
        }
        let x = extend(phi);
        Ok(x.dotc(&(&self.matrix * &x)).re)
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn block_eigenvalues(b: &Matrix4<C64>) -> [f64; 4] {
    let mut ev: Vec<f64> = b.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    [ev[0], ev[1], ev[2], ev[3]]
}

/// Gauge direction `σΦ` with site blocks `(U_n, -Ū_n, V_n, -V̄_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelVector {
    pub entries: DVector<C64>,
}

impl KernelVector {
    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }
}

pub fn sigma_phi(profile: &BreatherProfile) -> KernelVector {
    sigma_of(&profile.state())
}

pub fn sigma_of(state: &LatticeState) -> KernelVector {
    let entries = DVector::from_iterator(
        4 * state.len(),
        state.u().iter().zip(state.v()).flat_map(|(&u, &v)| [u, -u.conj(), v, -v.conj()]),
    );
    KernelVector { entries }
}

/// Closed forms `[0, μ1, μ2, μ3]` of the central block at `epsilon = 0`.
pub fn dimer_block_eigenvalues(params: &Params, amplitude: f64) -> Result<[f64; 4]> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParams(format!("block eigenvalues need A > 0, got {amplitude}")));
    }
    let (om, g) = (params.omega, params.gamma);
    let a2 = amplitude * amplitude;
    let mu1 = 2.0 * (om + 4.0 * a2);
    let q = om + 4.0 * a2;
    let root = ((om - 4.0 * a2).powi(2) + 16.0 * om * a2 * g * g / (q * q)).sqrt();
    Ok([0.0, mu1, om + 12.0 * a2 + root, om + 12.0 * a2 - root])
}

/// Numerical eigenvalues (ascending) of the central block of `Λ''_E` at
/// `epsilon = 0`, built from the dimer with amplitude `A` on the branch
/// `E = sign * E(A)`.
pub fn center_block_numeric(params: &Params, amplitude: f64, sign: f64) -> Result<[f64; 4]> {
    let e = sign.signum() * dimer_branch_e(amplitude, params)?;
    let a2 = amplitude * amplitude;
    let theta = 0.5 * f64::atan2(params.gamma / (params.omega + 4.0 * a2), e / (params.omega + 8.0 * a2));
    let u = C64::from_polar(amplitude, theta);
    Ok(block_eigenvalues(&site_block(u, u.conj(), params, e)))
}

/// `‖M σΦ‖ / ‖σΦ‖`.
pub fn kernel_residual_of(h: &HessianMatrix, k: &KernelVector) -> f64 {
    (&h.matrix * &k.entries).norm() / k.norm()
}

/// `‖H''_E σΦ‖ / ‖σΦ‖` at the breather.
pub fn kernel_residual(profile: &BreatherProfile) -> f64 {
    kernel_residual_of(&assemble_hessian(profile, HessianKind::Extended), &sigma_phi(profile))
}

/// Smallest eigenvalue of `M` restricted to the orthogonal complement of `k`,
/// via a Householder reflector sending `k` to a coordinate axis.
pub fn constrained_min_eigenvalue(m: &DMatrix<C64>, k: &DVector<C64>) -> f64 {
    let q = k / C64::new(k.norm(), 0.0);
    let j = (0..q.len()).max_by(|&a, &b| q[a].norm().total_cmp(&q[b].norm())).unwrap_or(0);
    let phase = if q[j].norm() > 0.0 { q[j] / q[j].norm() } else { C64::new(1.0, 0.0) };
    let mut w = q.clone();
    w[j] += phase;
    let ww = w.norm_squared();
    let n = m.nrows();
    // P = I - 2 w w^† / |w|^2
    let p = DMatrix::<C64>::identity(n, n) - (&w * w.adjoint()) * C64::new(2.0 / ww, 0.0);
    let pmp = &p * m * &p;
    let reduced = pmp.remove_row(j).remove_column(j);
    hermitian_eigenvalues(&reduced)[0]
}

/// `C2`: minimum of `Λ''_E` on the complement of `σΦ`.
pub fn coercivity_on_constrained(profile: &BreatherProfile) -> Result<f64> {
    let h = assemble_hessian(profile, HessianKind::Modified);
    let c2 = constrained_min_eigenvalue(&h.matrix, &sigma_phi(profile).entries);
    if c2 > 0.0 {
        Ok(c2)
    } else {
        Err(Error::CoercivityViolation { c2 })
    }
}

/// Minimum eigenvalue of `Λ''_E` without the gauge constraint.
pub fn unconstrained_min_eigenvalue(profile: &BreatherProfile) -> f64 {
    assemble_hessian(profile, HessianKind::Modified).eigenvalues()[0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Ascending eigenvalues of `Λ''_E`.
    pub eigenvalues: Vec<f64>,
    pub kernel_residual: f64,
    pub coercivity_c2: f64,
    pub negative_count: usize,
    pub zero_count: usize,
    pub positive_count: usize,
    /// Signature of `H''_E` as `(negative, zero, positive)`.
    pub extended_signature: (usize, usize, usize),
}

fn signature(ev: &[f64], scale: f64) -> (usize, usize, usize) {
    let tol = ZERO_MODE_TOL * scale;
    let neg = ev.iter().filter(|&&x| x < -tol).count();
    let pos = ev.iter().filter(|&&x| x > tol).count();
    (neg, ev.len() - neg - pos, pos)
}

fn matrix_scale(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues, kernel residual, `C2` and sign counts at one profile.
/// A non-positive `C2` is reported as [`Error::CoercivityViolation`].
pub fn spectral_report(profile: &BreatherProfile) -> Result<SpectralReport> {
    let modified = assemble_hessian(profile, HessianKind::Modified);
    let extended = assemble_hessian(profile, HessianKind::Extended);
    let k = sigma_phi(profile);
    let eigenvalues = modified.eigenvalues();
    let (negative_count, zero_count, positive_count) = signature(&eigenvalues, matrix_scale(&modified.matrix));
    let extended_signature = signature(&extended.eigenvalues(), matrix_scale(&extended.matrix));
    let coercivity_c2 = constrained_min_eigenvalue(&modified.matrix, &k.entries);
    if !(coercivity_c2 > 0.0) {
        return Err(Error::CoercivityViolation { c2: coercivity_c2 });
    }
    Ok(SpectralReport {
        eigenvalues,
        kernel_residual: kernel_residual_of(&extended, &k),
        coercivity_c2,
        negative_count,
        zero_count,
        positive_count,
        extended_signature,
    })
}

/// `λ±(k) = ±sqrt((Ω - ε ω_k)² - γ²)`, `ω_k = 4 sin²(k/2)`.
pub fn zero_equilibrium_dispersion(params: &Params, k: f64) -> (C64, C64) {
    let w = 4.0 * (0.5 * k).sin().powi(2);
    let d = params.omega - params.epsilon * w;
    let lam = C64::new(d * d - params.gamma * params.gamma, 0.0).sqrt();
    (lam, -lam)
}

/// Threshold `γ0 = Ω - 4ε` for `Ω > 0`, `|Ω|` for `Ω < 0`.
pub fn gamma0(omega: f64, epsilon: f64) -> f64 {
    if omega > 0.0 {
        omega - 4.0 * epsilon
    } else {
        omega.abs()
    }
}

/// Uniform grid on `[0, π]` with both endpoints.
pub fn k_grid(points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|i| std::f64::consts::PI * i as f64 / (n - 1) as f64).collect()
}

/// Every plane wave on the grid has a real, nonzero frequency.
pub fn zero_equilibrium_stable(params: &Params, ks: &[f64]) -> bool {
    ks.iter().all(|&k| {
        let w = 4.0 * (0.5 * k).sin().powi(2);
        let d = params.omega - params.epsilon * w;
        d * d - params.gamma * params.gamma > 0.0
    })
}

/// Largest `γ = j·dγ` for which the zero state is stable on the grid.
pub fn stability_boundary(omega: f64, epsilon: f64, d_gamma: f64, ks: &[f64]) -> Result<f64> {
    if !(d_gamma > 0.0) {
        return Err(Error::InvalidParams(format!("gamma step {d_gamma} must be positive")));
    }
    let mut last = 0.0;
    let limit = (omega.abs() + 4.0 * epsilon.abs()) / d_gamma + 2.0;
    let mut j = 1usize;
    while (j as f64) <= limit {
        let gamma = j as f64 * d_gamma;
        let p = Params { omega, gamma, epsilon, e_freq: 0.0 };
        if !zero_equilibrium_stable(&p, ks) {
            return Ok(last);
        }
        last = gamma;
        j += 1;
    }
    Ok(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::solve_breather;

    fn reference(eps: f64) -> BreatherProfile {
        let e = dimer_branch_e(0.5, &Params::new(0.75, 0.5, 0.0, 1.0).unwrap()).unwrap();
        solve_breather(&Params::new(0.75, 0.5, eps, e).unwrap(), 6, 1e-13).unwrap()
    }

    #[test]
    fn assembled_matrix_is_hermitian() {
        for kind in [HessianKind::Extended, HessianKind::Modified] {
            assert_eq!(assemble_hessian(&reference(0.05), kind).hermiticity_defect(), 0.0);
        }
    }

    #[test]
    fn kinds_differ_by_frequency_off_center() {
        let prof = reference(0.05);
        let e = prof.params.e_freq;
        let d = assemble_hessian(&prof, HessianKind::Extended).matrix
            - assemble_hessian(&prof, HessianKind::Modified).matrix;
        for i in 0..prof.u_profile.len() {
            for r in 0..4 {
                for c in 0..4 {
                    let want =
                        if i != prof.n_half && matches!((r, c), (0, 2) | (1, 3) | (2, 0) | (3, 1)) { -e } else { 0.0 };
                    assert_eq!(d[(4 * i + r, 4 * i + c)], C64::new(want, 0.0));
                }
            }
        }
        let off_block = d.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(off_block, 4 * (prof.u_profile.len() - 1));
    }

    #[test]
    fn off_center_block_has_double_eigenvalues() {
        let h = assemble_hessian(&reference(0.0), HessianKind::Modified);
        let ev = block_eigenvalues(&h.block(0));
        for (got, want) in ev.iter().zip([0.25, 0.25, 1.25, 1.25]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn reference_block_values() {
        let p = Params::new(0.75, 0.5, 0.0, 1.0).unwrap();
        let mu = dimer_block_eigenvalues(&p, 0.5).unwrap();
        assert_eq!(mu[1], 3.5);
        assert!((mu[2] - 4.304435).abs() < 1e-6 && (mu[3] - 3.195565).abs() < 1e-6);
        let num = center_block_numeric(&p, 0.5, 1.0).unwrap();
        let mut want = mu;
        want.sort_by(f64::total_cmp);
        for (a, b) in num.iter().zip(want) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(dimer_block_eigenvalues(&p, 0.0).is_err());
    }

    #[test]
    fn anti_continuum_coercivity() {
        let prof = reference(0.0);
        assert!((coercivity_on_constrained(&prof).unwrap() - 0.25).abs() < 1e-10);
        assert!(unconstrained_min_eigenvalue(&prof).abs() < 1e-12);
        assert!(kernel_residual(&prof) < 1e-15);
    }

    #[test]
    fn gauge_rotation_keeps_kernel_residual() {
        let prof = reference(0.05);
        let rotated = crate::lattice::gauge_rotate(&prof.state(), 0.7);
        let h = assemble_hessian_at(&rotated, &prof.params, HessianKind::Extended);
        let (a, b) = (kernel_residual(&prof), kernel_residual_of(&h, &sigma_of(&rotated)));
        assert!(a < 1e-12 && (a - b).abs() < 1e-13, "{a} {b}");
    }

    #[test]
    fn dispersion_examples() {
        let p = Params::new(0.75, 0.5, 0.0, 1.0).unwrap();
        let (lp, lm) = zero_equilibrium_dispersion(&p, 0.0);
        assert!((lp.re - 5f64.sqrt() / 4.0).abs() < 1e-15 && lp.im == 0.0 && lm == -lp);
        assert!(zero_equilibrium_stable(&p, &k_grid(101)));
        let eps = 0.1;
        let marginal = Params::new(0.75, gamma0(0.75, eps), eps, 1.0).unwrap();
        assert!(zero_equilibrium_dispersion(&marginal, std::f64::consts::PI).0.norm() < 1e-7);
        assert_eq!(gamma0(-0.75, 0.1), 0.75);
    }
}
