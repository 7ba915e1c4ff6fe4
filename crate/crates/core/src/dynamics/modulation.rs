//! Modulation decomposition `psi = e^{-i alpha} (Phi + phi)` with `phi`
//! orthogonal to the gauge direction, and the phase velocity `d alpha/dt`.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{gauge_rotate, vector_field_into, LatticeState, Params};
use crate::spectral::site_block;
use crate::stationary::BreatherProfile;

const I: C64 = C64::new(0.0, 1.0);

/// Number of phases sampled before the Newton refinement.
pub const SCAN_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationState {
    /// Phase in `(-pi, pi]`.
    pub alpha: f64,
    pub phi: LatticeState,
    /// `|<sigma Phi, phi>|` on the extended space.
    pub ortho_residual: f64,
}

impl ModulationState {
    pub fn phi_norm(&self) -> f64 {
        self.phi.norm()
    }
}

/// Breather data reused across many decompositions.
#[derive(Debug, Clone)]
pub struct OrbitFrame {
    params: Params,
    phi0: LatticeState,
    phi0_norm_sq: f64,
    sigma_norm: f64,
    /// Extended Hessian site blocks without the coupling part.
    blocks: Vec<Matrix4<C64>>,
    f_phi0: LatticeState,
}

fn i_times_field(state: &LatticeState, params: &Params) -> LatticeState {
    let mut out = LatticeState::zeros(state.n_half());
    vector_field_into(state, params, &mut out);
    out.u_mut().iter_mut().for_each(|z| *z *= I);
    out.v_mut().iter_mut().for_each(|z| *z *= I);
    out
}

impl OrbitFrame {
    pub fn new(profile: &BreatherProfile) -> Self {
        let phi0 = profile.state();
        let params = profile.params;
        let blocks = phi0.u().iter().zip(phi0.v()).map(|(&u, &v)| site_block(u, v, &params, params.e_freq)).collect();
        let phi0_norm_sq = phi0.norm_sq();
        Self {
            f_phi0: i_times_field(&phi0, &params),
            sigma_norm: (2.0 * phi0_norm_sq).sqrt(),
            phi0_norm_sq,
            blocks,
            params,
            phi0,
        }
    }

    pub fn breather(&self) -> &LatticeState {
        &self.phi0
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// `z = sum(conj(U) u + conj(V) v)`.
    fn overlap(&self, psi: &LatticeState) -> C64 {
        self.phi0.inner(psi)
    }

    /// `<sigma Phi, phi>` on the extended space equals `2i Im <Phi, phi>`.
    fn ortho(&self, phi: &LatticeState) -> f64 {
        2.0 * self.phi0.inner(phi).im.abs()
    }

    /// Decomposes `psi`; fails when the orbit distance exceeds `nu0`.
    pub fn decompose(&self, psi: &LatticeState, nu0: f64) -> Result<ModulationState> {
        self.phi0.require_same_lattice(psi)?;
        let z = self.overlap(psi);
        let base = psi.norm_sq() + self.phi0_norm_sq;
        let dist_sq = |a: f64| base - 2.0 * (C64::from_polar(1.0, a) * z).re;
        let mut alpha = (0..SCAN_POINTS)
            .map(|j| -PI + 2.0 * PI * (j as f64 + 0.5) / SCAN_POINTS as f64)
            .min_by(|a, b| dist_sq(*a).total_cmp(&dist_sq(*b)))
            .unwrap_or(0.0);
        // f(alpha) = Im(e^{i alpha} z), f'(alpha) = Re(e^{i alpha} z)
        for _ in 0..50 {
            let w = C64::from_polar(1.0, alpha) * z;
            if w.re <= 0.0 {
                return Err(Error::Decomposition { distance: dist_sq(alpha).max(0.0).sqrt(), limit: nu0 });
            }
            let step = w.im / w.re;
            alpha -= step;
            if step.abs() <= 1e-15 * (1.0 + alpha.abs()) {
                break;
            }
        }
        let alpha = wrap(alpha);
        let phi = gauge_rotate(psi, alpha).sub(&self.phi0);
        let distance = phi.norm();
        if !(distance <= nu0) {
            return Err(Error::Decomposition { distance, limit: nu0 });
        }
        Ok(ModulationState { alpha, ortho_residual: self.ortho(&phi), phi })
    }

    /// `(S H''_E phi)` with `S` pairing the `u` equation to `∂/∂v̄`
    /// and the `v` equation to `∂/∂ū`.
    pub fn linear_part(&self, phi: &LatticeState) -> LatticeState {
        let m = phi.len();
        let eps = self.params.epsilon;
        let ext = |i: usize| -> [C64; 4] {
            let (u, v) = (phi.u()[i], phi.v()[i]);
            [u, u.conj(), v, v.conj()]
        };
        let mut out = LatticeState::zeros(phi.n_half());
        for i in 0..m {
            let x = ext(i);
            let b = &self.blocks[i];
            let mut row = [C64::new(0.0, 0.0); 4];
            for (r, slot) in row.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..4 {
                    acc += b[(r, c)] * x[c];
                }
                acc -= 2.0 * eps * x[r];
                if i > 0 {
                    acc += eps * ext(i - 1)[r];
                }
                if i + 1 < m {
                    acc += eps * ext(i + 1)[r];
                }
                *slot = acc;
            }
            out.u_mut()[i] = row[2];
            out.v_mut()[i] = row[0];
        }
        out
    }

    /// `d alpha/dt` at a decomposed state.
    ///
    /// From the orthogonality `Im<Phi, phi> = 0` along the flow,
    /// `alpha' - E = Re<Phi, S H''_E phi + N(phi)> / (||Phi||^2 + Re<Phi, phi>)`
    /// with `N(phi) = F(Phi + phi) - F(Phi) - E phi - S H''_E phi` and
    /// `i psi' = F(psi)`.
    pub fn alpha_dot(&self, state: &ModulationState) -> Result<AlphaDot> {
        let phi = &state.phi;
        self.phi0.require_same_lattice(phi)?;
        let den = self.phi0_norm_sq + self.phi0.inner(phi).re;
        let limit = 0.1 * self.phi0_norm_sq;
        if !(den >= limit) {
            return Err(Error::DegenerateDecomposition { denominator: den, limit });
        }
        let e = self.params.e_freq;
        let lin = self.linear_part(phi);
        let full = i_times_field(&self.phi0.add_scaled(phi, 1.0), &self.params);
        let nonlinear = full.sub(&self.f_phi0).add_scaled(phi, -e).sub(&lin);
        let linear = self.phi0.inner(&lin).re / den;
        let nonlinear = self.phi0.inner(&nonlinear).re / den;
        Ok(AlphaDot { value: e + linear + nonlinear, linear, nonlinear })
    }

    /// `||sigma Phi||`.
    pub fn sigma_norm(&self) -> f64 {
        self.sigma_norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaDot {
    pub value: f64,
    pub linear: f64,
    pub nonlinear: f64,
}

impl AlphaDot {
    pub fn excess(&self) -> f64 {
        self.linear + self.nonlinear
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Continuous continuation of a wrapped angle next to `prev`.
pub fn unwrap_near(prev: f64, wrapped: f64) -> f64 {
    prev + wrap(wrapped - prev)
}

/// One-shot decomposition with the default orbit radius `||Phi||`.
pub fn modulation_decompose(state: &LatticeState, profile: &BreatherProfile) -> Result<ModulationState> {
    let frame = OrbitFrame::new(profile);
    let nu0 = frame.breather().norm();
    frame.decompose(state, nu0)
}

/// One-shot `d alpha/dt`.
pub fn alpha_dot_eval(profile: &BreatherProfile, state: &ModulationState) -> Result<f64> {
    Ok(OrbitFrame::new(profile).alpha_dot(state)?.value)
}
