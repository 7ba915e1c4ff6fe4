//! Parameters, lattice states and the monitored functionals of the
//! PT-symmetric dNLS lattice.
//!
//! The lattice spans sites `-n_half..=n_half`; every site outside that range
//! is identically zero (Dirichlet exterior). Site `n` lives at array index
//! `n + n_half`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance on the imaginary residue of real-valued functionals.
pub const REALITY_TOL: f64 = 1e-12;

/// Physical parameters: detuning, gain/loss, coupling and breather frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub omega: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub e_freq: f64,
}

impl Params {
    /// Validated constructor: `gamma > 0`, `epsilon >= 0`, all finite.
    pub fn new(omega: f64, gamma: f64, epsilon: f64, e_freq: f64) -> Result<Self> {
        let p = Self { omega, gamma, epsilon, e_freq };
        p.validate()?;
        Ok(p)
    }

    /// The conservative limit `gamma = 0`, used only for branch diagnostics.
    pub fn conservative(omega: f64, epsilon: f64, e_freq: f64) -> Self {
        Self { omega, gamma: 0.0, epsilon, e_freq }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.omega, self.gamma, self.epsilon, self.e_freq];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParams(format!("gamma = {} must be > 0", self.gamma)));
        }
        if self.epsilon < 0.0 {
            return Err(Error::InvalidParams(format!("epsilon = {} must be >= 0", self.epsilon)));
        }
        Ok(())
    }

    /// `E0 = sqrt(omega^2 - gamma^2)`, real only when `|omega| > gamma`.
    pub fn e0(&self) -> Option<f64> {
        (self.omega.abs() > self.gamma).then(|| (self.omega * self.omega - self.gamma * self.gamma).sqrt())
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    pub fn with_e_freq(self, e_freq: f64) -> Self {
        Self { e_freq, ..self }
    }

    /// Checks the regime in which breathers are constructed:
    /// `omega > gamma` and `|E| > E0`.
    pub fn require_breather_regime(&self) -> Result<f64> {
        if self.omega < -self.gamma {
            return Err(Error::UnsupportedBranch { omega: self.omega });
        }
        let e0 = self.e0().ok_or(Error::PtBroken { omega: self.omega, gamma: self.gamma })?;
        if self.e_freq.abs() <= e0 {
            return Err(Error::OutOfBranch { e_freq: self.e_freq, e0 });
        }
        Ok(e0)
    }
}

/// Complex amplitudes `(u, v)` on the truncated lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    n_half: usize,
    u: Vec<C64>,
    v: Vec<C64>,
}

impl LatticeState {
    pub fn new(n_half: usize, u: Vec<C64>, v: Vec<C64>) -> Result<Self> {
        let len = 2 * n_half + 1;
        if u.len() != len || v.len() != len {
            return Err(Error::InvalidState(format!("expected {len} sites, got u: {}, v: {}", u.len(), v.len())));
        }
        let state = Self { n_half, u, v };
        state.check_finite()?;
        Ok(state)
    }

    pub fn zeros(n_half: usize) -> Self {
        let len = 2 * n_half + 1;
        Self { n_half, u: vec![C64::new(0.0, 0.0); len], v: vec![C64::new(0.0, 0.0); len] }
    }

    /// A PT-symmetric state `v = conj(u)` built from a `u` profile.
    pub fn from_profile(n_half: usize, u: &[C64]) -> Result<Self> {
        Self::new(n_half, u.to_vec(), u.iter().map(|z| z.conj()).collect())
    }

    pub fn n_half(&self) -> usize {
        self.n_half
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self) -> &[C64] {
        &self.u
    }

    pub fn v(&self) -> &[C64] {
        &self.v
    }

    pub fn u_mut(&mut self) -> &mut [C64] {
        &mut self.u
    }

    pub fn v_mut(&mut self) -> &mut [C64] {
        &mut self.v
    }

    /// Array index of lattice site `n`, or `None` outside the truncation.
    pub fn index(&self, n: isize) -> Option<usize> {
        let i = n + self.n_half as isize;
        (0..self.len() as isize).contains(&i).then_some(i as usize)
    }

    /// Value of `u_n`, zero on exterior sites.
    pub fn u_at(&self, n: isize) -> C64 {
        self.index(n).map_or(C64::new(0.0, 0.0), |i| self.u[i])
    }

    pub fn v_at(&self, n: isize) -> C64 {
        self.index(n).map_or(C64::new(0.0, 0.0), |i| self.v[i])
    }

    pub fn center(&self) -> usize {
        self.n_half
    }

    pub fn check_finite(&self) -> Result<()> {
        let bad = self.u.iter().chain(&self.v).position(|z| !(z.re.is_finite() && z.im.is_finite()));
        match bad {
            Some(i) => Err(Error::InvalidState(format!("non-finite amplitude at entry {i}"))),
            None => Ok(()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.check_finite().is_ok()
    }

    /// `||u||^2 + ||v||^2`.
    pub fn norm_sq(&self) -> f64 {
        self.u.iter().chain(&self.v).map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `sum conj(self) * other` over both components.
    pub fn inner(&self, other: &Self) -> C64 {
        self.u.iter().zip(&other.u).chain(self.v.iter().zip(&other.v)).map(|(a, b)| a.conj() * b).sum()
    }

    /// `v_n = conj(u_n)` and `u_{-n} = u_n` for every site, within `tol`.
    pub fn is_pt_symmetric(&self, tol: f64) -> bool {
        let conj_ok = self.u.iter().zip(&self.v).all(|(u, v)| (v - u.conj()).norm() <= tol);
        let len = self.len();
        let parity_ok = (0..len).all(|i| (self.u[i] - self.u[len - 1 - i]).norm() <= tol);
        conj_ok && parity_ok
    }

    /// Embeds the state into a larger lattice with zero padding.
    pub fn padded(&self, n_half: usize) -> Result<Self> {
        if n_half < self.n_half {
            return Err(Error::InvalidState(format!("cannot pad n_half = {} down to {n_half}", self.n_half)));
        }
        let mut out = Self::zeros(n_half);
        let off = n_half - self.n_half;
        out.u[off..off + self.len()].copy_from_slice(&self.u);
        out.v[off..off + self.len()].copy_from_slice(&self.v);
        Ok(out)
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        let comb = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x + y * s).collect();
        Self { n_half: self.n_half, u: comb(&self.u, &other.u), v: comb(&self.v, &other.v) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, -1.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n_half: self.n_half,
            u: self.u.iter().map(|z| z * s).collect(),
            v: self.v.iter().map(|z| z * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.u.iter().zip(&other.u).chain(self.v.iter().zip(&other.v)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    fn same_lattice(&self, other: &Self) -> Result<()> {
        if self.n_half != other.n_half {
            return Err(Error::SizeMismatch { expected: self.n_half, found: other.n_half });
        }
        Ok(())
    }

    pub(crate) fn require_same_lattice(&self, other: &Self) -> Result<()> {
        self.same_lattice(other)
    }
}

/// Monitored quantities at one time sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub energy_h: f64,
    pub charge_q: f64,
    pub lambda_e: f64,
    pub norm_sq: f64,
    pub local_charge: f64,
}

impl DiagnosticRecord {
    pub fn of(t: f64, state: &LatticeState, params: &Params) -> Self {
        let energy_h = energy_h(state, params);
        let local = local_charge(state);
        Self {
            t,
            energy_h,
            charge_q: charge_q(state),
            lambda_e: energy_h - params.e_freq * local,
            norm_sq: state.norm_sq(),
            local_charge: local,
        }
    }
}

fn laplacian(x: &[C64], i: usize) -> C64 {
    let left = if i == 0 { C64::new(0.0, 0.0) } else { x[i - 1] };
    let right = x.get(i + 1).copied().unwrap_or_default();
    right - 2.0 * x[i] + left
}

/// Evaluates the vector field without validating the input; `out` must have
/// the same shape as `state`.
pub(crate) fn vector_field_into(state: &LatticeState, params: &Params, out: &mut LatticeState) {
    let (eps, om, g) = (params.epsilon, params.omega, params.gamma);
    let (u, v) = (&state.u, &state.v);
    for i in 0..u.len() {
        let (un, vn) = (u[i], v[i]);
        let (au, av) = (un.norm_sqr(), vn.norm_sqr());
        let fu = eps * laplacian(v, i) + om * vn + 2.0 * ((2.0 * au + av) * vn + un * un * vn.conj());
        let fv = eps * laplacian(u, i) + om * un + 2.0 * ((au + 2.0 * av) * un + un.conj() * vn * vn);
        out.u[i] = -I * fu + g * un;
        out.v[i] = -I * fv - g * vn;
    }
}

/// Time derivative `(du/dt, dv/dt)` of the amplitude equations.
pub fn rhs(state: &LatticeState, params: &Params) -> Result<LatticeState> {
    state.check_finite()?;
    let mut out = LatticeState::zeros(state.n_half);
    vector_field_into(state, params, &mut out);
    Ok(out)
}

fn take_real(z: C64, what: &str) -> f64 {
    debug_assert!(z.im.abs() <= REALITY_TOL * (1.0 + z.re.abs()), "{what} has imaginary residue {}", z.im);
    z.re
}

/// Energy `H` as a complex sum; its imaginary part is round-off only.
pub fn energy_h_complex(state: &LatticeState, params: &Params) -> C64 {
    let (u, v) = (&state.u, &state.v);
    let mut h = C64::new(0.0, 0.0);
    for i in 0..u.len() {
        let (un, vn) = (u[i], v[i]);
        let mass = un.norm_sqr() + vn.norm_sqr();
        let cross = un * vn.conj() + un.conj() * vn;
        h += mass * mass + cross * cross + params.omega * mass;
        h += I * params.gamma * (un * vn.conj() - un.conj() * vn);
    }
    // Bonds (n, n+1) for n = -n_half-1 ..= n_half, with zero exterior.
    let zero = C64::new(0.0, 0.0);
    for i in 0..=u.len() {
        let (ul, vl) = if i == 0 { (zero, zero) } else { (u[i - 1], v[i - 1]) };
        let (ur, vr) = if i == u.len() { (zero, zero) } else { (u[i], v[i]) };
        h -= params.epsilon * ((ur - ul).norm_sqr() + (vr - vl).norm_sqr());
    }
    h
}

/// Conserved energy `H`.
pub fn energy_h(state: &LatticeState, params: &Params) -> f64 {
    take_real(energy_h_complex(state, params), "H")
}

/// Conserved charge `Q = sum (u conj(v) + conj(u) v)`.
pub fn charge_q(state: &LatticeState) -> f64 {
    let q: C64 = state.u.iter().zip(&state.v).map(|(u, v)| u * v.conj() + u.conj() * v).sum();
    take_real(q, "Q")
}

/// Central-site charge `u_0 conj(v_0) + conj(u_0) v_0`.
pub fn local_charge(state: &LatticeState) -> f64 {
    let c = state.center();
    let (u, v) = (state.u[c], state.v[c]);
    take_real(u * v.conj() + u.conj() * v, "local charge")
}

/// Lyapunov function `Lambda_E = H - E (u_0 conj(v_0) + conj(u_0) v_0)`.
pub fn lambda_e(state: &LatticeState, params: &Params) -> f64 {
    energy_h(state, params) - params.e_freq * local_charge(state)
}

/// Complex value of the flux expression for `d/dt` of the central charge.
pub fn local_charge_flux_complex(state: &LatticeState, params: &Params) -> C64 {
    let (u0, v0) = (state.u_at(0), state.v_at(0));
    let su = state.u_at(1) + state.u_at(-1);
    let sv = state.v_at(1) + state.v_at(-1);
    -I * params.epsilon * (u0.conj() * su - u0 * su.conj() + v0.conj() * sv - v0 * sv.conj())
}

/// `d/dt (u_0 conj(v_0) + conj(u_0) v_0)` from the coupling flux.
pub fn local_charge_flux(state: &LatticeState, params: &Params) -> Result<f64> {
    if state.n_half < 1 {
        return Err(Error::InvalidState("flux needs n_half >= 1".into()));
    }
    Ok(take_real(local_charge_flux_complex(state, params), "flux"))
}

/// `d/dt ||psi||^2` evaluated through `rhs`, minus `2 gamma sum(|u|^2 - |v|^2)`.
pub fn norm_balance_residual(state: &LatticeState, params: &Params) -> Result<f64> {
    let d = rhs(state, params)?;
    let rate: f64 =
        state.u.iter().zip(&d.u).chain(state.v.iter().zip(&d.v)).map(|(z, dz)| 2.0 * (z.conj() * dz).re).sum();
    let imbalance: f64 = state.u.iter().zip(&state.v).map(|(u, v)| u.norm_sqr() - v.norm_sqr()).sum();
    Ok(rate - 2.0 * params.gamma * imbalance)
}

/// Gauge rotation `(u, v) -> e^{i alpha} (u, v)`.
pub fn gauge_rotate(state: &LatticeState, alpha: f64) -> LatticeState {
    let phase = C64::from_polar(1.0, alpha);
    LatticeState {
        n_half: state.n_half,
        u: state.u.iter().map(|z| z * phase).collect(),
        v: state.v.iter().map(|z| z * phase).collect(),
    }
}

/// Parity `P`: swaps `u` and `v`. With `conjugate` set, also applies the
/// conjugation half of `T`; the time reversal itself is a trajectory-level
/// operation.
pub fn pt_apply(state: &LatticeState, conjugate: bool) -> LatticeState {
    let map = |x: &[C64]| -> Vec<C64> {
        if conjugate {
            x.iter().map(|z| z.conj()).collect()
        } else {
            x.to_vec()
        }
    };
    LatticeState { n_half: state.n_half, u: map(&state.v), v: map(&state.u) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn single_site(n_half: usize, u0: C64, v0: C64) -> LatticeState {
        let mut s = LatticeState::zeros(n_half);
        let c0 = s.center();
        s.u_mut()[c0] = u0;
        s.v_mut()[c0] = v0;
        s
    }

    fn params(eps: f64) -> Params {
        Params::new(0.75, 0.5, eps, 2.6).unwrap()
    }

    fn pseudo_random_state(n_half: usize, seed: u64) -> LatticeState {
        // Small LCG keeps these unit tests free of RNG plumbing.
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let len = 2 * n_half + 1;
        let u = (0..len).map(|_| c(next(), next())).collect();
        let v = (0..len).map(|_| c(next(), next())).collect();
        LatticeState::new(n_half, u, v).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(Params::new(0.75, 0.0, 0.1, 1.0).is_err());
        assert!(Params::new(0.75, 0.5, -0.1, 1.0).is_err());
        assert!(Params::new(f64::NAN, 0.5, 0.1, 1.0).is_err());
    }

    #[test]
    fn rejects_non_finite_state() {
        let mut u = vec![c(0.0, 0.0); 3];
        u[1] = c(f64::INFINITY, 0.0);
        assert!(LatticeState::new(1, u, vec![c(0.0, 0.0); 3]).is_err());
        assert!(LatticeState::new(1, vec![c(0.0, 0.0); 2], vec![c(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let s = LatticeState::zeros(4);
        let d = rhs(&s, &params(0.3)).unwrap();
        assert_eq!(d, LatticeState::zeros(4));
        assert_eq!(energy_h(&s, &params(0.3)), 0.0);
        assert_eq!(charge_q(&s), 0.0);
        assert_eq!(lambda_e(&s, &params(0.3)), 0.0);
        assert_eq!(norm_balance_residual(&s, &params(0.3)).unwrap(), 0.0);
    }

    #[test]
    fn single_site_vector_field() {
        let p = Params::new(0.9, 0.4, 0.0, 1.0).unwrap();
        let s = single_site(3, c(1.0, 0.0), c(0.0, 0.0));
        let d = rhs(&s, &p).unwrap();
        let c0 = s.center();
        assert!((d.u()[c0] - c(p.gamma, 0.0)).norm() < 1e-15);
        assert!((d.v()[c0] - c(0.0, -(p.omega + 2.0))).norm() < 1e-15);
        for i in (0..s.len()).filter(|&i| i != c0) {
            assert_eq!(d.u()[i], c(0.0, 0.0));
            assert_eq!(d.v()[i], c(0.0, 0.0));
        }
    }

    #[test]
    fn energy_closed_forms() {
        let p = params(0.2);
        let s = single_site(3, c(1.0, 0.0), c(0.0, 0.0));
        assert!((energy_h(&s, &p) - (1.0 + p.omega - 2.0 * p.epsilon)).abs() < 1e-14);

        let a = 0.7;
        let s = single_site(3, c(a, 0.0), c(a, 0.0));
        let want = 8.0 * a.powi(4) + 2.0 * p.omega * a * a - 4.0 * p.epsilon * a * a;
        assert!((energy_h(&s, &p) - want).abs() < 1e-14);
    }

    #[test]
    fn charge_of_orthogonal_phases_vanishes() {
        let s = single_site(2, c(1.0, 0.0), c(0.0, 1.0));
        assert_eq!(charge_q(&s), 0.0);
    }

    #[test]
    fn lambda_equals_h_off_center() {
        let p = params(0.1);
        let mut s = pseudo_random_state(3, 7);
        let c0 = s.center();
        s.u_mut()[c0] = c(0.0, 0.0);
        s.v_mut()[c0] = c(0.0, 0.0);
        assert_eq!(lambda_e(&s, &p), energy_h(&s, &p));
    }

    #[test]
    fn flux_vanishes_without_coupling_or_neighbours() {
        let s = pseudo_random_state(3, 11);
        assert_eq!(local_charge_flux(&s, &params(0.0)).unwrap(), 0.0);

        let mut s = pseudo_random_state(3, 12);
        for n in [-1isize, 1] {
            let i = s.index(n).unwrap();
            s.u_mut()[i] = c(0.0, 0.0);
            s.v_mut()[i] = c(0.0, 0.0);
        }
        assert_eq!(local_charge_flux(&s, &params(0.4)).unwrap(), 0.0);
        assert!(local_charge_flux(&LatticeState::zeros(0), &params(0.4)).is_err());
    }

    #[test]
    fn flux_matches_rhs_derivative_of_local_charge() {
        let p = params(0.3);
        for seed in 0..20 {
            let s = pseudo_random_state(4, seed);
            let d = rhs(&s, &p).unwrap();
            let c0 = s.center();
            let exact = 2.0 * (d.u()[c0] * s.v()[c0].conj() + s.u()[c0] * d.v()[c0].conj()).re;
            let flux = local_charge_flux(&s, &p).unwrap();
            assert!((exact - flux).abs() < 1e-13 * (1.0 + exact.abs()), "{exact} vs {flux}");
        }
    }

    #[test]
    fn balanced_state_keeps_its_norm() {
        let p = params(0.25);
        let s = pseudo_random_state(5, 3);
        // Same moduli in both components, different phases.
        let v: Vec<C64> = s.u().iter().map(|z| z * C64::from_polar(1.0, 0.7)).collect();
        let s = LatticeState::new(5, s.u().to_vec(), v).unwrap();
        let d = rhs(&s, &p).unwrap();
        let rate: f64 =
            s.u().iter().zip(d.u()).chain(s.v().iter().zip(d.v())).map(|(z, dz)| 2.0 * (z.conj() * dz).re).sum();
        assert!(rate.abs() < 1e-13);
    }

    #[test]
    fn gauge_rotation_identities() {
        let s = pseudo_random_state(3, 5);
        assert_eq!(gauge_rotate(&s, 0.0), s);
        assert!(gauge_rotate(&s, 2.0 * std::f64::consts::PI).max_abs_diff(&s) < 1e-14);
    }

    #[test]
    fn pt_operator_identities() {
        let u: Vec<C64> = (0..5).map(|k| c(k as f64, 1.0 - k as f64)).collect();
        let s = LatticeState::from_profile(2, &u).unwrap();
        let p = pt_apply(&s, false);
        for (a, b) in p.u().iter().zip(s.u()) {
            assert_eq!(*a, b.conj());
        }
        let r = pseudo_random_state(3, 9);
        assert_eq!(pt_apply(&pt_apply(&r, false), false), r);
        assert_eq!(pt_apply(&pt_apply(&r, true), true), r);
        assert_eq!(pt_apply(&LatticeState::zeros(2), true), LatticeState::zeros(2));
    }

    #[test]
    fn pt_symmetry_predicate() {
        let u = vec![c(0.1, 0.2), c(1.0, 0.3), c(0.1, 0.2)];
        assert!(LatticeState::from_profile(1, &u).unwrap().is_pt_symmetric(1e-14));
        let u = vec![c(0.1, 0.2), c(1.0, 0.3), c(0.2, 0.2)];
        assert!(!LatticeState::from_profile(1, &u).unwrap().is_pt_symmetric(1e-14));
    }

    #[test]
    fn padding_changes_nothing() {
        let p = params(0.3);
        let s = pseudo_random_state(3, 21);
        let big = s.padded(6).unwrap();
        assert_eq!(energy_h(&s, &p), energy_h(&big, &p));
        assert_eq!(charge_q(&s), charge_q(&big));
        let (d, db) = (rhs(&s, &p).unwrap(), rhs(&big, &p).unwrap());
        for n in -3isize..=3 {
            assert_eq!(d.u_at(n), db.u_at(n));
            assert_eq!(d.v_at(n), db.v_at(n));
        }
        assert!(s.padded(2).is_err());
    }

    #[test]
    fn e0_requires_unbroken_regime() {
        assert!(params(0.0).e0().is_some());
        assert!(Params::new(0.4, 0.5, 0.0, 1.0).unwrap().e0().is_none());
        let p = Params::new(0.75, 0.5, 0.0, 0.3).unwrap();
        assert!(matches!(p.require_breather_regime(), Err(Error::OutOfBranch { .. })));
        let p = Params::new(-0.75, 0.5, 0.0, 3.0).unwrap();
        assert!(matches!(p.require_breather_regime(), Err(Error::UnsupportedBranch { .. })));
    }
}
