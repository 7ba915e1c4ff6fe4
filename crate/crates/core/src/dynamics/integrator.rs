//! Fixed-step classical Runge–Kutta integration with diagnostic sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{vector_field_into, DiagnosticRecord, LatticeState, Params};

/// Scratch buffers for repeated RK4 steps on one lattice size.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: LatticeState,
    k2: LatticeState,
    k3: LatticeState,
    k4: LatticeState,
    tmp: LatticeState,
}

impl Rk4 {
    pub fn new(n_half: usize) -> Self {
        let z = LatticeState::zeros(n_half);
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    fn stage(tmp: &mut LatticeState, base: &LatticeState, k: &LatticeState, h: f64) {
        for (t, (b, d)) in tmp.u_mut().iter_mut().zip(base.u().iter().zip(k.u())) {
            *t = b + d * h;
        }
        for (t, (b, d)) in tmp.v_mut().iter_mut().zip(base.v().iter().zip(k.v())) {
            *t = b + d * h;
        }
    }

    /// Advances `state` in place; the caller checks finiteness.
    pub fn step(&mut self, state: &mut LatticeState, params: &Params, dt: f64) {
        vector_field_into(state, params, &mut self.k1);
        Self::stage(&mut self.tmp, state, &self.k1, 0.5 * dt);
        vector_field_into(&self.tmp, params, &mut self.k2);
        Self::stage(&mut self.tmp, state, &self.k2, 0.5 * dt);
        vector_field_into(&self.tmp, params, &mut self.k3);
        Self::stage(&mut self.tmp, state, &self.k3, dt);
        vector_field_into(&self.tmp, params, &mut self.k4);
        let w = dt / 6.0;
        let (k1, k2, k3, k4) = (&self.k1, &self.k2, &self.k3, &self.k4);
        for (i, z) in state.u_mut().iter_mut().enumerate() {
            *z += w * (k1.u()[i] + 2.0 * k2.u()[i] + 2.0 * k3.u()[i] + k4.u()[i]);
        }
        for (i, z) in state.v_mut().iter_mut().enumerate() {
            *z += w * (k1.v()[i] + 2.0 * k2.v()[i] + 2.0 * k3.v()[i] + k4.v()[i]);
        }
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("time step {dt} must be positive")))
    }
}

/// One RK4 step of size `dt`.
pub fn step_rk4(state: &LatticeState, params: &Params, dt: f64) -> Result<LatticeState> {
    check_dt(dt)?;
    state.check_finite()?;
    let mut next = state.clone();
    Rk4::new(state.n_half()).step(&mut next, params, dt);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::BlowUp { t: dt })
    }
}

/// `0.01 * min(1, 1/|E|, 1/(|Omega| + ||psi0||^2))`.
pub fn default_dt(params: &Params, state0: &LatticeState) -> f64 {
    let mut m: f64 = 1.0;
    if params.e_freq != 0.0 {
        m = m.min(1.0 / params.e_freq.abs());
    }
    m = m.min(1.0 / (params.omega.abs() + state0.norm_sq()));
    0.01 * m
}

/// Splits `[0, t_end]` into an integer number of steps no longer than `dt`.
pub fn step_count(t_end: f64, dt: f64) -> Result<(usize, f64)> {
    check_dt(dt)?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParams(format!("t_end = {t_end} must be >= 0")));
    }
    let exact = t_end / dt;
    let n = if (exact - exact.round()).abs() <= 1e-9 * exact.max(1.0) { exact.round() } else { exact.ceil() };
    let n = n as usize;
    Ok((n, if n == 0 { dt } else { t_end / n as f64 }))
}

/// Integrates from `t = 0` to `t_end`, calling `observer(step, t, state)` at
/// step 0 and after every step. Stops early when the observer returns
/// `Ok(false)`. Returns the final state and time.
pub fn integrate_observed<F>(
    state0: &LatticeState,
    params: &Params,
    t_end: f64,
    dt: f64,
    mut observer: F,
) -> Result<(LatticeState, f64)>
where
    F: FnMut(usize, f64, &LatticeState) -> Result<bool>,
{
    state0.check_finite()?;
    let (n, h) = step_count(t_end, dt)?;
    let mut rk = Rk4::new(state0.n_half());
    let mut state = state0.clone();
    if !observer(0, 0.0, &state)? {
        return Ok((state, 0.0));
    }
    for k in 1..=n {
        rk.step(&mut state, params, h);
        let t = k as f64 * h;
        if !state.norm_sq().is_finite() {
            return Err(Error::BlowUp { t });
        }
        if !observer(k, t, &state)? {
            return Ok((state, t));
        }
    }
    Ok((state, n as f64 * h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<DiagnosticRecord>,
    pub dt: f64,
    pub t_end: f64,
    #[serde(skip)]
    pub final_state: Option<LatticeState>,
}

impl Trajectory {
    fn drift(&self, f: impl Fn(&DiagnosticRecord) -> f64) -> f64 {
        let Some(first) = self.records.first() else { return 0.0 };
        let f0 = f(first);
        self.records.iter().map(|r| (f(r) - f0).abs()).fold(0.0, f64::max) / (1.0 + f0.abs())
    }

    /// `max_t |H(t) - H(0)| / (1 + |H(0)|)`.
    pub fn energy_drift(&self) -> f64 {
        self.drift(|r| r.energy_h)
    }

    /// `max_t |Q(t) - Q(0)| / (1 + |Q(0)|)`.
    pub fn charge_drift(&self) -> f64 {
        self.drift(|r| r.charge_q)
    }

    pub fn max_norm_sq(&self) -> f64 {
        self.records.iter().map(|r| r.norm_sq).fold(0.0, f64::max)
    }

    /// `sup_t (Omega - gamma - 4 eps) ||psi(t)||^2 <= H(0) (1 + rel)`.
    pub fn energy_bound_holds(&self, params: &Params, rel: f64) -> bool {
        let Some(first) = self.records.first() else { return true };
        let c = params.omega - params.gamma - 4.0 * params.epsilon;
        self.records.iter().all(|r| c * r.norm_sq <= first.energy_h * (1.0 + rel))
    }
}

/// Integrates and records diagnostics every `cadence` steps and at `t_end`.
pub fn integrate(state0: &LatticeState, params: &Params, t_end: f64, dt: f64, cadence: usize) -> Result<Trajectory> {
    let cadence = cadence.max(1);
    let (n, h) = step_count(t_end, dt)?;
    let mut records = Vec::with_capacity(n / cadence + 2);
    let (final_state, _) = integrate_observed(state0, params, t_end, dt, |k, t, s| {
        if k % cadence == 0 || k == n {
            records.push(DiagnosticRecord::of(t, s, params));
        }
        Ok(true)
    })?;
    Ok(Trajectory { records, dt: h, t_end, final_state: Some(final_state) })
}

/// Halves `dt0` until the relative energy drift over `[0, t_end]` is below
/// `drift_tol`, keeping the sampling interval `sample_dt` fixed.
pub fn integrate_drift_gated(
    state0: &LatticeState,
    params: &Params,
    t_end: f64,
    dt0: f64,
    sample_dt: f64,
    drift_tol: f64,
    max_halvings: usize,
) -> Result<Trajectory> {
    check_dt(dt0)?;
    let mut dt = dt0;
    let mut last = None;
    for _ in 0..=max_halvings {
        let cadence = ((sample_dt / dt).round() as usize).max(1);
        let traj = integrate(state0, params, t_end, dt, cadence)?;
        if traj.energy_drift() < drift_tol {
            return Ok(traj);
        }
        last = Some(traj);
        dt *= 0.5;
    }
    Ok(last.expect("at least one attempt"))
}
