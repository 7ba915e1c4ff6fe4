//! Rate of change of the energy difference along the flow and the Gronwall
//! envelope built from it.

use serde::{Deserialize, Serialize};

use super::integrator::integrate_observed;
use super::modulation::OrbitFrame;
use crate::error::Result;
use crate::lattice::{local_charge_flux, LatticeState};
use crate::stationary::{delta_of, delta_zero, BreatherProfile, CorrectionTerm};

/// Decomposed sample of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub t: f64,
    pub psi: LatticeState,
    pub alpha: f64,
    pub phi: LatticeState,
}

/// Integrates `psi0` and decomposes every `every` steps.
pub fn sample_flow(
    profile: &BreatherProfile,
    psi0: &LatticeState,
    t_end: f64,
    dt: f64,
    every: usize,
) -> Result<Vec<FlowSample>> {
    let frame = OrbitFrame::new(profile);
    let nu0 = frame.breather().norm();
    let every = every.max(1);
    let mut out = Vec::new();
    integrate_observed(psi0, &profile.params, t_end, dt, |k, t, s| {
        if k % every == 0 {
            let m = frame.decompose(s, nu0)?;
            out.push(FlowSample { t, psi: s.clone(), alpha: m.alpha, phi: m.phi });
        }
        Ok(true)
    })?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRateReport {
    pub epsilon: f64,
    pub delta0: f64,
    pub delta_initial: f64,
    /// `max |dΔ/dt|` from the flux identity `dΔ/dt = -E d/dt(local charge)`.
    pub max_rate: f64,
    /// `max |finite-difference dΔ/dt + E flux|` over interior samples.
    pub max_fd_mismatch: f64,
    /// Constant fitted on the first half of the samples.
    pub c_e: f64,
    /// Every sample satisfies `|dΔ/dt| <= 2 C_E eps (eps + s + s2)`.
    pub envelope_holds: bool,
    pub max_excess: f64,
    /// `Δ(t) - Δ0` stays under the Gronwall envelope for `alpha = eps`.
    pub gronwall_short_holds: bool,
    /// Same for `alpha = eps^{1/2}`.
    pub gronwall_long_holds: bool,
}

/// `(s, s2)`: sums of `||phi~_n||` and `||phi~_n||^2` over `n in {-1, 0, 1}`.
fn local_sizes(phi: &LatticeState, rho: &LatticeState) -> (f64, f64) {
    let mut s = 0.0;
    let mut s2 = 0.0;
    for n in [-1isize, 0, 1] {
        let du = phi.u_at(n) - rho.u_at(n);
        let dv = phi.v_at(n) - rho.v_at(n);
        let q = du.norm_sqr() + dv.norm_sqr();
        s += q.sqrt();
        s2 += q;
    }
    (s, s2)
}

/// Checks the flux identity for `dΔ/dt`, fits `C_E`, and tests the
/// Gronwall envelopes for the two phase-scale choices.
pub fn delta_rate_check(
    samples: &[FlowSample],
    profile: &BreatherProfile,
    correction: &CorrectionTerm,
) -> Result<DeltaRateReport> {
    let p = &profile.params;
    let eps = p.epsilon;
    let rho = correction.perturbation();
    let delta0 = delta_zero(profile, correction)?;
    let deltas = samples.iter().map(|s| delta_of(profile, &s.phi)).collect::<Result<Vec<_>>>()?;
    let rates = samples.iter().map(|s| Ok(-p.e_freq * local_charge_flux(&s.psi, p)?)).collect::<Result<Vec<f64>>>()?;

    let mut max_fd_mismatch: f64 = 0.0;
    for k in 1..samples.len().saturating_sub(1) {
        let fd = (deltas[k + 1] - deltas[k - 1]) / (samples[k + 1].t - samples[k - 1].t);
        max_fd_mismatch = max_fd_mismatch.max((fd - rates[k]).abs());
    }

    let bound = |s: &FlowSample| {
        let (a, b) = local_sizes(&s.phi, &rho);
        eps * (eps + a + b)
    };
    let half = samples.len().div_ceil(2);
    let c_e = samples[..half]
        .iter()
        .zip(&rates)
        .filter(|(s, _)| bound(s) > 0.0)
        .map(|(s, r)| r.abs() / bound(s))
        .fold(0.0, f64::max);
    let envelope_holds = samples.iter().zip(&rates).all(|(s, r)| r.abs() <= 2.0 * c_e * bound(s) + 1e-14);

    let d_init = deltas.first().copied().unwrap_or(0.0);
    let gron = |alpha: f64| {
        samples.iter().zip(&deltas).all(|(s, d)| {
            let env = if alpha > 0.0 {
                (c_e * eps / alpha * s.t).exp() * (d_init - delta0 + alpha * (eps + alpha))
            } else {
                d_init - delta0
            };
            d - delta0 <= env + 1e-12 * (1.0 + env.abs())
        })
    };

    Ok(DeltaRateReport {
        epsilon: eps,
        delta0,
        delta_initial: d_init,
        max_rate: rates.iter().map(|r| r.abs()).fold(0.0, f64::max),
        max_fd_mismatch,
        c_e,
        envelope_holds,
        max_excess: deltas.iter().map(|d| d - delta0).fold(f64::NEG_INFINITY, f64::max),
        gronwall_short_holds: gron(eps),
        gronwall_long_holds: gron(eps.sqrt()),
    })
}
