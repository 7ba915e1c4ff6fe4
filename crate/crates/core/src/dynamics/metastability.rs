//! Exit-time experiments: perturb the breather, integrate, and record when
//! the modulated perturbation first leaves the ball of radius `nu`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::integrator::integrate_observed;
use super::modulation::OrbitFrame;
use crate::error::{Error, Result};
use crate::lattice::{gauge_rotate, LatticeState, Params};
use crate::stationary::{solve_breather, BreatherProfile};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_half: usize,
    pub dt: f64,
    /// Initial perturbation size.
    pub delta: f64,
    /// Exit radius.
    pub nu_exit: f64,
    pub t_max: f64,
    /// Steps between decompositions.
    pub check_every: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { n_half: 20, dt: 1e-3, delta: 0.01, nu_exit: 0.2, t_max: 1000.0, check_every: 100, seed: 1, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub epsilon: f64,
    /// First sampled time with `||phi|| > nu`, or `t_max`.
    pub t0: f64,
    pub exited: bool,
    pub max_phi: f64,
    pub max_alpha_dot_excess: f64,
    /// `max |alpha' - E| / max ||phi||`.
    pub alpha_dot_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% interval for the slope; absent with fewer than three points.
    pub ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetastabilityReport {
    pub epsilons: Vec<f64>,
    pub delta_init: f64,
    pub nu_exit: f64,
    pub t_max: f64,
    pub seed: u64,
    pub t0_measured: Vec<f64>,
    pub runs: Vec<RunSummary>,
    /// Slope of `log t0` against `log eps` over the positive couplings.
    pub scaling_exponent: Option<f64>,
    pub exponent_ci: Option<(f64, f64)>,
    /// Set when no run with positive coupling left the ball before `t_max`.
    pub inconclusive: bool,
}

/// Complex Gaussian perturbation with fixed seed, orthogonal to the gauge
/// direction `i Phi` and scaled to norm `delta`.
pub fn sample_perturbation(profile: &BreatherProfile, delta: f64, seed: u64) -> LatticeState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = profile.u_profile.len();
    let mut draw = |n: usize| -> Vec<C64> {
        (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im)
            })
            .collect()
    };
    let u = draw(m);
    let v = draw(m);
    let raw = LatticeState::new(profile.n_half, u, v).expect("sizes match");
    let phi0 = profile.state();
    let gauge = gauge_rotate(&phi0, std::f64::consts::FRAC_PI_2);
    let c = gauge.inner(&raw).re / gauge.norm_sq();
    let projected = raw.add_scaled(&gauge, -c);
    let n = projected.norm();
    projected.scaled(delta / n)
}

/// Integrates one perturbed breather until exit or `t_max`.
pub fn run_exit_time(profile: &BreatherProfile, cfg: &SweepConfig) -> Result<RunSummary> {
    let frame = OrbitFrame::new(profile);
    let nu0 = frame.breather().norm();
    let psi0 = frame.breather().add_scaled(&sample_perturbation(profile, cfg.delta, cfg.seed), 1.0);
    let every = cfg.check_every.max(1);
    let mut t0 = cfg.t_max;
    let mut exited = false;
    let mut max_phi: f64 = 0.0;
    let mut max_excess: f64 = 0.0;
    integrate_observed(&psi0, &profile.params, cfg.t_max, cfg.dt, |k, t, s| {
        if k % every != 0 {
            return Ok(true);
        }
        let m = match frame.decompose(s, nu0) {
            Ok(m) => m,
            Err(Error::Decomposition { .. }) => {
                t0 = t;
                exited = true;
                return Ok(false);
            }
            Err(e) => return Err(e),
        };
        let norm = m.phi_norm();
        max_phi = max_phi.max(norm);
        if norm > cfg.nu_exit {
            t0 = t;
            exited = true;
            return Ok(false);
        }
        max_excess = max_excess.max(frame.alpha_dot(&m)?.excess().abs());
        Ok(true)
    })?;
    Ok(RunSummary {
        epsilon: profile.params.epsilon,
        t0,
        exited,
        max_phi,
        max_alpha_dot_excess: max_excess,
        alpha_dot_constant: if max_phi > 0.0 { max_excess / max_phi } else { 0.0 },
    })
}

/// Least-squares fit of `log y = slope * log x + intercept` with a
/// Student-t interval for the slope.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerFit> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParams("power-law fit needs at least two positive pairs".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParams("power-law fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ci = if lx.len() > 2 {
        let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        let se = (sse / (n - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, n - 2.0).map_err(|e| Error::InvalidParams(e.to_string()))?.inverse_cdf(0.975);
        Some((slope - t * se, slope + t * se))
    } else {
        None
    };
    Ok(PowerFit { slope, intercept, ci })
}

/// Runs every coupling in parallel and merges the results in input order.
pub fn metastability_sweep(base: &Params, epsilons: &[f64], cfg: &SweepConfig) -> Result<MetastabilityReport> {
    if !(cfg.delta > 0.0 && cfg.delta < cfg.nu_exit) {
        return Err(Error::InvalidParams(format!("need 0 < delta = {} < nu = {}", cfg.delta, cfg.nu_exit)));
    }
    base.require_breather_regime()?;
    let results: Vec<Result<RunSummary>> = std::thread::scope(|scope| {
        let handles: Vec<_> = epsilons
            .iter()
            .map(|&eps| {
                scope.spawn(move || {
                    let profile = solve_breather(&base.with_epsilon(eps), cfg.n_half, cfg.tol)?;
                    run_exit_time(&profile, cfg)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;

    let positive: Vec<&RunSummary> = runs.iter().filter(|r| r.epsilon > 0.0).collect();
    let inconclusive = !positive.is_empty() && positive.iter().all(|r| !r.exited);
    let fit = if positive.len() >= 2 && !inconclusive {
        let xs: Vec<f64> = positive.iter().map(|r| r.epsilon).collect();
        let ys: Vec<f64> = positive.iter().map(|r| r.t0).collect();
        fit_power_law(&xs, &ys).ok()
    } else {
        None
    };
    Ok(MetastabilityReport {
        epsilons: epsilons.to_vec(),
        delta_init: cfg.delta,
        nu_exit: cfg.nu_exit,
        t_max: cfg.t_max,
        seed: cfg.seed,
        t0_measured: runs.iter().map(|r| r.t0).collect(),
        scaling_exponent: fit.as_ref().map(|f| f.slope),
        exponent_ci: fit.and_then(|f| f.ci),
        runs,
        inconclusive,
    })
}
