#![allow(dead_code)]

use nalgebra::DMatrix;
use ptdnls::lattice::{LatticeState, Params};
use ptdnls::stationary::{dimer_branch_e, solve_breather, BreatherProfile};
use ptdnls::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const OMEGA: f64 = 0.75;
pub const GAMMA: f64 = 0.5;

/// Frequency of the reference breather with dimer amplitude 1/2.
pub fn reference_e() -> f64 {
    dimer_branch_e(0.5, &Params::new(OMEGA, GAMMA, 0.0, 1.0).unwrap()).unwrap()
}

pub fn reference_params(eps: f64) -> Params {
    Params::new(OMEGA, GAMMA, eps, reference_e()).unwrap()
}

pub fn reference_profile(eps: f64, n_half: usize) -> BreatherProfile {
    solve_breather(&reference_params(eps), n_half, 1e-12).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform entries in the unit square, rescaled to norm `scale`.
pub fn random_state(rng: &mut ChaCha8Rng, n_half: usize, scale: f64) -> LatticeState {
    let m = 2 * n_half + 1;
    let mut draw =
        || -> Vec<C64> { (0..m).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect() };
    let u = draw();
    let v = draw();
    let s = LatticeState::new(n_half, u, v).unwrap();
    let n = s.norm();
    s.scaled(scale / n)
}

fn lap(x: &[C64], i: usize) -> C64 {
    let l = if i > 0 { x[i - 1] } else { C64::new(0.0, 0.0) };
    let r = x.get(i + 1).copied().unwrap_or_default();
    r - 2.0 * x[i] + l
}

/// Gradient of `H - E Q` in the independent variables `(u, ub, v, vb)`,
/// rows ordered `(∂/∂ub, ∂/∂u, ∂/∂vb, ∂/∂v)` per site.
fn gradient(z: &[C64], p: &Params) -> Vec<C64> {
    let m = z.len() / 4;
    let comp = |c: usize| -> Vec<C64> { (0..m).map(|i| z[4 * i + c]).collect() };
    let (u, ub, v, vb) = (comp(0), comp(1), comp(2), comp(3));
    let (om, g, eps, e) = (p.omega, p.gamma, p.epsilon, p.e_freq);
    let i1 = C64::new(0.0, 1.0);
    let mut out = vec![C64::new(0.0, 0.0); 4 * m];
    for n in 0..m {
        let a = u[n] * ub[n] + v[n] * vb[n];
        let q = u[n] * vb[n] + ub[n] * v[n];
        out[4 * n] = 2.0 * a * u[n] + 2.0 * q * v[n] + om * u[n] + eps * lap(&u, n) - i1 * g * v[n] - e * v[n];
        out[4 * n + 1] =
            2.0 * a * ub[n] + 2.0 * q * vb[n] + om * ub[n] + eps * lap(&ub, n) + i1 * g * vb[n] - e * vb[n];
        out[4 * n + 2] = 2.0 * a * v[n] + 2.0 * q * u[n] + om * v[n] + eps * lap(&v, n) + i1 * g * u[n] - e * u[n];
        out[4 * n + 3] =
            2.0 * a * vb[n] + 2.0 * q * ub[n] + om * vb[n] + eps * lap(&vb, n) - i1 * g * ub[n] - e * ub[n];
    }
    out
}

/// Central differences of the gradient with one Richardson step.
pub fn fd_hessian(state: &LatticeState, p: &Params, h: f64) -> DMatrix<C64> {
    let z: Vec<C64> = state.u().iter().zip(state.v()).flat_map(|(&u, &v)| [u, u.conj(), v, v.conj()]).collect();
    let dim = z.len();
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    let column = |j: usize, h: f64| -> Vec<C64> {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[j] += h;
        zm[j] -= h;
        let gp = gradient(&zp, p);
        let gm = gradient(&zm, p);
        gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    };
    for j in 0..dim {
        let coarse = column(j, h);
        let fine = column(j, 0.5 * h);
        for i in 0..dim {
            out[(i, j)] = (4.0 * fine[i] - coarse[i]) / 3.0;
        }
    }
    out
}

/// Worst relative error over entries above `1e-9 max|M|`, and worst
/// absolute error (in units of `max|M|`) over the rest.
pub fn compare_entries(analytic: &DMatrix<C64>, oracle: &DMatrix<C64>) -> (f64, f64) {
    let scale = analytic.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut rel: f64 = 0.0;
    let mut abs: f64 = 0.0;
    for (a, b) in analytic.iter().zip(oracle.iter()) {
        let d = (a - b).norm();
        if a.norm() > 1e-9 * scale {
            rel = rel.max(d / a.norm());
        } else {
            abs = abs.max(d / scale);
        }
    }
    (rel, abs)
}
