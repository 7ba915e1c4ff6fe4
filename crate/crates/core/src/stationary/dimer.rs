//! The anti-continuum (`epsilon = 0`) dimer branch.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Params;

/// `E0 = sqrt(omega^2 - gamma^2)`.
pub fn e0(params: &Params) -> Result<f64> {
    params.e0().ok_or(Error::PtBroken { omega: params.omega, gamma: params.gamma })
}

/// Nonnegative root of `E^2 = (omega + 8A^2)^2 [1 - gamma^2 / (omega + 4A^2)^2]`.
pub fn dimer_branch_e(amplitude: f64, params: &Params) -> Result<f64> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParams(format!("amplitude {amplitude} must be >= 0")));
    }
    let a2 = amplitude * amplitude;
    let denominator = params.omega + 4.0 * a2;
    if denominator == 0.0 || params.gamma.abs() > denominator.abs() {
        return Err(Error::NoRealSolution { gamma: params.gamma, denominator });
    }
    let ratio = params.gamma / denominator;
    Ok((params.omega + 8.0 * a2).abs() * (1.0 - ratio * ratio).sqrt())
}

/// Central-site solution `U_0 = A e^{i theta}` at `epsilon = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimerSolution {
    pub amplitude: f64,
    pub theta: f64,
    pub e_freq: f64,
}

impl DimerSolution {
    pub fn u0(&self) -> C64 {
        C64::from_polar(self.amplitude, self.theta)
    }

    /// `(sin 2theta - gamma/(omega + 4A^2), cos 2theta - E/(omega + 8A^2))`.
    pub fn parameterization_defect(&self, params: &Params) -> (f64, f64) {
        let a2 = self.amplitude * self.amplitude;
        let two = 2.0 * self.theta;
        (two.sin() - params.gamma / (params.omega + 4.0 * a2), two.cos() - self.e_freq / (params.omega + 8.0 * a2))
    }
}

/// `E(A)^2 - E^2` as a function of `s = A^2`, with its derivative.
fn branch_defect(s: f64, params: &Params, e_sq: f64) -> (f64, f64) {
    let (om, g2) = (params.omega, params.gamma * params.gamma);
    let p = om + 8.0 * s;
    let q = om + 4.0 * s;
    let f = p * p * (1.0 - g2 / (q * q)) - e_sq;
    let df = 16.0 * p * (1.0 - g2 / (q * q)) + p * p * 8.0 * g2 / (q * q * q);
    (f, df)
}

/// Inverts the branch relation for the amplitude at frequency `params.e_freq`.
///
/// Supported on `omega > gamma >= 0` with `|E| > E0`, where `|E(A)|` grows
/// monotonically in `A`. The angle is fixed in `(0, pi/2)` by
/// `sin 2theta > 0` and `sign(cos 2theta) = sign(E)`.
pub fn dimer_solve(params: &Params) -> Result<DimerSolution> {
    let (om, g) = (params.omega, params.gamma);
    if om < -g {
        return Err(Error::UnsupportedBranch { omega: om });
    }
    let e0 = e0(params)?;
    let e = params.e_freq;
    if !(e.abs() > e0) {
        return Err(Error::OutOfBranch { e_freq: e, e0 });
    }
    let e_sq = e * e;

    let mut hi = 1.0;
    while branch_defect(hi, params, e_sq).0 < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::OutOfBranch { e_freq: e, e0 });
        }
    }
    let mut lo = 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if branch_defect(mid, params, e_sq).0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi {
            break;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..4 {
        let (f, df) = branch_defect(s, params, e_sq);
        let next = s - f / df;
        if !(next >= lo && next <= hi) {
            break;
        }
        s = next;
    }

    let amplitude = s.sqrt();
    let a2 = amplitude * amplitude;
    let theta = 0.5 * f64::atan2(g / (om + 4.0 * a2), e / (om + 8.0 * a2));
    Ok(DimerSolution { amplitude, theta, e_freq: e })
}
