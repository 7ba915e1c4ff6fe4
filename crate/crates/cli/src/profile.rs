//! On-disk breather profiles.

use std::path::Path;

use ptdnls::lattice::Params;
use ptdnls::stationary::{dimer_solve, stationary_residual, BreatherProfile};
use ptdnls::C64;
use serde::{Deserialize, Serialize};

use crate::config::ParamSection;
use crate::error::{CliError, CliResult};
use crate::json;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverMeta {
    pub iterations: usize,
    pub continuation_steps: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub schema_version: u32,
    pub params: ParamSection,
    pub n_half: usize,
    /// `U_n` for `n = -n_half..=n_half` as `[re, im]`.
    pub u_profile: Vec<[f64; 2]>,
    pub residual: f64,
    pub solver: SolverMeta,
}

impl ProfileFile {
    pub fn from_profile(p: &BreatherProfile, tol: f64) -> Self {
        let q = p.params;
        Self {
            schema_version: SCHEMA_VERSION,
            params: ParamSection { omega: q.omega, gamma: q.gamma, epsilon: q.epsilon, e_freq: q.e_freq },
            n_half: p.n_half,
            u_profile: p.u_profile.iter().map(|z| [z.re, z.im]).collect(),
            residual: p.residual,
            solver: SolverMeta { iterations: p.iterations, continuation_steps: p.continuation_steps, tol },
        }
    }

    pub fn to_json(&self) -> String {
        json::to_string(self)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let f: Self = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("profile schema: {e}")))?;
        if f.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "profile schema_version {} is not supported (expected {SCHEMA_VERSION})",
                f.schema_version
            )));
        }
        if f.u_profile.len() != 2 * f.n_half + 1 {
            return Err(CliError::Validation(format!(
                "profile has {} sites but n_half = {} needs {}",
                f.u_profile.len(),
                f.n_half,
                2 * f.n_half + 1
            )));
        }
        Ok(f)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Rebuilds the solver-side profile, recomputing the residual.
    pub fn to_profile(&self) -> CliResult<BreatherProfile> {
        let s = self.params;
        let params = Params::new(s.omega, s.gamma, s.epsilon, s.e_freq)?;
        let u_profile: Vec<C64> = self.u_profile.iter().map(|&[re, im]| C64::new(re, im)).collect();
        if u_profile.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(CliError::Validation("profile contains non-finite values".into()));
        }
        let dimer = dimer_solve(&params.with_epsilon(0.0))?;
        Ok(BreatherProfile {
            residual: stationary_residual(&u_profile, &params),
            params,
            n_half: self.n_half,
            u_profile,
            iterations: self.solver.iterations,
            continuation_steps: self.solver.continuation_steps,
            dimer,
        })
    }
}
