//! Experiment configuration: built-in defaults, then an optional JSON file,
//! then command-line overrides.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use ptdnls::lattice::Params;
use ptdnls::stationary::dimer_branch_e;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Branch,
    Breather,
    Spectrum,
    Evolve,
    Metastab,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Branch => "branch",
            Command::Breather => "breather",
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Metastab => "metastab",
            Command::Check => "check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSection {
    pub omega: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub e_freq: f64,
}

/// Fully resolved configuration; this is what gets snapshotted and hashed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub params: ParamSection,
    pub n_half: usize,
    pub tol: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Couplings for `metastab`.
    pub sweep: Option<Vec<f64>>,
    pub seed: u64,
    /// Norm of the initial perturbation for `evolve` and `metastab`.
    pub perturbation: f64,
    /// Exit radius for `metastab`.
    pub nu_exit: f64,
    /// Stored profile used instead of solving, for `spectrum`, `evolve`, `check`.
    pub profile: Option<PathBuf>,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialParams {
    omega: Option<f64>,
    gamma: Option<f64>,
    epsilon: Option<f64>,
    e_freq: Option<f64>,
}

/// File layer: every key optional, unknown keys rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    command: Option<Command>,
    params: Option<PartialParams>,
    n_half: Option<usize>,
    tol: Option<f64>,
    dt: Option<f64>,
    t_end: Option<f64>,
    sweep: Option<Vec<f64>>,
    seed: Option<u64>,
    perturbation: Option<f64>,
    nu_exit: Option<f64>,
    profile: Option<PathBuf>,
    output_dir: Option<PathBuf>,
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub omega: Option<f64>,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub e_freq: Option<f64>,
    pub n_half: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub profile: Option<PathBuf>,
}

pub const REFERENCE_OMEGA: f64 = 0.75;
pub const REFERENCE_GAMMA: f64 = 0.5;
pub const REFERENCE_AMPLITUDE: f64 = 0.5;
pub const DEFAULT_SWEEP: [f64; 5] = [0.04, 0.02, 0.01, 0.005, 0.0];

impl ExperimentConfig {
    /// Defaults: the dimer branch point `A = 1/2` at `Omega = 3/4`, `gamma = 1/2`.
    pub fn defaults(command: Command) -> Self {
        let base = Params::new(REFERENCE_OMEGA, REFERENCE_GAMMA, 0.0, 1.0).expect("reference parameters are valid");
        let e_freq = dimer_branch_e(REFERENCE_AMPLITUDE, &base).expect("reference amplitude is on the branch");
        Self {
            command,
            params: ParamSection { omega: REFERENCE_OMEGA, gamma: REFERENCE_GAMMA, epsilon: 0.05, e_freq },
            n_half: 20,
            tol: 1e-12,
            dt: 1e-3,
            t_end: 50.0,
            sweep: None,
            seed: 1,
            perturbation: 0.01,
            nu_exit: 0.2,
            profile: None,
            output_dir: PathBuf::from("runs"),
        }
    }

    /// Resolves defaults, the optional file and the overrides, then validates.
    pub fn resolve(command: Command, file: Option<&Path>, over: &Overrides) -> CliResult<Self> {
        let mut cfg = Self::defaults(command);
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let f: ConfigFile = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
            if let Some(c) = f.command {
                if c != command {
                    return Err(CliError::Validation(format!(
                        "config {} is for `{}`, not `{}`",
                        path.display(),
                        c.name(),
                        command.name()
                    )));
                }
            }
            if let Some(p) = f.params {
                let q = &mut cfg.params;
                q.omega = p.omega.unwrap_or(q.omega);
                q.gamma = p.gamma.unwrap_or(q.gamma);
                q.epsilon = p.epsilon.unwrap_or(q.epsilon);
                q.e_freq = p.e_freq.unwrap_or(q.e_freq);
            }
            cfg.n_half = f.n_half.unwrap_or(cfg.n_half);
            cfg.tol = f.tol.unwrap_or(cfg.tol);
            cfg.dt = f.dt.unwrap_or(cfg.dt);
            cfg.t_end = f.t_end.unwrap_or(cfg.t_end);
            cfg.sweep = f.sweep.or(cfg.sweep);
            cfg.seed = f.seed.unwrap_or(cfg.seed);
            cfg.perturbation = f.perturbation.unwrap_or(cfg.perturbation);
            cfg.nu_exit = f.nu_exit.unwrap_or(cfg.nu_exit);
            cfg.profile = f.profile.or(cfg.profile);
            cfg.output_dir = f.output_dir.unwrap_or(cfg.output_dir);
        }
        let q = &mut cfg.params;
        q.omega = over.omega.unwrap_or(q.omega);
        q.gamma = over.gamma.unwrap_or(q.gamma);
        q.epsilon = over.epsilon.unwrap_or(q.epsilon);
        q.e_freq = over.e_freq.unwrap_or(q.e_freq);
        cfg.n_half = over.n_half.unwrap_or(cfg.n_half);
        cfg.dt = over.dt.unwrap_or(cfg.dt);
        cfg.t_end = over.t_end.unwrap_or(cfg.t_end);
        cfg.tol = over.tol.unwrap_or(cfg.tol);
        cfg.seed = over.seed.unwrap_or(cfg.seed);
        cfg.profile = over.profile.clone().or(cfg.profile);
        cfg.output_dir = over.out.clone().unwrap_or(cfg.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.lattice_params()?;
        let bad = |what: &str| Err(CliError::Validation(what.to_string()));
        if self.n_half == 0 || self.n_half > 2000 {
            return bad("n_half must lie in 1..=2000");
        }
        if !(self.tol > 0.0 && self.tol < 1e-2) {
            return bad("tol must lie in (0, 1e-2)");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive and finite");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive and finite");
        }
        if !(self.perturbation >= 0.0 && self.perturbation.is_finite()) {
            return bad("perturbation must be non-negative");
        }
        if !(self.nu_exit > 0.0 && self.nu_exit.is_finite()) {
            return bad("nu_exit must be positive");
        }
        if let Some(s) = &self.sweep {
            if s.is_empty() || s.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
                return bad("sweep must be a non-empty list of non-negative couplings");
            }
        }
        Ok(())
    }

    pub fn lattice_params(&self) -> CliResult<Params> {
        let p = self.params;
        Ok(Params::new(p.omega, p.gamma, p.epsilon, p.e_freq)?)
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        self.sweep.clone().unwrap_or_else(|| DEFAULT_SWEEP.to_vec())
    }

    /// Canonical JSON snapshot (the output directory is not part of it).
    pub fn snapshot(&self) -> String {
        json::to_string(self)
    }

    /// First 12 hex digits of the SHA-256 of the snapshot.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.snapshot().as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(format!("{}-{}", self.command.name(), self.hash()))
    }
}
