//! Time evolution, modulation decomposition and metastability experiments.

mod integrator;
mod metastability;
mod modulation;
mod rates;

pub use integrator::{
    default_dt, integrate, integrate_drift_gated, integrate_observed, step_count, step_rk4, Rk4, Trajectory,
};
pub use metastability::{
    fit_power_law, metastability_sweep, run_exit_time, sample_perturbation, MetastabilityReport, PowerFit, RunSummary,
    SweepConfig,
};
pub use modulation::{
    alpha_dot_eval, modulation_decompose, unwrap_near, wrap, AlphaDot, ModulationState, OrbitFrame, SCAN_POINTS,
};
pub use rates::{delta_rate_check, sample_flow, DeltaRateReport, FlowSample};
