//! Stationary breathers: the dimer branch at `epsilon = 0`, Newton continuation
//! in `epsilon`, the near-identity correction and the energy-difference expansion.

mod breather;
mod correction;
mod dimer;
mod expansion;

pub(crate) use breather::{inf_norm, stationary_defect};
pub use breather::{solve_breather, solve_breather_with, BreatherProfile, SolverOptions};
pub use correction::{correction_defect, solve_correction, CorrectionTerm};
pub use dimer::{dimer_branch_e, dimer_solve, e0, DimerSolution};
pub use expansion::{
    delta_of, delta_two_evaluations, delta_zero, expansion_terms, linear_term, quadratic_term, Expansion,
    ExpansionTerms,
};

use crate::lattice::Params;

/// Infinity norm of the stationary defect of `u` at frequency `params.e_freq`.
pub fn stationary_residual(u: &[num_complex::Complex64], params: &Params) -> f64 {
    inf_norm(&stationary_defect(u, params, &vec![params.e_freq; u.len()]))
}
