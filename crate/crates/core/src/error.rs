use thiserror::Error;

/// Errors raised by the lattice, solver, spectral and dynamics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid lattice state: {0}")]
    InvalidState(String),

    #[error("lattice size mismatch: expected n_half = {expected}, got {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("PT-broken regime: |omega| = {omega} must exceed gamma = {gamma}")]
    PtBroken { omega: f64, gamma: f64 },

    #[error("no real branch value: |gamma| = {gamma} exceeds |omega + 4A^2| = {denominator}")]
    NoRealSolution { gamma: f64, denominator: f64 },

    #[error("frequency E = {e_freq} lies inside the gap |E| <= E0 = {e0}")]
    OutOfBranch { e_freq: f64, e0: f64 },

    #[error("unsupported branch: omega = {omega} < -gamma (large-amplitude branch not continued)")]
    UnsupportedBranch { omega: f64 },

    #[error("|E| = {e_abs} is within {gap:e} of E0; stationary Jacobian is near singular")]
    NearBifurcation { e_abs: f64, gap: f64 },

    #[error("Newton continuation failed at epsilon = {epsilon} (last residual {residual:e})")]
    Continuation { epsilon: f64, residual: f64 },

    #[error("non-finite state after integration step at t = {t}")]
    BlowUp { t: f64 },

    #[error("modulation decomposition failed: orbit distance {distance} exceeds {limit}")]
    Decomposition { distance: f64, limit: f64 },

    #[error("modulation denominator {denominator:e} below {limit:e}")]
    DegenerateDecomposition { denominator: f64, limit: f64 },

    #[error("constrained Hessian is not coercive: C2 = {c2}")]
    CoercivityViolation { c2: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
