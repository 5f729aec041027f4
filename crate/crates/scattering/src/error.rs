use thiserror::Error;

/// Library-wide error type.
///
/// Trajectory termination (collision, step failure) is ordinarily reported
/// through [`crate::integrate::Termination`]; the corresponding variants here
/// are used when an operation *requires* the flow to reach its target time.
#[derive(Debug, Error)]
pub enum Error {
    #[error("collision at t = {t:.6e} (q_min = {q_min:.3e} below stop radius)")]
    Collision { t: f64, q_min: f64 },

    #[error("adaptive step size underflow at t = {t:.6e}")]
    StepFailure { t: f64 },

    #[error("backward-time collision at t = {t:.6e}")]
    BackwardCollision { t: f64 },

    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("{what} did not converge (residual {residual:.3e} > tol {tol:.3e})")]
    NonConvergence {
        what: String,
        residual: f64,
        tol: f64,
    },

    #[error("degenerate velocity: v_min = {v_min:.3e} below floor {floor:.3e}")]
    DegenerateVelocity { v_min: f64, floor: f64 },

    #[error("orbit did not enter the finally free region by t = {horizon:.3e}")]
    NotFree { horizon: f64 },

    #[error("asymptotic momenta differ by {gap:.3e} (allowed {allowed:.3e})")]
    UnequalMomenta { gap: f64, allowed: f64 },

    #[error("fixed-point map is not contracting (ratio {ratio:.3} > {max_ratio:.3})")]
    ContractionFailure { ratio: f64, max_ratio: f64 },

    #[error("fixed-point iterate left its domain: sup |r| = {sup_r:.3e} > q_min/2 = {bound:.3e}")]
    LeftDomain { sup_r: f64, bound: f64 },

    #[error("seminorm estimate grows without bound at large radius")]
    InfiniteSeminorm,

    #[error("gradient vanishes at this configuration")]
    DegenerateGradient,

    #[error("trajectory does not escape (q_max not increasing)")]
    InsufficientEscape,

    #[error("finite-difference stencil point failed: {0}")]
    Stencil(#[source] Box<Error>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    ConfigParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    /// Exit code for the CLI: 1 for validation/config problems, 2 for
    /// numerical non-convergence, collisions and the like.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } | Error::ConfigParse(_) | Error::Domain(_) => 1,
            _ => 2,
        }
    }
}
