use thiserror::Error;

/// Errors produced by model construction, step computation and the drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sample set is not poised (condition number {condition:e})")]
    NotPoised { condition: f64 },

    #[error("interpolation residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("wrong number of sample points for {what}: {points} points, {columns} basis elements")]
    SampleCount {
        what: &'static str,
        points: usize,
        columns: usize,
    },

    #[error("symmetric eigenvalue iteration did not converge")]
    EigenNonConvergence,

    #[error("singular value iteration did not converge")]
    SvdNonConvergence,

    #[error("constraint matrix is rank deficient (condition number {condition:e})")]
    RankDeficient { condition: f64 },

    #[error(
        "basis pursuit did not converge in {iterations} iterations \
         (primal residual {primal:e}, dual residual {dual:e})"
    )]
    NotConverged {
        iterations: usize,
        primal: f64,
        dual: f64,
    },

    #[error("step decrease {decrease:e} is below the certified bound {bound:e}")]
    InsufficientDecrease { decrease: f64, bound: f64 },

    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("objective does not provide an analytic {0}")]
    MissingDerivative(&'static str),

    #[error("trust-region radius has not reached a new minimum for {iterations} iterations")]
    RadiusStalled { iterations: usize },

    #[error("could not build a poised sample set after {attempts} attempts")]
    SampleSetExhausted { attempts: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
