use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch { expected: usize, got: usize, context: &'static str },

    #[error("non-finite value at index {index} in {context}")]
    NonFinite { index: usize, context: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("oracle does not provide Hessian blocks and numerical fallback was not requested")]
    MissingHessian,

    #[error("{kind} requires Hessian blocks, which this objective does not provide")]
    SecondOrderUnavailable { kind: &'static str },

    #[error("dense CGD solve limited to m+n <= {cap}, got {dim}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("QR iteration did not converge after {iterations} sweeps (dimension {dim})")]
    EigenNonConvergence { iterations: usize, dim: usize },

    #[error("eigenpair residual {residual:.3e} exceeds {bound:.3e}")]
    EigenResidual { residual: f64, bound: f64 },

    #[error("point is not stationary: field norm {norm:.3e} > {tol:.3e}")]
    NotStationary { norm: f64, tol: f64 },

    #[error("sigma bound inapplicable: eigenvalue {re} + {im}i has non-negative real part")]
    BoundInapplicable { re: f64, im: f64 },

    #[error("no known equilibrium for this game")]
    UnknownEquilibrium,

    #[error("trajectory diverged at iteration {0}")]
    Diverged(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("snapshot format error: {0}")]
    Snapshot(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], context: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index, context }),
        None => Ok(()),
    }
}
