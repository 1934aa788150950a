use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time grids do not match")]
    GridMismatch,

    #[error("non-finite state at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("explicit step {dt} violates stability bound {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("node {0} is a boundary node")]
    BoundaryNode(usize),

    #[error("density is not normalizable on the grid (mass = {0})")]
    NonNormalizable(f64),

    #[error("starting point lies outside the domain")]
    OutsideDomain,

    #[error("all {0} paths were censored before leaving the domain")]
    AllCensored(usize),

    #[error("run {run} is dominated by censored paths (fraction {fraction})")]
    CensoredRun { run: usize, fraction: f64 },

    #[error("row {0} received no mass")]
    EmptyRow(usize),

    #[error("kernel has a zero entry at ({0}, {1}); not uniformly positive")]
    NotUniformlyPositive(usize, usize),

    #[error("minorisation constant vanishes on the small set")]
    ZeroMinorisation,

    #[error("admissible interval for gamma0 is empty: need {lower} < gamma0 < 1")]
    EmptyAdmissibleInterval { lower: f64 },

    #[error("diffusion matrix is singular at node {0}")]
    SingularDiffusion(usize),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("critical point has the wrong signature: {0}")]
    WrongSignature(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
