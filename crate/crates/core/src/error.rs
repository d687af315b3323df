use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("kernel is not symmetric at lattice offset {offset:?}: J(d) = {forward}, J(-d) = {backward}")]
    AsymmetricKernel {
        offset: Vec<isize>,
        forward: f64,
        backward: f64,
    },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("time step h = {h} is not admissible: need 0 < h < min{{1, 1/|pi'|}} = {h_max}")]
    InadmissibleStep { h: f64, h_max: f64 },

    #[error("could not bracket the resolvent root (rhs = {rhs})")]
    BracketFailure { rhs: f64 },

    #[error("{solver} did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("step {index} failed: {source}")]
    Step {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("time {t} outside of [0, {t_final}]")]
    TimeOutOfRange { t: f64, t_final: f64 },

    #[error("quantity {quantity} is not available for the {kind} interpolant")]
    UnsupportedQuantity {
        quantity: &'static str,
        kind: &'static str,
    },

    #[error("incompatible trajectories: {0}")]
    Incompatible(String),

    #[error("config error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn at_step(self, index: usize) -> Self {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step {
                index,
                source: Box::new(e),
            },
        }
    }

    /// Process exit code used by the command-line driver.
    ///
    /// 1 for usage and configuration problems, 2 for numerical failures.
    /// Invariant failures (3) are reported by the checker, not as errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::BracketFailure { .. }
            | Error::NotConverged { .. }
            | Error::Step { .. }
            | Error::NonFinite(_) => 2,
            _ => 1,
        }
    }
}
