use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A record in an input file could not be parsed.
    #[error("{source_name}:{line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("value {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("interest distance is undefined when both content sets are empty")]
    UndefinedDistance,

    /// Time stepping failed even after the maximum number of step halvings.
    #[error("solver diverged at step {step} (t = {time}): {reason}")]
    Divergence {
        step: usize,
        time: f64,
        reason: String,
    },

    /// An iterative numerical method did not converge.
    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("front retreated: h' = {rate} at t = {time}")]
    FrontRetreat { time: f64, rate: f64 },

    #[error("Phi(lambda) has no interior minimum on [{lo}, {hi}]")]
    NoMinimum { lo: f64, hi: f64 },

    #[error(
        "no positive coexistence equilibrium: r1*r2 - a1*a2*k1*k2 = {denominator} <= 0 \
         (e1 = k1*r2*(a1*k2 + r1)/den, e2 = k2*r1*(a2*k1 + r2)/den)"
    )]
    NoEquilibrium { denominator: f64 },

    #[error("no invasion: r1 = {r1} <= a1*k2 = {threshold}")]
    NoInvasion { r1: f64, threshold: f64 },

    #[error("no traveling wave: R0 = beta/gamma = {r0} <= 1")]
    NoWave { r0: f64 },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("speed estimation failed: {0}")]
    Estimation(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("fit initialization failed: {0}")]
    FitInitialization(String),

    #[error("fit infeasible: {0}")]
    FitInfeasible(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            Error::Divergence { .. }
            | Error::Numeric(_)
            | Error::FrontRetreat { .. }
            | Error::Estimation(_) => 3,
            Error::FitInitialization(_) | Error::FitInfeasible(_) => 4,
            _ => 2,
        }
    }
}
