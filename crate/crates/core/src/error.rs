use std::path::PathBuf;

use crate::solver::CocSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("loan {loan_id}: balance {balance} must be strictly positive")]
    BalanceNotPositive { loan_id: String, balance: f64 },

    #[error("loan {loan_id}: evaluation month {month} lies outside the workout window [{default_month}, {resolution_month}]")]
    EvaluationTimeOutOfRange {
        loan_id: String,
        month: u32,
        default_month: u32,
        resolution_month: u32,
    },

    #[error("loan {loan_id}: no balance recorded at month {month}; only the default month can be evaluated")]
    BalanceUnavailable { loan_id: String, month: u32 },

    #[error("loan {loan_id}: {reason}")]
    InvalidSeries { loan_id: String, reason: String },

    #[error("duplicate loan id {0}")]
    DuplicateLoan(String),

    #[error("invalid {name}: {value} ({reason})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("no curve data available for {0}")]
    NoCurveData(String),

    #[error("invalid yield curve: {0}")]
    InvalidCurve(String),

    #[error("unknown grade {0:?}")]
    UnknownGrade(String),

    #[error("empty sample")]
    EmptySample,

    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),

    #[error("capital ratio denominator 1 - E[L] is zero")]
    DegenerateDenominator,

    #[error("moments are infeasible for a beta distribution: mean {mean}, variance {variance}")]
    InfeasibleMoments { mean: f64, variance: f64 },

    #[error("mean loss {0} lies outside (0, 1)")]
    DegenerateMean(f64),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("portfolio has no recoveries to hold capital against")]
    EmptyRecoveries,

    #[error("market-consistent price {mcp} is not positive at iteration {iteration}")]
    McpNonPositive { iteration: usize, mcp: f64 },

    #[error("cannot bracket Y(delta) = {target}: Y({upper}) = {value_at_upper} is still above target")]
    NoRootInBracket {
        target: f64,
        upper: f64,
        value_at_upper: f64,
    },

    #[error("solver did not converge within {} iterations", .0.iterations.len())]
    NotConverged(Box<CocSolution>),

    #[error("{file}:{line}: schema error: {message}")]
    Schema { file: String, line: u64, message: String },

    #[error("{file}:{line}: flow references unknown loan {loan_id}")]
    Integrity { file: String, line: u64, loan_id: String },

    #[error("{file}:{line}: invalid {field}: {message}")]
    Value {
        file: String,
        line: u64,
        field: String,
        message: String,
    },

    #[error("synthetic spec infeasible: {0}")]
    SpecInfeasible(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleMoments { .. }
                | Error::DegenerateMean(_)
                | Error::NumericalDomain(_)
                | Error::EmptyRecoveries
                | Error::McpNonPositive { .. }
                | Error::NoRootInBracket { .. }
                | Error::NotConverged(_)
                | Error::DegenerateSeries(_)
                | Error::DegenerateDenominator
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
