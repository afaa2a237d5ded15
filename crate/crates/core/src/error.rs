use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:.3e} at column {column})")]
    NotPositiveDefinite { column: usize, pivot: f64 },

    #[error("degenerate matrix: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("root not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}, target {target}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        target: f64,
    },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error at data row {row} (line {line}), column `{column}`: cannot read {value:?}")]
    Parse {
        row: usize,
        line: u64,
        column: String,
        value: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid record at data row {row}: {reason}")]
    Validation { row: usize, reason: String },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("insufficient data: need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("logistic fit separated (max |coefficient| = {max_abs_coef:.2})")]
    Separation { max_abs_coef: f64 },

    #[error("no terminal events in stratum {stratum}")]
    NoEvents { stratum: u8 },

    #[error("singular information matrix in Cox fit")]
    SingularInformation,

    #[error("arm {0} has no records")]
    EmptyArm(u8),

    #[error("positivity violated: no observed scores in arm {arm}")]
    PositivityViolation { arm: u8 },

    #[error("censoring positivity violated in arm {arm}: G_c = {value:.3e} at t = {time}")]
    CensoringPositivityViolation { arm: u8, time: f64, value: f64 },

    #[error("degenerate covariance: |rho| = {rho} too close to 1")]
    DegenerateCovariance { rho: f64 },

    #[error("replication failure budget exceeded: {failures} of {reps} replications failed")]
    FailureBudgetExceeded { failures: usize, reps: usize },

    #[error("configuration error: {0}")]
    Config(String),
}
