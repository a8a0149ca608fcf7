//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {op} got {left} and {right}")]
    DimensionMismatch {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("empty matrix passed to {0}")]
    EmptyMatrix(&'static str),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("triangular factor is numerically singular at diagonal index {index} (|t| = {value:.3e}, threshold {threshold:.3e})")]
    SingularTriangular {
        index: usize,
        value: f64,
        threshold: f64,
    },

    #[error("matrix is not symmetric within tolerance (deviation {deviation:.3e})")]
    NotSymmetric { deviation: f64 },

    #[error("clustered eigenvalues: T[{i},{i}] and T[{j},{j}] differ by {separation:.3e}, below threshold {threshold:.3e}")]
    ClusteredEigenvalues {
        i: usize,
        j: usize,
        separation: f64,
        threshold: f64,
    },

    #[error("ill-conditioned product: triangular factor {factor} fails the solve threshold")]
    IllConditionedProduct { factor: usize },

    #[error("reference oracle limited to n <= {cap}, got n = {n}")]
    OracleTooLarge { n: usize, cap: usize },

    #[error("infeasible band reduction schedule: sweep {sweep} has c + d = {cd} > b = {b}")]
    InfeasibleSchedule { sweep: usize, cd: usize, b: usize },

    #[error("bandwidth mismatch: matrix has b = {matrix_b}, schedule starts at b1 = {schedule_b}")]
    BandwidthMismatch { matrix_b: usize, schedule_b: usize },

    #[error("bandwidth {b} out of range for n = {n}")]
    BandOutOfRange { b: usize, n: usize },

    #[error("staged reflector groups are out of order: {0}")]
    StagedOrdering(String),

    #[error("rank-deficient input: {0}")]
    RankDeficient(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn dims(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            op,
            left: format!("{}x{}", left.0, left.1),
            right: format!("{}x{}", right.0, right.1),
        }
    }
}
