use thiserror::Error;

/// Highest supported order of the higher-order expansion.
pub const MAX_ORDER: usize = 6;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("atom at p = {p} lies outside the safe region |p| <= {limit}")]
    OutOfSafeRegion { p: f64, limit: f64 },
    #[error("incompatible zak grid: {0}")]
    IncompatibleZak(String),
    #[error("shifted support leaves the grid (lost mass {0:e})")]
    SupportOverflow(f64),
    #[error("grid has no sample at the half-integer {0}")]
    MissingHalfInteger(f64),
    #[error("theta vanishes at a quadrature node ({0}, {1})")]
    ThetaDivision(f64, f64),
    #[error("domain is unbounded")]
    UnboundedDomain,
    #[error("negative radius {0}")]
    NegativeRadius(f64),
    #[error("nodes are not pairwise distinct")]
    RepeatedNodes,
    #[error("node ({0}, {1}) is not a sharp point")]
    NotSharp(f64, f64),
    #[error("order m = {0} exceeds the cap {MAX_ORDER}")]
    OrderTooLarge(usize),
    #[error("order m = {m} is too large for r = {r} (need m <= r - 1)")]
    OrderExceedsRadius { m: usize, r: f64 },
    #[error("no sharp point available in {0}")]
    NoSharpPoint(String),
    #[error("coefficient vector is zero")]
    ZeroCoefficients,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config field `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
