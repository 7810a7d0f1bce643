use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid mismatch: {0} vs {1}")]
    GridMismatch(String, String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("wavefunction has zero norm")]
    ZeroNorm,

    #[error("non-finite amplitude at index {0}")]
    NonFiniteAmplitude(usize),

    #[error("non-finite classical state at step {step}")]
    NonFiniteState { step: usize },

    #[error("wavepacket leaks off the grid: edge density {edge_density:.3e} (limit {limit:.1e})")]
    GridLeak { edge_density: f64, limit: f64 },

    #[error("periodic orbit `{orbit}` fails to close at E={energy}: defect {defect:.3e} > {tol:.1e}")]
    OrbitNotClosed {
        orbit: String,
        energy: f64,
        defect: f64,
        tol: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bad magic in {path}: expected {expected:?}")]
    BadMagic { path: PathBuf, expected: &'static str },

    #[error("truncated file {path}: {detail}")]
    Truncated { path: PathBuf, detail: String },

    #[error("dimension overflow in {path}: {detail}")]
    DimensionOverflow { path: PathBuf, detail: String },

    #[error("unsupported format version {version} in {path}")]
    BadVersion { path: PathBuf, version: u32 },

    #[error("series too short: {len} frames, need more than t_min + 1 = {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("ridge system is singular; use a regularization gamma > 0")]
    SingularRidge,

    #[error("reservoir is untrained; call a training routine first")]
    Untrained,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigensolver did not converge after {matvecs} matvecs; residuals {residuals:?}")]
    NoConvergence { matvecs: usize, residuals: Vec<f64> },

    #[error("time range [{lo}, {hi}] not covered by series [{have_lo}, {have_hi}]")]
    TimeRangeUnavailable {
        lo: f64,
        hi: f64,
        have_lo: f64,
        have_hi: f64,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("unknown orbit `{0}`; expected horizontal_vertical, quadruple_loop, bowtie or square")]
    UnknownOrbit(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
