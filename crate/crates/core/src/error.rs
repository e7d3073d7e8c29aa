use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid site: {0}")]
    Site(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("operator is not Hermitian (max |H - H^dag| = {0:e})")]
    NotHermitian(f64),

    #[error("states or operators belong to different layouts")]
    LayoutMismatch,

    #[error("step size underflow at t = {t:e} s (h = {h:e} s, error estimate {err:e})")]
    StepUnderflow { t: f64, h: f64, err: f64 },

    #[error("trace drifted to {trace} (tolerance {tolerance:e})")]
    TraceDrift { trace: f64, tolerance: f64 },

    #[error("invalid evolution request: {0}")]
    Evolution(String),

    #[error(
        "resonance condition unsolvable: lambda = {lambda:e} rad/s, lambda' = {lambda_prime:e} rad/s, \
         best residual {best_residual:e} at (m, k) = ({best_m}, {best_k})"
    )]
    Resonance {
        lambda: f64,
        lambda_prime: f64,
        best_residual: f64,
        best_m: u32,
        best_k: u32,
    },

    #[error("unknown checkpoint `{0}`")]
    UnknownCheckpoint(String),

    #[error("invalid amplitudes: {0}")]
    Amplitudes(String),

    #[error("reachable subspace has dimension {dim}, above the dense limit {limit}")]
    SubspaceTooLarge { dim: usize, limit: usize },

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
