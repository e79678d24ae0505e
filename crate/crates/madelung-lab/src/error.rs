use thiserror::Error;

/// Errors shared by all laboratory modules.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("fields live on different grids (left: L={left_l}, N={left_n}; right: L={right_l}, N={right_n})")]
    GridMismatch {
        left_l: f64,
        left_n: usize,
        right_l: f64,
        right_n: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample in {context} at index {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error("vacuum: |q| = {value:.3e} <= floor {floor:.3e} at x = {x:.6}")]
    Vacuum { x: f64, value: f64, floor: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("mean velocity {mean_v:.3e} breaks periodic phase compatibility (|mean(v)|*L = {product:.3e} > {tol:.1e})")]
    PhaseIncompatible { mean_v: f64, product: f64, tol: f64 },

    #[error("solution blew up (non-finite sample) at t = {t:.6}")]
    Blowup { t: f64 },

    #[error("time step {dt:.3e} exceeds the stability bound {bound:.3e} for the chosen scheme")]
    Stability { dt: f64, bound: f64 },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("dyadic index {j} outside the representable range [-1, {j_max}]")]
    DyadicIndex { j: i32, j_max: i32 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed snapshot file: {0}")]
    BadSnapshot(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
