use thiserror::Error;

/// Errors raised by the filter, the simulators and the reference solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("generator matrix must be square and non-empty (got {rows} rows, row {bad_row} has {len} entries)")]
    NotSquare { rows: usize, bad_row: usize, len: usize },
    #[error("generator entry q[{row}][{col}] = {value} is a negative off-diagonal rate")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("generator row {row} sums to {sum}, expected 0")]
    RowSumNonzero { row: usize, sum: f64 },
    #[error("step {dt} too large for generator with max exit rate {max_rate} (need dt * rate < 0.1)")]
    StepTooLarge { dt: f64, max_rate: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("particle state became non-finite at step {step} (mode {mode}); dt is likely too large")]
    NonFiniteState { step: usize, mode: usize },
    #[error("grid step violates stability: {0}")]
    StabilityViolation(String),
    #[error("{fraction:.4} of the grid mass sits in the boundary cells")]
    MassEscape { fraction: f64 },
    #[error("boundary residual {residual:e} exceeds tolerance")]
    BoundaryResidualLarge { residual: f64 },
    #[error("segment {segment} lasts {duration} time units, shorter than burn-in {burn_in}")]
    SegmentShorterThanBurnIn { segment: usize, duration: f64, burn_in: f64 },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("config parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
