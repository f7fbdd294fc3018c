//! Parameter sweeps, trend fits and record emission.

mod emit;
mod spec;
mod sweep;
mod trend;

use thiserror::Error;

pub use emit::{emit, from_csv, from_json, to_csv, to_json, OutputFormat, CSV_COLUMNS};
pub use spec::{ExperimentSpec, IntervalPolicy, Mode, PolySpec, PrimeSelection, Tolerances};
pub use sweep::{run_sweep, run_sweeps, FkmRecord, SkippedPrime, SweepOutcome, SweepRecord};
pub use trend::{
    calibrate, pilot_max_normalized, trend_analysis, Calibration, TrendSummary, MIN_TREND_POINTS,
    PILOT_FACTOR, PILOT_PRIMES, SLOPE_LIMIT,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("no admissible primes ({skipped} skipped)")]
    EmptySweep { skipped: usize },
    #[error("trend fit needs {needed} records with nonzero error, got {got}")]
    TooFewPoints { got: usize, needed: usize },
    #[error("i/o failure on {path}: {message}")]
    IoFailure { path: String, message: String },
    #[error("malformed records: {0}")]
    Parse(String),
}
