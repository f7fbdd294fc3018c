use serde::{Deserialize, Serialize};

use super::{HarnessError, SweepRecord};

pub const MIN_TREND_POINTS: usize = 5;
pub const SLOPE_LIMIT: f64 = 1.1;
pub const PILOT_PRIMES: usize = 10;
pub const PILOT_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendSummary {
    /// Least-squares slope of `ln(abs_error)` against `ln(√p ln p)`.
    pub slope: f64,
    pub intercept: f64,
    pub max_normalized: f64,
    pub points: usize,
}

/// Fits the error growth; records with zero error carry no logarithm and are left out.
pub fn trend_analysis(records: &[SweepRecord]) -> Result<TrendSummary, HarnessError> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.abs_error > 0.0)
        .map(|r| {
            let p = r.p as f64;
            ((p.sqrt() * p.ln()).ln(), r.abs_error.ln())
        })
        .collect();
    if pts.len() < MIN_TREND_POINTS {
        return Err(HarnessError::TooFewPoints {
            got: pts.len(),
            needed: MIN_TREND_POINTS,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Ok(TrendSummary {
        slope,
        intercept: my - slope * mx,
        max_normalized: records
            .iter()
            .map(|r| r.normalized_error)
            .fold(0.0, f64::max),
        points: pts.len(),
    })
}

/// Largest normalized error among the `count` smallest primes.
pub fn pilot_max_normalized(records: &[SweepRecord], count: usize) -> f64 {
    let mut sorted: Vec<&SweepRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.p);
    sorted
        .iter()
        .take(count)
        .map(|r| r.normalized_error)
        .fold(0.0, f64::max)
}

/// Growth and size checks for one sweep series against its own pilot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub slope: f64,
    pub max_normalized: f64,
    pub pilot: f64,
    pub slope_ok: bool,
    pub size_ok: bool,
}

impl Calibration {
    pub fn ok(&self) -> bool {
        self.slope_ok && self.size_ok
    }
}

/// Slope at most [`SLOPE_LIMIT`] and max normalized error within [`PILOT_FACTOR`]
/// times the value on the [`PILOT_PRIMES`] smallest primes.
pub fn calibrate(records: &[SweepRecord]) -> Result<Calibration, HarnessError> {
    let t = trend_analysis(records)?;
    let pilot = pilot_max_normalized(records, PILOT_PRIMES);
    Ok(Calibration {
        slope: t.slope,
        max_normalized: t.max_normalized,
        pilot,
        slope_ok: t.slope <= SLOPE_LIMIT,
        size_ok: t.max_normalized <= PILOT_FACTOR * pilot,
    })
}
