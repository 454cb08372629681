use super::record::RunRecord;
use crate::error::{Error, Result};
use crate::solvers::ERROR_FLOOR;

/// Fewest points a rate fit accepts.
pub const MIN_FIT_POINTS: usize = 10;
/// Default fit window: the trailing share of the iterations before the floor.
pub const DEFAULT_WINDOW: f64 = 0.6;
/// A record must get this far for its rate to be fitted.
pub const FIT_REQUIRES: f64 = 1e-8;

/// Per-iteration contraction factor `exp(slope)` of a least-squares line
/// through `ln e_k` over the trailing `fraction` of the sequence, truncated
/// at the first value at or below the error floor.
pub fn contraction_factor(errors: &[f64], fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("window fraction {fraction} outside (0, 1]")));
    }
    let end = errors.iter().position(|&e| e <= ERROR_FLOOR).unwrap_or(errors.len());
    let len = ((end as f64) * fraction).floor() as usize;
    if len < MIN_FIT_POINTS {
        return Err(Error::WindowTooShort { len, min: MIN_FIT_POINTS });
    }
    let start = end - len;
    let window = &errors[start..end];
    if window.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Numerical("non-positive or non-finite error in fit window".into()));
    }
    let m = len as f64;
    let x_mean = (start + end - 1) as f64 / 2.0;
    let y_mean = window.iter().map(|e| e.ln()).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (offset, e) in window.iter().enumerate() {
        let dx = (start + offset) as f64 - x_mean;
        sxy += dx * (e.ln() - y_mean);
        sxx += dx * dx;
    }
    Ok((sxy / sxx).exp())
}

/// [`contraction_factor`] of a record that reached `1e-8`.
pub fn rate_fit(record: &RunRecord, fraction: f64) -> Result<f64> {
    let best = record.rows.iter().map(|r| r.rel_err).fold(f64::INFINITY, f64::min);
    if !(best <= FIT_REQUIRES) {
        return Err(Error::NotConverged { required: FIT_REQUIRES, best });
    }
    contraction_factor(&record.errors(), fraction)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_sequence() {
        let e: Vec<f64> = (0..200).map(|k| 0.9f64.powi(k)).collect();
        assert!((contraction_factor(&e, DEFAULT_WINDOW).unwrap() - 0.9).abs() < 1e-10);
    }

    #[test]
    fn constant_sequence_has_zero_slope() {
        let e = vec![0.3; 50];
        assert!((contraction_factor(&e, DEFAULT_WINDOW).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn floor_truncates_window() {
        // 0.5^k drops below 1e-12 at k = 40; the zeros after it are ignored.
        let mut e: Vec<f64> = (0..60).map(|k| 0.5f64.powi(k)).collect();
        e.extend([0.0; 10]);
        assert!((contraction_factor(&e, DEFAULT_WINDOW).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn short_window_rejected() {
        let e: Vec<f64> = (0..15).map(|k| 0.9f64.powi(k)).collect();
        assert!(matches!(contraction_factor(&e, DEFAULT_WINDOW), Err(Error::WindowTooShort { len: 9, min: 10 })));
    }
}
