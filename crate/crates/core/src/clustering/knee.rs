//! Knee detection on a decreasing curve (Kneedle on normalized coordinates).

use crate::error::{Error, Result};

use super::{argmin_first, SelectionRule};

/// Index of the knee of `curve`. Coordinates are min-max normalized and the
/// difference d_i = (1 - x_i) - y_i is maximized; a flat difference curve
/// (max < 0.01) falls back to the first argmin of the raw curve.
///
/// Kneedle is only defined for non-increasing curves. A curve that turns
/// upward has an unambiguous interior minimum, so it is resolved by argmin
/// directly.
pub fn knee_point(curve: &[f64]) -> Result<(usize, SelectionRule)> {
    if curve.len() < 3 {
        return Err(Error::InvalidInput(
            "knee detection requires at least 3 points".into(),
        ));
    }
    if curve.windows(2).any(|w| w[1] > w[0]) {
        return Ok((argmin_first(curve), SelectionRule::MinBicFallback));
    }
    let y_min = curve.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_max = curve.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(y_max - y_min).is_finite() || y_max - y_min <= 0.0 {
        return Ok((argmin_first(curve), SelectionRule::MinBicFallback));
    }
    let n = curve.len();
    let mut best_idx = 0;
    let mut best_diff = f64::NEG_INFINITY;
    for (i, &y) in curve.iter().enumerate() {
        let x_norm = i as f64 / (n - 1) as f64;
        let y_norm = (y - y_min) / (y_max - y_min);
        let diff = (1.0 - x_norm) - y_norm;
        if diff > best_diff {
            best_diff = diff;
            best_idx = i;
        }
    }
    if best_diff < 0.01 {
        Ok((argmin_first(curve), SelectionRule::MinBicFallback))
    } else {
        Ok((best_idx, SelectionRule::Knee))
    }
}
