//! Scalar summaries of learning curves.

use super::curve::LearningCurve;

/// First cumulative step count at which the trailing `window`-episode mean
/// return reaches `threshold`, or `None` if it never does.
pub fn steps_to_threshold(curve: &LearningCurve, threshold: f64, window: usize) -> Option<u64> {
    assert!(window >= 1, "window must be at least 1");
    let records = curve.records();
    if records.len() < window {
        return None;
    }
    records
        .windows(window)
        .find(|w| w.iter().map(|r| r.ret).sum::<f64>() / window as f64 >= threshold)
        .map(|w| w[window - 1].steps)
}

/// Step-weighted mean return over `[0, budget]`.
///
/// Episode `i` covers the steps after episode `i - 1` ended up to its own
/// end, and its return is held constant across them. The final return is
/// extended to `budget`; episodes beyond `budget` are cut off. An empty curve
/// yields NaN.
pub fn curve_auc(curve: &LearningCurve, budget: u64) -> f64 {
    assert!(budget > 0, "budget must be positive");
    let records = curve.records();
    if records.is_empty() {
        return f64::NAN;
    }
    let mut area = 0.0;
    let mut covered = 0u64;
    for r in records {
        let end = r.steps.min(budget);
        area += r.ret * (end - covered) as f64;
        covered = end;
        if covered == budget {
            break;
        }
    }
    if covered < budget {
        area += records.last().map_or(0.0, |r| r.ret) * (budget - covered) as f64;
    }
    area / budget as f64
}

/// Median with the midpoint rule for even counts. `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile (the default of most statistics packages).
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(if lo == hi { sorted[lo] } else { sorted[lo] + frac * (sorted[hi] - sorted[lo]) })
}

pub fn iqr(values: &[f64]) -> Option<f64> {
    Some(quantile(values, 0.75)? - quantile(values, 0.25)?)
}
