//! Misclassification detection through rejection curves.
//!
//! Records are rejected from least to most confident. After rejecting `k` of
//! `n` records, the curve value is the number of misclassified records still
//! retained divided by `n` (rejected records count as handled). The random
//! baseline is the straight line from `e` to 0 (area `e/2`, `e` the base error
//! rate); the oracle rejects every error first (area `e²/2`). The Prediction
//! Rejection Ratio is
//!
//! ```text
//! PRR = 100 · (AUC_random − AUC_model) / (AUC_random − AUC_oracle)
//! ```
//!
//! All areas are accumulated as exact integers in units of `1/(2n²)`, so the
//! oracle ordering scores exactly 100.

use relikit_core::{Error, PredictionRecordSet, Result};

/// Retained error counts `c_0..=c_n` after rejecting the `k` least confident
/// records. Ties keep record order.
pub fn retained_errors(confidences: &[f64], correct: &[bool]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..confidences.len()).collect();
    order.sort_by(|&a, &b| confidences[a].total_cmp(&confidences[b]));
    let mut remaining = correct.iter().filter(|&&c| !c).count() as u64;
    let mut out = Vec::with_capacity(order.len() + 1);
    out.push(remaining);
    for i in order {
        remaining -= u64::from(!correct[i]);
        out.push(remaining);
    }
    out
}

/// Rejection curve as `(rejected fraction, error)` points.
pub fn rejection_curve(records: &PredictionRecordSet) -> Vec<(f64, f64)> {
    let n = records.len() as f64;
    retained_errors(&records.confidences(), &records.correctness())
        .into_iter()
        .enumerate()
        .map(|(k, c)| (k as f64 / n, c as f64 / n))
        .collect()
}

/// Trapezoid area of a retained-error curve in units of `1/(2n²)`.
fn doubled_area(counts: &[u64]) -> u128 {
    counts
        .windows(2)
        .map(|w| u128::from(w[0]) + u128::from(w[1]))
        .sum()
}

pub fn prr(records: &PredictionRecordSet) -> Result<f64> {
    prr_from(&records.confidences(), &records.correctness())
}

pub fn prr_from(confidences: &[f64], correct: &[bool]) -> Result<f64> {
    if confidences.len() != correct.len() {
        return Err(Error::ShapeMismatch(
            "confidences and outcomes differ in length".into(),
        ));
    }
    let n = confidences.len() as u64;
    let errors = correct.iter().filter(|&&c| !c).count() as u64;
    if n < 2 || errors == 0 || errors == n {
        return Err(Error::Undefined(
            "PRR needs at least one correct and one incorrect record".into(),
        ));
    }
    let model = doubled_area(&retained_errors(confidences, correct));
    let oracle: Vec<u64> = (0..=n).map(|k| errors.saturating_sub(k)).collect();
    let oracle = doubled_area(&oracle);
    let random = u128::from(errors) * u128::from(n);
    let gain = random as f64 - model as f64;
    let best = random as f64 - oracle as f64;
    Ok(100.0 * gain / best)
}
