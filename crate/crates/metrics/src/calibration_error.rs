//! Binned (ECE, adaptive ECE) and binning-free (KS) calibration errors.

use relikit_core::{Error, PredictionRecordSet, Result};

use crate::binning::{BinPartition, BinStrategy};

fn non_empty(records: &PredictionRecordSet) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Empty(
            "calibration error of an empty record set".into(),
        ));
    }
    Ok(())
}

pub fn reliability_bins(
    records: &PredictionRecordSet,
    bins: usize,
    strategy: BinStrategy,
) -> Result<BinPartition> {
    non_empty(records)?;
    BinPartition::build(
        &records.unit_confidences(),
        &records.correctness(),
        bins,
        strategy,
    )
}

/// Expected calibration error over `bins` bins. `EqualPopulation` gives the
/// adaptive variant.
pub fn ece(records: &PredictionRecordSet, bins: usize, strategy: BinStrategy) -> Result<f64> {
    reliability_bins(records, bins, strategy).map(|p| p.calibration_error())
}

pub fn ece_from(
    confidences: &[f64],
    correct: &[bool],
    bins: usize,
    strategy: BinStrategy,
) -> Result<f64> {
    if confidences.is_empty() {
        return Err(Error::Empty(
            "calibration error of an empty record set".into(),
        ));
    }
    BinPartition::build(confidences, correct, bins, strategy).map(|p| p.calibration_error())
}

/// Kolmogorov–Smirnov calibration error: the largest normalised gap between
/// cumulative confidence and cumulative correctness over confidence-sorted
/// prefixes. Ties keep record order.
pub fn ks_error(records: &PredictionRecordSet) -> Result<f64> {
    non_empty(records)?;
    ks_error_from(&records.unit_confidences(), &records.correctness())
}

pub fn ks_error_from(confidences: &[f64], correct: &[bool]) -> Result<f64> {
    if confidences.is_empty() {
        return Err(Error::Empty(
            "calibration error of an empty record set".into(),
        ));
    }
    if confidences.len() != correct.len() {
        return Err(Error::ShapeMismatch(
            "confidences and outcomes differ in length".into(),
        ));
    }
    let mut order: Vec<usize> = (0..confidences.len()).collect();
    order.sort_by(|&a, &b| confidences[a].total_cmp(&confidences[b]));
    let n = confidences.len() as f64;
    let (mut cum_conf, mut cum_hits, mut worst) = (0.0f64, 0.0f64, 0.0f64);
    for i in order {
        cum_conf += confidences[i];
        cum_hits += f64::from(u8::from(correct[i]));
        worst = worst.max((cum_conf - cum_hits).abs());
    }
    Ok(worst / n)
}
