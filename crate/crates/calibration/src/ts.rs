//! Global temperature scaling fitted by negative log-likelihood.

use relikit_core::{Error, Result};

use crate::pixels::CalibrationPixels;
use crate::search::grid_then_golden;
use crate::temperature::{GlobalTemperature, T_MAX, T_MIN};

/// Coarse grid size over `ln T` before golden-section refinement.
pub const GRID_POINTS: usize = 32;
/// Absolute tolerance of the refinement in `ln T`.
pub const LN_T_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsFit {
    pub temperature: GlobalTemperature,
    /// Mean NLL at the fitted temperature.
    pub nll: f64,
    /// Mean NLL of the uncalibrated model (`T = 1`).
    pub nll_at_one: f64,
    pub pixels: usize,
}

/// Fits a single temperature minimising mean NLL over `pixels`. The search
/// runs over `ln T ∈ [ln T_MIN, ln T_MAX]` and always evaluates `T = 1`.
pub fn fit_global_ts(pixels: &CalibrationPixels) -> Result<TsFit> {
    if pixels.is_empty() {
        return Err(Error::Empty("no calibration pixels".into()));
    }
    let objective = |ln_t: f64| pixels.mean_nll(ln_t.exp());
    let (ln_t, nll) = grid_then_golden(
        objective,
        T_MIN.ln(),
        T_MAX.ln(),
        GRID_POINTS,
        LN_T_TOLERANCE,
        &[0.0],
    )?;
    Ok(TsFit {
        temperature: GlobalTemperature::clamped(ln_t.exp()),
        nll,
        nll_at_one: pixels.mean_nll(1.0),
        pixels: pixels.len(),
    })
}
