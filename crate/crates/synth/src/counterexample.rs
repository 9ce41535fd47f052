//! Two record populations on which lowering the calibration error of each
//! subset separately raises it on their union.
//!
//! With residual `r_i = acc_i − conf_i` per bin, model `f` has `r` on every
//! bin of `B` and `−r` on every bin of `B′`; model `f_oracle` has `−r/2` on
//! both. Each subset improves (`|r|/2 < |r|`) while the union, where `f`'s
//! residuals cancel, degrades from `0` to `|r|/2`.

use serde::{Deserialize, Serialize};

use relikit_core::{Error, PredictionRecordSet, Result};
use relikit_metrics::binning::equal_width_bin;
use relikit_metrics::{ece, BinStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    /// Number of equal-width bins.
    pub bins: usize,
    /// Residual of `f` on `B`; must be non-zero.
    pub residual: f64,
    /// Records per bin in each subset.
    pub per_bin: usize,
}

impl Default for CounterexampleSpec {
    fn default() -> Self {
        Self {
            bins: 3,
            residual: 0.2,
            per_bin: 100,
        }
    }
}

/// Residuals of one bin for both models on both subsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinResiduals {
    pub bin: usize,
    pub accuracy_b: f64,
    pub accuracy_b_prime: f64,
    pub f_b: f64,
    pub f_b_prime: f64,
    pub oracle_b: f64,
    pub oracle_b_prime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub spec: CounterexampleSpec,
    pub f_b: PredictionRecordSet,
    pub f_b_prime: PredictionRecordSet,
    pub oracle_b: PredictionRecordSet,
    pub oracle_b_prime: PredictionRecordSet,
    pub residuals: Vec<BinResiduals>,
}

/// The six calibration errors and the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub f_b: f64,
    pub f_b_prime: f64,
    pub f_union: f64,
    pub oracle_b: f64,
    pub oracle_b_prime: f64,
    pub oracle_union: f64,
    /// Every subset improves and the union gets worse.
    pub holds: bool,
}

fn in_bin(conf: f64, bin: usize, bins: usize) -> bool {
    (0.0..=1.0).contains(&conf) && equal_width_bin(conf, bins) == bin
}

/// Picks the number of correct records `k` for bin `bin` such that every
/// confidence `k / c + shift` lands inside the bin, preferring the one
/// closest to the bin centre.
fn pick_correct(bin: usize, spec: &CounterexampleSpec, shifts: [f64; 2]) -> Option<usize> {
    let c = spec.per_bin;
    let centre = (bin as f64 + 0.5) / spec.bins as f64;
    (0..=c)
        .filter(|&k| {
            shifts
                .iter()
                .all(|s| in_bin(k as f64 / c as f64 + s, bin, spec.bins))
        })
        .min_by(|&a, &b| {
            let dist =
                |k: usize| ((k as f64 / c as f64) + 0.5 * (shifts[0] + shifts[1]) - centre).abs();
            dist(a).total_cmp(&dist(b))
        })
}

fn group(conf: f64, correct: usize, total: usize) -> (Vec<f64>, Vec<bool>) {
    (vec![conf; total], (0..total).map(|i| i < correct).collect())
}

pub fn build_counterexample(spec: &CounterexampleSpec) -> Result<Counterexample> {
    let r = spec.residual;
    if spec.bins == 0 || spec.per_bin == 0 {
        return Err(Error::InvalidArgument(
            "bins and per_bin must be positive".into(),
        ));
    }
    if !r.is_finite() || r == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "residual must be finite and non-zero, got {r}"
        )));
    }
    let c = spec.per_bin;
    let mut parts: [(Vec<f64>, Vec<bool>); 4] = Default::default();
    let mut residuals = Vec::with_capacity(spec.bins);
    for bin in 0..spec.bins {
        // conf = acc − residual
        let k_b = pick_correct(bin, spec, [-r, 0.5 * r]).ok_or_else(|| infeasible(spec, bin))?;
        let k_bp = pick_correct(bin, spec, [r, 0.5 * r]).ok_or_else(|| infeasible(spec, bin))?;
        let (acc_b, acc_bp) = (k_b as f64 / c as f64, k_bp as f64 / c as f64);
        let confs = [acc_b - r, acc_bp + r, acc_b + 0.5 * r, acc_bp + 0.5 * r];
        let correct = [k_b, k_bp, k_b, k_bp];
        for ((part, &conf), &k) in parts.iter_mut().zip(&confs).zip(&correct) {
            let (cs, ok) = group(conf, k, c);
            part.0.extend(cs);
            part.1.extend(ok);
        }
        residuals.push(BinResiduals {
            bin,
            accuracy_b: acc_b,
            accuracy_b_prime: acc_bp,
            f_b: acc_b - confs[0],
            f_b_prime: acc_bp - confs[1],
            oracle_b: acc_b - confs[2],
            oracle_b_prime: acc_bp - confs[3],
        });
    }
    let [fb, fbp, ob, obp] = parts;
    let set = |(conf, ok): (Vec<f64>, Vec<bool>)| PredictionRecordSet::from_outcomes(&conf, &ok);
    Ok(Counterexample {
        spec: *spec,
        f_b: set(fb)?,
        f_b_prime: set(fbp)?,
        oracle_b: set(ob)?,
        oracle_b_prime: set(obp)?,
        residuals,
    })
}

fn infeasible(spec: &CounterexampleSpec, bin: usize) -> Error {
    Error::InvalidArgument(format!(
        "residual {} cannot be realised in bin {bin} of {} with {} records per bin",
        spec.residual, spec.bins, spec.per_bin
    ))
}

impl Counterexample {
    /// Evaluates equal-width ECE with the spec's bin count on both subsets
    /// and their union, for both models.
    pub fn check(&self) -> Result<TheoremCheck> {
        let m = self.spec.bins;
        let e = |s: &PredictionRecordSet| ece(s, m, BinStrategy::EqualWidth);
        let union = |a: &PredictionRecordSet, b: &PredictionRecordSet| -> Result<f64> {
            let mut u = a.clone();
            u.extend(b.clone())?;
            e(&u)
        };
        let (f_b, f_b_prime, f_union) = (
            e(&self.f_b)?,
            e(&self.f_b_prime)?,
            union(&self.f_b, &self.f_b_prime)?,
        );
        let (oracle_b, oracle_b_prime, oracle_union) = (
            e(&self.oracle_b)?,
            e(&self.oracle_b_prime)?,
            union(&self.oracle_b, &self.oracle_b_prime)?,
        );
        Ok(TheoremCheck {
            f_b,
            f_b_prime,
            f_union,
            oracle_b,
            oracle_b_prime,
            oracle_union,
            holds: oracle_b <= f_b && oracle_b_prime <= f_b_prime && oracle_union > f_union,
        })
    }
}
