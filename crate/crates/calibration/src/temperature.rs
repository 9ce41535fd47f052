use serde::{Deserialize, Serialize};

use relikit_core::softmax::softmax_with;
use relikit_core::{Error, LogitTensor, ProbTensor, Result};

/// Lower bound of every fitted temperature.
pub const T_MIN: f64 = 0.05;
/// Upper bound of every fitted temperature.
pub const T_MAX: f64 = 20.0;

/// A single temperature shared by every pixel, within `[T_MIN, T_MAX]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct GlobalTemperature(f64);

impl GlobalTemperature {
    pub fn new(t: f64) -> Result<Self> {
        if !(T_MIN..=T_MAX).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "temperature {t} outside [{T_MIN}, {T_MAX}]"
            )));
        }
        Ok(Self(t))
    }

    /// Clamps into the allowed range (NaN maps to 1).
    pub fn clamped(t: f64) -> Self {
        if t.is_nan() {
            return Self(1.0);
        }
        Self(t.clamp(T_MIN, T_MAX))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn apply(self, logits: &LogitTensor) -> ProbTensor {
        softmax_with(logits, |_| self.0)
    }
}

impl TryFrom<f64> for GlobalTemperature {
    type Error = Error;

    fn try_from(t: f64) -> Result<Self> {
        Self::new(t)
    }
}

impl From<GlobalTemperature> for f64 {
    fn from(t: GlobalTemperature) -> f64 {
        t.0
    }
}

/// One strictly positive temperature per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl TemperatureMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} temperatures for a {height}x{width} map",
                values.len()
            )));
        }
        if let Some(t) = values.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "temperature map entry {t} is not strictly positive"
            )));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `softmax(logits / t)` for a scalar temperature.
pub fn apply_temperature(logits: &LogitTensor, t: f64) -> Result<ProbTensor> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be strictly positive, got {t}"
        )));
    }
    Ok(softmax_with(logits, |_| t))
}

/// `softmax(logits / t(x))` with a per-pixel temperature.
pub fn apply_temperature_map(logits: &LogitTensor, map: &TemperatureMap) -> Result<ProbTensor> {
    if (map.height, map.width) != (logits.height(), logits.width()) {
        return Err(Error::ShapeMismatch(format!(
            "temperature map {}x{} vs logits {}x{}",
            map.height,
            map.width,
            logits.height(),
            logits.width()
        )));
    }
    Ok(softmax_with(logits, |i| map.values[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use relikit_core::{confidence_map, softmax, ConfidenceScore};

    fn two_class(z0: f32, z1: f32) -> LogitTensor {
        LogitTensor::new(1, 1, 2, vec![z0, z1]).unwrap()
    }

    #[test]
    fn unit_temperature_is_plain_softmax() {
        let l = LogitTensor::new(1, 2, 3, vec![0.3, -1.0, 2.5, 4.0, 4.0, -2.0]).unwrap();
        assert_eq!(apply_temperature(&l, 1.0).unwrap(), softmax(&l));
    }

    #[test]
    fn large_temperature_flattens_without_changing_argmax() {
        let p = apply_temperature(&two_class(2.0, 0.0), 1e6).unwrap();
        assert!((p.data()[0] - 0.5).abs() < 1e-6);
        assert!(p.data()[0] > p.data()[1]);
    }

    #[test]
    fn closed_form_value() {
        let p = apply_temperature(&two_class(2.0, 0.0), 2.0).unwrap();
        let e = std::f64::consts::E;
        assert!((p.data()[0] - e / (e + 1.0)).abs() < 1e-15);
        assert!((p.data()[0] - 0.731).abs() < 1e-3);
        assert!((p.data()[1] - 1.0 / (e + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn non_positive_temperatures_are_rejected() {
        let l = two_class(1.0, 0.0);
        assert!(apply_temperature(&l, 0.0).is_err());
        assert!(apply_temperature(&l, -1.0).is_err());
        assert!(apply_temperature(&l, f64::NAN).is_err());
        assert!(TemperatureMap::new(1, 1, vec![0.0]).is_err());
        assert!(GlobalTemperature::new(0.01).is_err());
        assert!(GlobalTemperature::new(25.0).is_err());
        assert_eq!(GlobalTemperature::clamped(100.0).value(), T_MAX);
    }

    #[test]
    fn per_pixel_map_preserves_argmax() {
        let l = LogitTensor::new(1, 3, 2, vec![1.0, 0.0, -0.5, 0.2, 3.0, 3.0]).unwrap();
        let map = TemperatureMap::new(1, 3, vec![0.1, 5.0, 2.0]).unwrap();
        let before = confidence_map(&softmax(&l), ConfidenceScore::MaxProb).predicted;
        let after = confidence_map(
            &apply_temperature_map(&l, &map).unwrap(),
            ConfidenceScore::MaxProb,
        )
        .predicted;
        assert_eq!(before, after);
        let bad = TemperatureMap::new(3, 1, vec![1.0; 3]).unwrap();
        assert!(apply_temperature_map(&l, &bad).is_err());
    }
}
