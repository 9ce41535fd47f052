//! Fitted calibrators and their JSON artifact format.
//!
//! ```json
//! {"method": "ts", "params": {"temperature": 1.7}, "version": 1}
//! ```
//!
//! `method` is one of `ts`, `cluster_ts`, `class_cluster_ts` or `lts`.
//! `params` holds the fields of [`GlobalTemperature`],
//! [`ClusterTemperatureModel`] or [`TemperatureRegressor`] respectively.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use relikit_core::softmax::softmax_with;
use relikit_core::{Error, LabeledImage, ProbTensor, Result};

use crate::cluster::{ClusterTemperatureModel, ClusterVariant};
use crate::lts::TemperatureRegressor;
use crate::temperature::{GlobalTemperature, TemperatureMap};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Calibrator {
    Global(GlobalTemperature),
    Cluster(ClusterTemperatureModel),
    Local(TemperatureRegressor),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    method: String,
    params: Value,
    version: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GlobalParams {
    temperature: GlobalTemperature,
}

impl Calibrator {
    pub fn method(&self) -> &'static str {
        match self {
            Calibrator::Global(_) => "ts",
            Calibrator::Cluster(m) if m.variant == ClusterVariant::PerClass => "class_cluster_ts",
            Calibrator::Cluster(_) => "cluster_ts",
            Calibrator::Local(_) => "lts",
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let params = match self {
            Calibrator::Global(t) => serde_json::to_value(GlobalParams { temperature: *t })?,
            Calibrator::Cluster(m) => serde_json::to_value(m)?,
            Calibrator::Local(r) => serde_json::to_value(r)?,
        };
        let envelope = Envelope {
            method: self.method().to_owned(),
            params,
            version: FORMAT_VERSION,
        };
        Ok(serde_json::to_string_pretty(&envelope)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let envelope: Envelope = serde_json::from_str(text)?;
        if envelope.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported calibrator version {} (expected {FORMAT_VERSION})",
                envelope.version
            )));
        }
        let calibrator = match envelope.method.as_str() {
            "ts" => Calibrator::Global(
                serde_json::from_value::<GlobalParams>(envelope.params)?.temperature,
            ),
            "cluster_ts" | "class_cluster_ts" => {
                let model: ClusterTemperatureModel = serde_json::from_value(envelope.params)?;
                let expected = if envelope.method == "cluster_ts" {
                    ClusterVariant::PerImage
                } else {
                    ClusterVariant::PerClass
                };
                if model.variant != expected {
                    return Err(Error::Format(format!(
                        "method `{}` does not match cluster variant {:?}",
                        envelope.method, model.variant
                    )));
                }
                model.check()?;
                Calibrator::Cluster(model)
            }
            "lts" => {
                let regressor: TemperatureRegressor = serde_json::from_value(envelope.params)?;
                regressor.check()?;
                Calibrator::Local(regressor)
            }
            other => {
                return Err(Error::Format(format!(
                    "unknown calibration method `{other}`"
                )))
            }
        };
        Ok(calibrator)
    }

    pub fn classes(&self) -> Option<usize> {
        match self {
            Calibrator::Global(_) => None,
            Calibrator::Cluster(m) => Some(m.classes),
            Calibrator::Local(r) => Some(r.classes),
        }
    }

    /// Per-pixel temperatures for one image.
    pub fn temperature_map(&self, image: &LabeledImage) -> Result<TemperatureMap> {
        let logits = &image.logits;
        match self {
            Calibrator::Global(t) => TemperatureMap::new(
                logits.height(),
                logits.width(),
                vec![t.value(); logits.num_pixels()],
            ),
            Calibrator::Cluster(model) => {
                let feature = image.feature.as_ref().ok_or_else(|| {
                    Error::Manifest(format!("image `{}` has no feature vector", image.image_id))
                })?;
                model.temperature_map(feature, logits)
            }
            Calibrator::Local(reg) => reg.predict_temperature_map(logits, image.image.as_ref()),
        }
    }

    /// Calibrated probabilities for one image.
    pub fn apply(&self, image: &LabeledImage) -> Result<ProbTensor> {
        if let Some(k) = self.classes() {
            if k != image.logits.classes() {
                return Err(Error::ShapeMismatch(format!(
                    "calibrator expects {k} classes, image `{}` has {}",
                    image.image_id,
                    image.logits.classes()
                )));
            }
        }
        let map = self.temperature_map(image)?;
        Ok(softmax_with(&image.logits, |i| map.values()[i]))
    }
}

pub fn save_calibrator(calibrator: &Calibrator, path: &Path) -> Result<()> {
    std::fs::write(path, calibrator.to_json()? + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_calibrator(path: &Path) -> Result<Calibrator> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Calibrator::from_json(&text)
}
