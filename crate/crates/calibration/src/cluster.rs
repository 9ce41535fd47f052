//! Cluster-based temperature scaling: images are grouped by k-means in
//! feature space and each group gets its own temperature (or its own
//! temperature per predicted class). Test images borrow the temperature of
//! the nearest centroid.

use serde::{Deserialize, Serialize};

use relikit_core::softmax::softmax_with;
use relikit_core::{Error, ImageFeature, LabeledImage, LogitTensor, ProbTensor, Result, Subsample};

use crate::kmeans::{kmeans, nearest, KMeansConfig};
use crate::pixels::CalibrationPixels;
use crate::temperature::{GlobalTemperature, TemperatureMap};
use crate::ts::fit_global_ts;

/// Default number of clusters.
pub const DEFAULT_CLUSTERS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterVariant {
    /// One temperature per cluster.
    #[default]
    PerImage,
    /// One temperature per (cluster, predicted class).
    PerClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTemperatureModel {
    pub variant: ClusterVariant,
    pub classes: usize,
    pub centroids: Vec<Vec<f64>>,
    /// `k × 1` for `PerImage`, `k × classes` for `PerClass`.
    pub temperatures: Vec<Vec<f64>>,
    /// Temperature fitted on the whole calibration set; used for empty cells.
    pub global_temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterTsConfig {
    pub k: usize,
    pub variant: ClusterVariant,
    pub seed: u64,
    pub ignore: u16,
    pub subsample: Option<Subsample>,
}

impl ClusterTsConfig {
    pub fn new(k: usize, variant: ClusterVariant, seed: u64) -> Self {
        Self {
            k,
            variant,
            seed,
            ignore: relikit_core::DEFAULT_IGNORE,
            subsample: Some(Subsample::with_seed(seed)),
        }
    }
}

fn feature_f64(feature: &ImageFeature) -> Vec<f64> {
    feature.vector.iter().map(|&v| f64::from(v)).collect()
}

pub fn fit_cluster_ts(
    images: &[LabeledImage],
    config: &ClusterTsConfig,
) -> Result<ClusterTemperatureModel> {
    if images.is_empty() {
        return Err(Error::Empty("no calibration images".into()));
    }
    let features: Vec<Vec<f64>> = images
        .iter()
        .map(|img| {
            img.feature.as_ref().map(feature_f64).ok_or_else(|| {
                Error::Manifest(format!(
                    "calibration image `{}` has no feature vector",
                    img.image_id
                ))
            })
        })
        .collect::<Result<_>>()?;
    let clustering = kmeans(&features, &KMeansConfig::new(config.k, config.seed))?;

    let per_image: Vec<CalibrationPixels> = images
        .iter()
        .map(|img| CalibrationPixels::from_image(img, config.ignore, config.subsample.as_ref()))
        .collect::<Result<_>>()?;
    let classes = images[0].logits.classes();
    let mut everything = CalibrationPixels::new(classes);
    for px in &per_image {
        everything.append(px)?;
    }
    let global = fit_global_ts(&everything)?.temperature.value();

    let fit_or_global = |px: &CalibrationPixels| -> Result<f64> {
        if px.is_empty() {
            Ok(global)
        } else {
            Ok(fit_global_ts(px)?.temperature.value())
        }
    };

    let mut temperatures = Vec::with_capacity(config.k);
    for cluster in 0..config.k {
        let mut members = CalibrationPixels::new(classes);
        for (px, &a) in per_image.iter().zip(&clustering.assignments) {
            if a == cluster {
                members.append(px)?;
            }
        }
        let row = match config.variant {
            ClusterVariant::PerImage => vec![fit_or_global(&members)?],
            ClusterVariant::PerClass => (0..classes)
                .map(|c| fit_or_global(&members.predicted_as(c as u16)))
                .collect::<Result<_>>()?,
        };
        temperatures.push(row);
    }
    Ok(ClusterTemperatureModel {
        variant: config.variant,
        classes,
        centroids: clustering.centroids,
        temperatures,
        global_temperature: global,
    })
}

impl ClusterTemperatureModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    /// Checks internal consistency (used after deserialisation).
    pub fn check(&self) -> Result<()> {
        let width = match self.variant {
            ClusterVariant::PerImage => 1,
            ClusterVariant::PerClass => self.classes,
        };
        let dim = self.feature_dim();
        if self.centroids.is_empty()
            || self.centroids.iter().any(|c| c.len() != dim)
            || self.temperatures.len() != self.centroids.len()
            || self.temperatures.iter().any(|r| r.len() != width)
        {
            return Err(Error::ShapeMismatch(
                "cluster model dimensions are inconsistent".into(),
            ));
        }
        for &t in self
            .temperatures
            .iter()
            .flatten()
            .chain([&self.global_temperature])
        {
            GlobalTemperature::new(t)?;
        }
        Ok(())
    }

    /// Nearest centroid of `feature`; ties go to the lowest index.
    pub fn assign(&self, feature: &ImageFeature) -> Result<usize> {
        if feature.dim() != self.feature_dim() {
            return Err(Error::ShapeMismatch(format!(
                "feature has {} dimensions, model expects {}",
                feature.dim(),
                self.feature_dim()
            )));
        }
        Ok(nearest(&self.centroids, &feature_f64(feature)))
    }

    /// Per-pixel temperatures for an image.
    pub fn temperature_map(
        &self,
        feature: &ImageFeature,
        logits: &LogitTensor,
    ) -> Result<TemperatureMap> {
        let row = &self.temperatures[self.assign(feature)?];
        let values = match self.variant {
            ClusterVariant::PerImage => vec![row[0]; logits.num_pixels()],
            ClusterVariant::PerClass => logits
                .argmax()
                .into_iter()
                .map(|c| row[usize::from(c)])
                .collect(),
        };
        TemperatureMap::new(logits.height(), logits.width(), values)
    }

    pub fn apply(&self, feature: &ImageFeature, logits: &LogitTensor) -> Result<ProbTensor> {
        if logits.classes() != self.classes {
            return Err(Error::ShapeMismatch(format!(
                "logits have {} classes, model {}",
                logits.classes(),
                self.classes
            )));
        }
        let map = self.temperature_map(feature, logits)?;
        Ok(softmax_with(logits, |i| map.values()[i]))
    }
}

/// Applies a fitted cluster model to one image.
pub fn apply_cluster_ts(
    model: &ClusterTemperatureModel,
    feature: &ImageFeature,
    logits: &LogitTensor,
) -> Result<ProbTensor> {
    model.apply(feature, logits)
}
