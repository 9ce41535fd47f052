//! Flat (confidence, predicted, actual, image) records: the shared input of
//! every reliability metric.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng;
use crate::softmax::{ConfidenceMap, ConfidenceScore};
use crate::tensor::LabelMap;

/// Default number of pixels drawn from each image.
pub const DEFAULT_PIXELS_PER_IMAGE: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRecord {
    pub confidence: f64,
    pub predicted: u16,
    pub actual: u16,
    /// Index into the owning set's image id list.
    pub image: u32,
}

impl PredictionRecord {
    pub fn is_correct(&self) -> bool {
        self.predicted == self.actual
    }
}

/// Uniform per-image pixel subsampling without replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subsample {
    pub pixels_per_image: usize,
    pub seed: u64,
}

impl Subsample {
    pub fn new(pixels_per_image: usize, seed: u64) -> Result<Self> {
        if pixels_per_image == 0 {
            return Err(Error::InvalidArgument(
                "pixels_per_image must be at least 1".into(),
            ));
        }
        Ok(Self {
            pixels_per_image,
            seed,
        })
    }

    pub fn with_seed(seed: u64) -> Self {
        Self {
            pixels_per_image: DEFAULT_PIXELS_PER_IMAGE,
            seed,
        }
    }
}

/// Indices of the labeled pixels kept for `image_id`, in ascending pixel order.
pub fn select_pixels(
    labels: &LabelMap,
    ignore: u16,
    subsample: Option<&Subsample>,
    image_id: &str,
) -> Vec<usize> {
    let valid: Vec<usize> = labels
        .data()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l != ignore)
        .map(|(i, _)| i)
        .collect();
    match subsample {
        Some(s) if s.pixels_per_image < valid.len() => {
            let mut rng = rng::image_stream(s.seed, image_id);
            let mut picked = index::sample(&mut rng, valid.len(), s.pixels_per_image).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| valid[i]).collect()
        }
        _ => valid,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecordSet {
    score: ConfidenceScore,
    classes: usize,
    image_ids: Vec<String>,
    records: Vec<PredictionRecord>,
}

impl PredictionRecordSet {
    pub fn new(score: ConfidenceScore, classes: usize) -> Self {
        Self {
            score,
            classes,
            image_ids: Vec::new(),
            records: Vec::new(),
        }
    }

    /// Builds a max-probability record set straight from confidences and
    /// correctness flags. Correct records get `actual == predicted == 0`,
    /// incorrect ones `actual == 1`.
    pub fn from_outcomes(confidences: &[f64], correct: &[bool]) -> Result<Self> {
        if confidences.len() != correct.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} confidences vs {} outcomes",
                confidences.len(),
                correct.len()
            )));
        }
        if let Some(c) = confidences.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite confidence {c}")));
        }
        let mut set = Self::new(ConfidenceScore::MaxProb, 2);
        set.image_ids.push("outcomes".into());
        set.records = confidences
            .iter()
            .zip(correct)
            .map(|(&confidence, &ok)| PredictionRecord {
                confidence,
                predicted: 0,
                actual: u16::from(!ok),
                image: 0,
            })
            .collect();
        Ok(set)
    }

    pub fn score(&self) -> ConfidenceScore {
        self.score
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn image_id(&self, record: &PredictionRecord) -> &str {
        &self.image_ids[record.image as usize]
    }

    pub fn confidences(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.confidence).collect()
    }

    pub fn correctness(&self) -> Vec<bool> {
        self.records
            .iter()
            .map(PredictionRecord::is_correct)
            .collect()
    }

    /// Confidences mapped onto `[0, 1]` for binned calibration metrics.
    pub fn unit_confidences(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| self.score.normalize(r.confidence, self.classes))
            .collect()
    }

    pub fn accuracy(&self) -> f64 {
        let correct = self.records.iter().filter(|r| r.is_correct()).count();
        correct as f64 / self.records.len() as f64
    }

    /// Appends all records of `other`, keeping image order.
    pub fn extend(&mut self, other: PredictionRecordSet) -> Result<()> {
        if other.score != self.score || other.classes != self.classes {
            return Err(Error::InvalidArgument(
                "cannot merge record sets with different scores or class counts".into(),
            ));
        }
        let offset = self.image_ids.len() as u32;
        self.image_ids.extend(other.image_ids);
        self.records.extend(other.records.into_iter().map(|mut r| {
            r.image += offset;
            r
        }));
        Ok(())
    }

    /// Concatenates per-image sets in the given order.
    pub fn concat(
        score: ConfidenceScore,
        classes: usize,
        sets: impl IntoIterator<Item = PredictionRecordSet>,
    ) -> Result<Self> {
        let mut all = Self::new(score, classes);
        for set in sets {
            all.extend(set)?;
        }
        Ok(all)
    }
}

/// Records for one image: ignore-labeled pixels are dropped, and the rest are
/// optionally subsampled deterministically per `(seed, image_id)`.
pub fn extract_records(
    confidence: &ConfidenceMap,
    labels: &LabelMap,
    ignore: u16,
    subsample: Option<&Subsample>,
    image_id: &str,
) -> Result<PredictionRecordSet> {
    if (confidence.height, confidence.width) != labels.shape() {
        return Err(Error::ShapeMismatch(format!(
            "confidence map {}x{} vs labels {}x{} for image {image_id}",
            confidence.height,
            confidence.width,
            labels.height(),
            labels.width()
        )));
    }
    labels.check_classes(confidence.classes, ignore)?;
    let mut set = PredictionRecordSet::new(confidence.score, confidence.classes);
    set.image_ids.push(image_id.to_owned());
    set.records = select_pixels(labels, ignore, subsample, image_id)
        .into_iter()
        .map(|i| PredictionRecord {
            confidence: confidence.confidence[i],
            predicted: confidence.predicted[i],
            actual: labels.data()[i],
            image: 0,
        })
        .collect();
    Ok(set)
}
