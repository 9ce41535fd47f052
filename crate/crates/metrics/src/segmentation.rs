//! Confusion-matrix based segmentation quality.

use serde::{Deserialize, Serialize};

use relikit_core::{Error, LabelMap, Result};

/// Pixel counts indexed `[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.classes + predicted]
    }

    /// Adds every non-ignore pixel of one image.
    pub fn accumulate(&mut self, predicted: &[u16], labels: &LabelMap, ignore: u16) -> Result<()> {
        if predicted.len() != labels.num_pixels() {
            return Err(Error::ShapeMismatch(format!(
                "{} predictions vs {} labels",
                predicted.len(),
                labels.num_pixels()
            )));
        }
        let k = self.classes;
        for (&p, &a) in predicted.iter().zip(labels.data()) {
            if a == ignore {
                continue;
            }
            let (a, p) = (usize::from(a), usize::from(p));
            if a >= k || p >= k {
                return Err(Error::InvalidTensor(format!(
                    "class index out of range for {k} classes"
                )));
            }
            self.counts[a * k + p] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn iou(&self) -> Result<SegmentationScore> {
        let k = self.classes;
        let per_class: Vec<Option<f64>> = (0..k)
            .map(|c| {
                let tp = self.get(c, c);
                let fn_: u64 = (0..k).map(|p| self.get(c, p)).sum::<u64>() - tp;
                let fp: u64 = (0..k).map(|a| self.get(a, c)).sum::<u64>() - tp;
                let union = tp + fp + fn_;
                (union > 0).then(|| tp as f64 / union as f64)
            })
            .collect();
        let present: Vec<f64> = per_class.iter().flatten().copied().collect();
        if present.is_empty() {
            return Err(Error::Empty(
                "no evaluable class (all pixels ignored)".into(),
            ));
        }
        Ok(SegmentationScore {
            miou: present.iter().sum::<f64>() / present.len() as f64,
            per_class_iou: per_class,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationScore {
    pub miou: f64,
    /// `None` for classes absent from both predictions and labels.
    pub per_class_iou: Vec<Option<f64>>,
}

/// Mean IoU over all images, pooling pixel counts before dividing.
pub fn miou(
    predictions: &[Vec<u16>],
    labels: &[LabelMap],
    classes: usize,
    ignore: u16,
) -> Result<SegmentationScore> {
    if predictions.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} prediction maps vs {} label maps",
            predictions.len(),
            labels.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(classes);
    for (p, l) in predictions.iter().zip(labels) {
        cm.accumulate(p, l, ignore)?;
    }
    cm.iou()
}
