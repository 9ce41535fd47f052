//! Labeled calibration pixels gathered from images.

use relikit_core::records::select_pixels;
use relikit_core::softmax::log_sum_exp;
use relikit_core::tensor::argmax;
use relikit_core::{Error, LabeledImage, Result, Subsample};

/// Flat store of `(logit vector, true class)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationPixels {
    classes: usize,
    logits: Vec<f32>,
    labels: Vec<u16>,
}

impl CalibrationPixels {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            logits: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn from_parts(classes: usize, logits: Vec<f32>, labels: Vec<u16>) -> Result<Self> {
        if classes < 2 || logits.len() != labels.len() * classes {
            return Err(Error::ShapeMismatch(format!(
                "{} logits for {} labels with {classes} classes",
                logits.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&l| usize::from(l) >= classes) {
            return Err(Error::InvalidArgument("label out of range".into()));
        }
        if logits.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidTensor("non-finite logit".into()));
        }
        Ok(Self {
            classes,
            logits,
            labels,
        })
    }

    /// Non-ignore pixels of one image, subsampled per `subsample`.
    pub fn from_image(
        image: &LabeledImage,
        ignore: u16,
        subsample: Option<&Subsample>,
    ) -> Result<Self> {
        let k = image.logits.classes();
        image.labels.check_classes(k, ignore)?;
        let picked = select_pixels(&image.labels, ignore, subsample, &image.image_id);
        let mut out = Self::new(k);
        out.logits.reserve(picked.len() * k);
        out.labels.reserve(picked.len());
        for i in picked {
            out.logits.extend_from_slice(image.logits.pixel(i));
            out.labels.push(image.labels.data()[i]);
        }
        Ok(out)
    }

    pub fn from_images<'a>(
        images: impl IntoIterator<Item = &'a LabeledImage>,
        ignore: u16,
        subsample: Option<&Subsample>,
    ) -> Result<Self> {
        let mut out: Option<Self> = None;
        for image in images {
            let px = Self::from_image(image, ignore, subsample)?;
            match &mut out {
                None => out = Some(px),
                Some(acc) => acc.append(&px)?,
            }
        }
        out.ok_or_else(|| Error::Empty("no calibration images".into()))
    }

    pub fn append(&mut self, other: &CalibrationPixels) -> Result<()> {
        if self.logits.is_empty() && self.labels.is_empty() {
            self.classes = other.classes;
        }
        if other.classes != self.classes {
            return Err(Error::ShapeMismatch("class count differs".into()));
        }
        self.logits.extend_from_slice(&other.logits);
        self.labels.extend_from_slice(&other.labels);
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn logits(&self, i: usize) -> &[f32] {
        &self.logits[i * self.classes..(i + 1) * self.classes]
    }

    pub fn label(&self, i: usize) -> u16 {
        self.labels[i]
    }

    /// Pixels whose logits' argmax is `class`.
    pub fn predicted_as(&self, class: u16) -> Self {
        let mut out = Self::new(self.classes);
        for i in 0..self.len() {
            if argmax(self.logits(i)) == class {
                out.logits.extend_from_slice(self.logits(i));
                out.labels.push(self.labels[i]);
            }
        }
        out
    }

    /// Mean negative log-likelihood of the true class under `softmax(z / t)`.
    pub fn mean_nll(&self, t: f64) -> f64 {
        let inv = 1.0 / t;
        let total: f64 = (0..self.len())
            .map(|i| {
                let z = self.logits(i);
                log_sum_exp(z, inv) - f64::from(z[usize::from(self.labels[i])]) * inv
            })
            .sum();
        total / self.len() as f64
    }
}
