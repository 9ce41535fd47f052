//! Per-pixel tensors: raw logits, probabilities, label maps, auxiliary image
//! channels and per-image feature vectors.

use crate::error::{Error, Result};

/// Default sentinel for pixels that carry no ground-truth class.
pub const DEFAULT_IGNORE: u16 = 255;

/// Raw class scores for one image, row-major `height × width × classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitTensor {
    height: usize,
    width: usize,
    classes: usize,
    data: Vec<f32>,
}

impl LogitTensor {
    pub fn new(height: usize, width: usize, classes: usize, data: Vec<f32>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidTensor(format!(
                "logit tensor needs at least 2 classes, got {classes}"
            )));
        }
        check_len(height * width * classes, data.len())?;
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidTensor(format!(
                "non-finite logit {} at element {pos}",
                data[pos]
            )));
        }
        Ok(Self {
            height,
            width,
            classes,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn num_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, index: usize) -> &[f32] {
        &self.data[index * self.classes..(index + 1) * self.classes]
    }

    pub fn pixels(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.classes)
    }

    /// Class with the largest logit at every pixel; ties go to the lowest index.
    pub fn argmax(&self) -> Vec<u16> {
        self.pixels().map(argmax).collect()
    }
}

/// Per-pixel probability vectors with the same shape as the logits they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTensor {
    height: usize,
    width: usize,
    classes: usize,
    data: Vec<f64>,
}

impl ProbTensor {
    /// Wraps externally computed probabilities, checking that every pixel is
    /// a distribution.
    pub fn new(height: usize, width: usize, classes: usize, data: Vec<f64>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidTensor(format!(
                "probability tensor needs at least 2 classes, got {classes}"
            )));
        }
        check_len(height * width * classes, data.len())?;
        for (i, px) in data.chunks_exact(classes).enumerate() {
            let sum: f64 = px.iter().sum();
            if px.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidTensor(format!(
                    "pixel {i} is not a probability vector (sum {sum})"
                )));
            }
        }
        Ok(Self::from_parts(height, width, classes, data))
    }

    pub(crate) fn from_parts(height: usize, width: usize, classes: usize, data: Vec<f64>) -> Self {
        Self {
            height,
            width,
            classes,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn num_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, index: usize) -> &[f64] {
        &self.data[index * self.classes..(index + 1) * self.classes]
    }

    pub fn pixels(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.classes)
    }
}

/// Ground-truth class per pixel, with a sentinel for unlabeled pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    data: Vec<u16>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, data: Vec<u16>) -> Result<Self> {
        check_len(height * width, data.len())?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Checks that every non-ignore value names one of `classes` classes.
    pub fn check_classes(&self, classes: usize, ignore: u16) -> Result<()> {
        match self
            .data
            .iter()
            .position(|&v| v != ignore && usize::from(v) >= classes)
        {
            Some(pos) => Err(Error::InvalidTensor(format!(
                "label {} at pixel {pos} is out of range for {classes} classes",
                self.data[pos]
            ))),
            None => Ok(()),
        }
    }
}

/// Auxiliary per-pixel input channels (what an image-conditioned calibrator sees).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidTensor(
                "image tensor has zero channels".into(),
            ));
        }
        check_len(height * width * channels, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTensor("non-finite image value".into()));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, index: usize) -> &[f32] {
        &self.data[index * self.channels..(index + 1) * self.channels]
    }
}

/// Fixed-length descriptor of a whole image, used for cluster assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFeature {
    pub image_id: String,
    pub vector: Vec<f32>,
}

impl ImageFeature {
    pub fn new(image_id: impl Into<String>, vector: Vec<f32>) -> Result<Self> {
        if vector.is_empty() || vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTensor(
                "feature vector must be non-empty and finite".into(),
            ));
        }
        Ok(Self {
            image_id: image_id.into(),
            vector,
        })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> u16 {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best as u16
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::ShapeMismatch(format!(
            "expected {expected} elements, got {actual}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logits_reject_bad_shapes_and_values() {
        assert!(LogitTensor::new(1, 1, 1, vec![0.0]).is_err());
        assert!(LogitTensor::new(1, 2, 2, vec![0.0; 3]).is_err());
        assert!(LogitTensor::new(1, 1, 2, vec![0.0, f32::NAN]).is_err());
        assert!(LogitTensor::new(1, 1, 2, vec![f32::INFINITY, 0.0]).is_err());
        assert!(LogitTensor::new(1, 2, 2, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[0.5_f64, 0.5]), 0);
        assert_eq!(argmax(&[0.1_f64, 0.7, 0.7]), 1);
        assert_eq!(argmax(&[3.0_f32, 1.0, 2.0]), 0);
    }

    #[test]
    fn label_class_check_skips_ignore() {
        let labels = LabelMap::new(1, 3, vec![0, 255, 1]).unwrap();
        assert!(labels.check_classes(2, 255).is_ok());
        assert!(labels.check_classes(1, 255).is_err());
    }

    #[test]
    fn prob_tensor_validates_rows() {
        assert!(ProbTensor::new(1, 1, 2, vec![0.5, 0.5]).is_ok());
        assert!(ProbTensor::new(1, 1, 2, vec![0.6, 0.5]).is_err());
        assert!(ProbTensor::new(1, 1, 2, vec![1.2, -0.2]).is_err());
    }
}
