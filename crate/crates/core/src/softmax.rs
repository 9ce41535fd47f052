//! Softmax normalisation and per-pixel confidence scores.

use serde::{Deserialize, Serialize};

use crate::tensor::{argmax, LogitTensor, ProbTensor};

/// Which per-pixel quantity is treated as the model's confidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceScore {
    /// Probability of the predicted class.
    #[default]
    MaxProb,
    /// `Σ_k p_k ln p_k`, in `[-ln K, 0]`.
    NegEntropy,
}

impl ConfidenceScore {
    /// Affine map of a score onto `[0, 1]` using its theoretical range for
    /// `classes` classes. Max-probability scores are returned unchanged.
    pub fn normalize(self, value: f64, classes: usize) -> f64 {
        match self {
            ConfidenceScore::MaxProb => value,
            ConfidenceScore::NegEntropy => {
                let ln_k = (classes as f64).ln();
                ((value + ln_k) / ln_k).clamp(0.0, 1.0)
            }
        }
    }
}

impl std::str::FromStr for ConfidenceScore {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max_prob" | "maxprob" => Ok(ConfidenceScore::MaxProb),
            "neg_entropy" | "negentropy" => Ok(ConfidenceScore::NegEntropy),
            other => Err(format!("unknown confidence score `{other}`")),
        }
    }
}

/// Writes `softmax(logits * inv_temperature)` into `out`, stabilised by
/// subtracting the maximum logit.
pub fn softmax_into(logits: &[f32], inv_temperature: f64, out: &mut [f64]) {
    debug_assert_eq!(logits.len(), out.len());
    let max = logits
        .iter()
        .fold(f64::NEG_INFINITY, |m, &z| m.max(f64::from(z)));
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = ((f64::from(z) - max) * inv_temperature).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// `ln Σ_k exp(z_k / t)` for one pixel, computed stably.
pub fn log_sum_exp(logits: &[f32], inv_temperature: f64) -> f64 {
    let max = logits
        .iter()
        .fold(f64::NEG_INFINITY, |m, &z| m.max(f64::from(z)));
    let sum: f64 = logits
        .iter()
        .map(|&z| ((f64::from(z) - max) * inv_temperature).exp())
        .sum();
    max * inv_temperature + sum.ln()
}

pub fn softmax(logits: &LogitTensor) -> ProbTensor {
    softmax_with(logits, |_| 1.0)
}

/// Softmax after dividing each pixel's logits by `temperature(pixel_index)`.
/// The caller guarantees temperatures are strictly positive.
pub fn softmax_with(logits: &LogitTensor, temperature: impl Fn(usize) -> f64) -> ProbTensor {
    let k = logits.classes();
    let mut data = vec![0.0; logits.num_pixels() * k];
    for (i, (px, out)) in logits.pixels().zip(data.chunks_exact_mut(k)).enumerate() {
        softmax_into(px, 1.0 / temperature(i), out);
    }
    ProbTensor::from_parts(logits.height(), logits.width(), k, data)
}

/// Confidence and predicted class for one probability vector.
pub fn pixel_confidence(probs: &[f64], score: ConfidenceScore) -> (f64, u16) {
    let predicted = argmax(probs);
    let confidence = match score {
        ConfidenceScore::MaxProb => probs[usize::from(predicted)],
        ConfidenceScore::NegEntropy => probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum(),
    };
    (confidence, predicted)
}

/// Per-pixel confidence and predicted class.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    pub height: usize,
    pub width: usize,
    pub classes: usize,
    pub score: ConfidenceScore,
    pub confidence: Vec<f64>,
    pub predicted: Vec<u16>,
}

pub fn confidence_map(probs: &ProbTensor, score: ConfidenceScore) -> ConfidenceMap {
    let (confidence, predicted) = probs.pixels().map(|px| pixel_confidence(px, score)).unzip();
    ConfidenceMap {
        height: probs.height(),
        width: probs.width(),
        classes: probs.classes(),
        score,
        confidence,
        predicted,
    }
}
