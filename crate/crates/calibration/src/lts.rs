//! Learned per-pixel temperature scaling.
//!
//! A two-layer perceptron maps per-pixel inputs (logits, auxiliary image
//! channels or both) to a temperature `t(x) = softplus(a(x)) + t_floor`,
//! where `a(x) = w2 · tanh(W1 x̂ + b1) + b2` and `x̂` is the input
//! standardised with statistics frozen at fit time. It is trained by
//! mini-batch gradient descent on the mean NLL of `softmax(z / t(x))` with
//! hand-derived gradients:
//!
//! ```text
//! ∂L/∂t = (z_y − Σ_k p_k z_k) / t²      p = softmax(z / t)
//! ∂t/∂a = sigmoid(a)
//! ```

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use relikit_core::records::select_pixels;
use relikit_core::rng;
use relikit_core::softmax::{softmax_into, softmax_with};
use relikit_core::{Error, ImageTensor, LabeledImage, LogitTensor, ProbTensor, Result, Subsample};

use crate::temperature::TemperatureMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    LogitsOnly,
    ImageOnly,
    #[default]
    Both,
}

impl FeatureMode {
    pub fn needs_image(self) -> bool {
        !matches!(self, FeatureMode::LogitsOnly)
    }

    fn input_dim(self, classes: usize, channels: usize) -> usize {
        match self {
            FeatureMode::LogitsOnly => classes,
            FeatureMode::ImageOnly => channels,
            FeatureMode::Both => classes + channels,
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "logits_only" | "logits" => Ok(FeatureMode::LogitsOnly),
            "image_only" | "image" => Ok(FeatureMode::ImageOnly),
            "both" => Ok(FeatureMode::Both),
            other => Err(format!("unknown feature mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LtsConfig {
    pub feature_mode: FeatureMode,
    pub hidden_width: usize,
    pub t_floor: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_pixels: usize,
    pub seed: u64,
    pub pixels_per_image: usize,
    /// Loss weight per domain tag; unlisted domains weigh 1.
    pub domain_weights: BTreeMap<String, f64>,
}

impl Default for LtsConfig {
    fn default() -> Self {
        Self {
            feature_mode: FeatureMode::Both,
            hidden_width: 16,
            t_floor: 0.05,
            learning_rate: 0.05,
            epochs: 50,
            batch_pixels: 256,
            seed: 0,
            pixels_per_image: relikit_core::records::DEFAULT_PIXELS_PER_IMAGE,
            domain_weights: BTreeMap::new(),
        }
    }
}

/// Training pixels: raw inputs, logits, true class and loss weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LtsSamples {
    pub classes: usize,
    pub input_dim: usize,
    pub inputs: Vec<f64>,
    pub logits: Vec<f32>,
    pub labels: Vec<u16>,
    pub weights: Vec<f64>,
}

impl LtsSamples {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn logit(&self, i: usize) -> &[f32] {
        &self.logits[i * self.classes..(i + 1) * self.classes]
    }

    pub fn from_images(
        images: &[LabeledImage],
        mode: FeatureMode,
        ignore: u16,
        subsample: Option<&Subsample>,
        domain_weights: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        let first = images
            .first()
            .ok_or_else(|| Error::Empty("no calibration images".into()))?;
        let classes = first.logits.classes();
        let channels = match (mode.needs_image(), &first.image) {
            (false, _) => 0,
            (true, Some(img)) => img.channels(),
            (true, None) => {
                return Err(Error::Manifest(format!(
                    "feature mode {mode:?} needs image channels, `{}` has none",
                    first.image_id
                )))
            }
        };
        let input_dim = mode.input_dim(classes, channels);
        let mut out = LtsSamples {
            classes,
            input_dim,
            inputs: Vec::new(),
            logits: Vec::new(),
            labels: Vec::new(),
            weights: Vec::new(),
        };
        for img in images {
            if img.logits.classes() != classes {
                return Err(Error::ShapeMismatch(
                    "calibration images differ in class count".into(),
                ));
            }
            let image = check_image(mode, &img.logits, img.image.as_ref(), channels)?;
            let weight = domain_weights.get(&img.domain_tag).copied().unwrap_or(1.0);
            img.labels.check_classes(classes, ignore)?;
            for i in select_pixels(&img.labels, ignore, subsample, &img.image_id) {
                push_features(
                    mode,
                    img.logits.pixel(i),
                    image.map(|im| im.pixel(i)),
                    &mut out.inputs,
                );
                out.logits.extend_from_slice(img.logits.pixel(i));
                out.labels.push(img.labels.data()[i]);
                out.weights.push(weight);
            }
        }
        if out.is_empty() {
            return Err(Error::Empty("no labeled calibration pixels".into()));
        }
        Ok(out)
    }
}

fn check_image<'a>(
    mode: FeatureMode,
    logits: &LogitTensor,
    image: Option<&'a ImageTensor>,
    channels: usize,
) -> Result<Option<&'a ImageTensor>> {
    if !mode.needs_image() {
        return Ok(None);
    }
    let image = image
        .ok_or_else(|| Error::Manifest(format!("feature mode {mode:?} needs image channels")))?;
    if (image.height(), image.width()) != (logits.height(), logits.width())
        || image.channels() != channels
    {
        return Err(Error::ShapeMismatch(format!(
            "image tensor {}x{}x{} does not fit logits {}x{} with {channels} channels",
            image.height(),
            image.width(),
            image.channels(),
            logits.height(),
            logits.width()
        )));
    }
    Ok(Some(image))
}

fn push_features(mode: FeatureMode, logits: &[f32], image: Option<&[f32]>, out: &mut Vec<f64>) {
    if !matches!(mode, FeatureMode::ImageOnly) {
        out.extend(logits.iter().map(|&v| f64::from(v)));
    }
    if let Some(px) = image {
        out.extend(px.iter().map(|&v| f64::from(v)));
    }
}

fn softplus(a: f64) -> f64 {
    a.max(0.0) + (-a.abs()).exp().ln_1p()
}

fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Inverse of softplus for positive `y`.
fn softplus_inverse(y: f64) -> f64 {
    y + (-(-y).exp_m1()).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureRegressor {
    pub feature_mode: FeatureMode,
    pub classes: usize,
    pub input_dim: usize,
    pub hidden_width: usize,
    pub t_floor: f64,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    /// `hidden_width × input_dim`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

struct Activations {
    x: Vec<f64>,
    h: Vec<f64>,
    a: f64,
}

impl TemperatureRegressor {
    /// All-zero weights with identity standardisation: predicts
    /// `softplus(b2) + t_floor` everywhere.
    pub fn zeros(
        feature_mode: FeatureMode,
        classes: usize,
        input_dim: usize,
        hidden_width: usize,
        t_floor: f64,
    ) -> Self {
        Self {
            feature_mode,
            classes,
            input_dim,
            hidden_width,
            t_floor,
            input_mean: vec![0.0; input_dim],
            input_scale: vec![1.0; input_dim],
            w1: vec![0.0; hidden_width * input_dim],
            b1: vec![0.0; hidden_width],
            w2: vec![0.0; hidden_width],
            b2: 0.0,
        }
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Flattened parameters in the order `w1, b1, w2, b2`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.num_params());
        let (w1, rest) = p.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.b1.len());
        let (w2, rest) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2 = rest[0];
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.input_mean.len() == self.input_dim
            && self.input_scale.len() == self.input_dim
            && self.w1.len() == self.hidden_width * self.input_dim
            && self.b1.len() == self.hidden_width
            && self.w2.len() == self.hidden_width
            && self.classes >= 2;
        if !ok {
            return Err(Error::ShapeMismatch(
                "temperature regressor dimensions are inconsistent".into(),
            ));
        }
        if !(self.t_floor.is_finite() && self.t_floor > 0.0) {
            return Err(Error::InvalidArgument(
                "t_floor must be strictly positive".into(),
            ));
        }
        if self.params().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite regressor weight".into()));
        }
        Ok(())
    }

    fn activations(&self, raw: &[f64]) -> Activations {
        let x: Vec<f64> = raw
            .iter()
            .zip(&self.input_mean)
            .zip(&self.input_scale)
            .map(|((v, m), s)| (v - m) * s)
            .collect();
        let h: Vec<f64> = (0..self.hidden_width)
            .map(|j| {
                let row = &self.w1[j * self.input_dim..(j + 1) * self.input_dim];
                (row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + self.b1[j]).tanh()
            })
            .collect();
        let a = self.w2.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + self.b2;
        Activations { x, h, a }
    }

    /// Temperature for one raw input vector.
    pub fn temperature(&self, raw: &[f64]) -> f64 {
        softplus(self.activations(raw).a) + self.t_floor
    }

    /// Weighted mean NLL of `samples[indices]` and its gradient with respect
    /// to [`params`](Self::params).
    pub fn loss_and_gradient(&self, samples: &LtsSamples, indices: &[usize]) -> (f64, Vec<f64>) {
        let (nw1, nb1, nw2) = (self.w1.len(), self.b1.len(), self.w2.len());
        let mut grad = vec![0.0; self.num_params()];
        let mut loss = 0.0;
        let mut total_weight = 0.0;
        let mut probs = vec![0.0; samples.classes];
        for &i in indices {
            let weight = samples.weights[i];
            if weight == 0.0 {
                continue;
            }
            total_weight += weight;
            let act = self.activations(samples.input(i));
            let t = softplus(act.a) + self.t_floor;
            let z = samples.logit(i);
            let y = usize::from(samples.labels[i]);
            softmax_into(z, 1.0 / t, &mut probs);
            let expected_z: f64 = probs.iter().zip(z).map(|(p, &v)| p * f64::from(v)).sum();
            loss += weight * -(probs[y].max(f64::MIN_POSITIVE)).ln();
            let dl_dt = (f64::from(z[y]) - expected_z) / (t * t);
            let g = weight * dl_dt * sigmoid(act.a);

            grad[nw1 + nb1 + nw2] += g;
            for j in 0..self.hidden_width {
                grad[nw1 + nb1 + j] += g * act.h[j];
                let pre = g * self.w2[j] * (1.0 - act.h[j] * act.h[j]);
                grad[nw1 + j] += pre;
                let row = &mut grad[j * self.input_dim..(j + 1) * self.input_dim];
                for (gw, xv) in row.iter_mut().zip(&act.x) {
                    *gw += pre * xv;
                }
            }
        }
        if total_weight > 0.0 {
            loss /= total_weight;
            grad.iter_mut().for_each(|g| *g /= total_weight);
        }
        (loss, grad)
    }

    /// Weighted mean NLL without gradients.
    pub fn loss(&self, samples: &LtsSamples, indices: &[usize]) -> f64 {
        let mut probs = vec![0.0; samples.classes];
        let (mut loss, mut total) = (0.0, 0.0);
        for &i in indices {
            let w = samples.weights[i];
            let t = self.temperature(samples.input(i));
            softmax_into(samples.logit(i), 1.0 / t, &mut probs);
            loss += w * -(probs[usize::from(samples.labels[i])].max(f64::MIN_POSITIVE)).ln();
            total += w;
        }
        if total > 0.0 {
            loss / total
        } else {
            0.0
        }
    }

    /// Per-pixel temperatures for an image.
    pub fn predict_temperature_map(
        &self,
        logits: &LogitTensor,
        image: Option<&ImageTensor>,
    ) -> Result<TemperatureMap> {
        if logits.classes() != self.classes {
            return Err(Error::ShapeMismatch(format!(
                "logits have {} classes, regressor {}",
                logits.classes(),
                self.classes
            )));
        }
        let channels = self.input_dim
            - if matches!(self.feature_mode, FeatureMode::ImageOnly) {
                0
            } else {
                self.classes
            };
        let image = check_image(self.feature_mode, logits, image, channels)?;
        let mut buf = Vec::with_capacity(self.input_dim);
        let values = (0..logits.num_pixels())
            .map(|i| {
                buf.clear();
                push_features(
                    self.feature_mode,
                    logits.pixel(i),
                    image.map(|im| im.pixel(i)),
                    &mut buf,
                );
                self.temperature(&buf)
            })
            .collect();
        TemperatureMap::new(logits.height(), logits.width(), values)
    }

    pub fn apply(&self, logits: &LogitTensor, image: Option<&ImageTensor>) -> Result<ProbTensor> {
        let map = self.predict_temperature_map(logits, image)?;
        Ok(softmax_with(logits, |i| map.values()[i]))
    }
}

pub fn predict_temperature_map(
    regressor: &TemperatureRegressor,
    logits: &LogitTensor,
    image: Option<&ImageTensor>,
) -> Result<TemperatureMap> {
    regressor.predict_temperature_map(logits, image)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtsFit {
    pub regressor: TemperatureRegressor,
    /// Mean training loss per epoch (before the first update at index 0).
    pub loss_curve: Vec<f64>,
}

fn standardisation(samples: &LtsSamples) -> (Vec<f64>, Vec<f64>) {
    let d = samples.input_dim;
    let n = samples.len() as f64;
    let mut mean = vec![0.0; d];
    for i in 0..samples.len() {
        for (m, v) in mean.iter_mut().zip(samples.input(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for i in 0..samples.len() {
        for ((s, v), m) in var.iter_mut().zip(samples.input(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 1e-12 {
                1.0 / sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

/// Trains a regressor on prepared samples.
pub fn fit_lts_samples(samples: &LtsSamples, config: &LtsConfig) -> Result<LtsFit> {
    if samples.is_empty() {
        return Err(Error::Empty("no calibration pixels".into()));
    }
    if config.hidden_width == 0 || config.batch_pixels == 0 {
        return Err(Error::InvalidArgument(
            "hidden_width and batch_pixels must be positive".into(),
        ));
    }
    if !(config.t_floor > 0.0 && config.t_floor < 1.0) {
        return Err(Error::InvalidArgument("t_floor must lie in (0, 1)".into()));
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(Error::InvalidArgument(
            "learning_rate must be positive".into(),
        ));
    }
    let mut reg = TemperatureRegressor::zeros(
        config.feature_mode,
        samples.classes,
        samples.input_dim,
        config.hidden_width,
        config.t_floor,
    );
    let (mean, scale) = standardisation(samples);
    reg.input_mean = mean;
    reg.input_scale = scale;

    let mut init_rng = rng::stream(config.seed, "lts/init");
    let w1_dist = Normal::new(0.0, 1.0 / (samples.input_dim as f64).sqrt()).unwrap();
    reg.w1
        .iter_mut()
        .for_each(|w| *w = w1_dist.sample(&mut init_rng));
    let w2_dist = Normal::new(0.0, 0.1 / (config.hidden_width as f64).sqrt()).unwrap();
    reg.w2
        .iter_mut()
        .for_each(|w| *w = w2_dist.sample(&mut init_rng));
    // start at t = 1
    reg.b2 = softplus_inverse(1.0 - config.t_floor);

    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut shuffle_rng = rng::stream(config.seed, "lts/shuffle");
    let mut loss_curve = vec![reg.loss(samples, &order)];
    let mut params = reg.params();
    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut epoch_loss, mut batches) = (0.0, 0usize);
        for batch in order.chunks(config.batch_pixels) {
            let (loss, grad) = reg.loss_and_gradient(samples, batch);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numerical("LTS training diverged".into()));
            }
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
            reg.set_params(&params);
            epoch_loss += loss;
            batches += 1;
        }
        loss_curve.push(epoch_loss / batches as f64);
    }
    Ok(LtsFit {
        regressor: reg,
        loss_curve,
    })
}

/// Fits a regressor on the labeled pixels of `images`.
pub fn fit_lts(images: &[LabeledImage], ignore: u16, config: &LtsConfig) -> Result<LtsFit> {
    let subsample = Subsample::new(config.pixels_per_image, config.seed)?;
    let samples = LtsSamples::from_images(
        images,
        config.feature_mode,
        ignore,
        Some(&subsample),
        &config.domain_weights,
    )?;
    fit_lts_samples(&samples, config)
}
