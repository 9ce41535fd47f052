//! Synthetic scenes with known per-pixel class distributions.
//!
//! The true distribution `p(x)` is a box-filtered Dirichlet field, the label
//! is drawn from it and the logits are `τ(x) · ln p(x)` plus Gaussian noise,
//! where `ln τ(x)` is the domain temperature plus an optional smooth spatial
//! perturbation. Channel 0 of the auxiliary image carries a noisy copy of
//! `τ(x)`; channels `1..=K` carry noisy copies of `p(x)`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use relikit_core::rng::{stream, StreamRng};
use relikit_core::{Error, ImageFeature, ImageTensor, LabelMap, LogitTensor, Result};

use crate::config::{DomainSpec, SynthConfig};

/// Smallest class probability after smoothing.
pub const MIN_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub logits: LogitTensor,
    pub labels: LabelMap,
    pub image: ImageTensor,
    pub feature: ImageFeature,
    /// Set when the domain holds out classes; `true` on their pixels.
    pub ood_mask: Option<Vec<bool>>,
    /// Generating class probabilities, `H × W × K`.
    pub probabilities: Vec<f64>,
    /// Generating temperature per pixel.
    pub temperatures: Vec<f64>,
}

/// Windowed sums over a `(2r+1)²` box clipped at the borders, plus the
/// number of cells in each window.
fn box_sums(field: &[f64], height: usize, width: usize, r: usize) -> (Vec<f64>, Vec<usize>) {
    let stride = width + 1;
    let mut table = vec![0.0; (height + 1) * stride];
    for y in 0..height {
        let mut row = 0.0;
        for x in 0..width {
            row += field[y * width + x];
            table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row;
        }
    }
    let mut sums = Vec::with_capacity(height * width);
    let mut counts = Vec::with_capacity(height * width);
    for y in 0..height {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(height));
        for x in 0..width {
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(width));
            let s = table[y1 * stride + x1] - table[y0 * stride + x1] - table[y1 * stride + x0]
                + table[y0 * stride + x0];
            sums.push(s);
            counts.push((y1 - y0) * (x1 - x0));
        }
    }
    (sums, counts)
}

fn rng_for(config: &SynthConfig, image_id: &str, part: &str) -> StreamRng {
    stream(config.seed, &format!("synth/{image_id}/{part}"))
}

fn probability_field(config: &SynthConfig, image_id: &str) -> Vec<f64> {
    let (h, w, k) = (config.height, config.width, config.classes);
    let n = h * w;
    let gamma = Gamma::new(config.concentration, 1.0).expect("validated concentration");
    let mut rng = rng_for(config, image_id, "field");
    let mut p = vec![0.0; n * k];
    for class in 0..k {
        let raw: Vec<f64> = (0..n).map(|_| gamma.sample(&mut rng)).collect();
        let (sums, _) = box_sums(&raw, h, w, config.smoothing_radius);
        for (i, s) in sums.into_iter().enumerate() {
            p[i * k + class] = s.max(0.0);
        }
    }
    for px in p.chunks_exact_mut(k) {
        let total: f64 = px.iter().sum();
        if total > 0.0 && total.is_finite() {
            px.iter_mut().for_each(|v| *v /= total);
        } else {
            px.fill(1.0 / k as f64);
        }
        px.iter_mut().for_each(|v| *v = v.max(MIN_PROBABILITY));
        let total: f64 = px.iter().sum();
        px.iter_mut().for_each(|v| *v /= total);
    }
    p
}

fn temperature_field(config: &SynthConfig, domain: &DomainSpec, image_id: &str) -> Vec<f64> {
    let n = config.height * config.width;
    let base = domain.true_temperature.ln();
    if domain.temperature_jitter == 0.0 {
        return vec![domain.true_temperature; n];
    }
    let mut rng = rng_for(config, image_id, "temperature");
    let white: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let (sums, counts) = box_sums(&white, config.height, config.width, config.smoothing_radius);
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| (base + domain.temperature_jitter * s / (c as f64).sqrt()).exp())
        .collect()
}

fn sample_label(p: &[f64], u: f64) -> u16 {
    let mut acc = 0.0;
    for (k, &pk) in p.iter().enumerate() {
        acc += pk;
        if u < acc {
            return k as u16;
        }
    }
    (p.len() - 1) as u16
}

/// Generates one image of domain `tag`. All randomness derives from the
/// config seed and `image_id`.
pub fn generate_scene(config: &SynthConfig, tag: &str, image_id: &str) -> Result<Scene> {
    config.validate()?;
    let domain = config.domain(tag)?;
    let (h, w, k) = (config.height, config.width, config.classes);
    let n = h * w;

    let probabilities = probability_field(config, image_id);
    let temperatures = temperature_field(config, domain, image_id);

    let mut label_rng = rng_for(config, image_id, "labels");
    let labels: Vec<u16> = probabilities
        .chunks_exact(k)
        .map(|p| sample_label(p, label_rng.gen()))
        .collect();

    let held_out = |label: u16| domain.held_out_classes.contains(&label);
    let mut noise_rng = rng_for(config, image_id, "logit_noise");
    let mut logits = Vec::with_capacity(n * k);
    for i in 0..n {
        let scale = if held_out(labels[i]) {
            config.held_out_logit_scale
        } else {
            1.0
        };
        for &pk in &probabilities[i * k..(i + 1) * k] {
            let mut z = temperatures[i] * pk.ln();
            if domain.logit_noise > 0.0 {
                z += domain.logit_noise * noise_rng.sample::<f64, _>(StandardNormal);
            }
            logits.push((scale * z) as f32);
        }
    }

    let mut image_rng = rng_for(config, image_id, "image");
    let channels = config.image_channels();
    let mut image = Vec::with_capacity(n * channels);
    for i in 0..n {
        let signal = std::iter::once(temperatures[i])
            .chain(probabilities[i * k..(i + 1) * k].iter().copied());
        for v in signal {
            let noise = if config.image_noise > 0.0 {
                config.image_noise * image_rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            image.push((v + noise) as f32);
        }
    }

    let mut feature_rng = rng_for(config, image_id, "feature");
    let feature: Vec<f32> = domain
        .feature_offset
        .iter()
        .map(|&o| {
            (f64::from(o) + config.feature_jitter * feature_rng.sample::<f64, _>(StandardNormal))
                as f32
        })
        .collect();

    let ood_mask = (!domain.held_out_classes.is_empty())
        .then(|| labels.iter().map(|&l| held_out(l)).collect());

    let logits = LogitTensor::new(h, w, k, logits).map_err(|e| {
        Error::Numerical(format!(
            "generated logits for `{image_id}` are invalid: {e}"
        ))
    })?;
    Ok(Scene {
        logits,
        labels: LabelMap::new(h, w, labels)?,
        image: ImageTensor::new(h, w, channels, image)?,
        feature: ImageFeature::new(image_id, feature)?,
        ood_mask,
        probabilities,
        temperatures,
    })
}
