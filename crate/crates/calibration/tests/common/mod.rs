#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use relikit_core::{ImageFeature, ImageTensor, LabelMap, LabeledImage, LogitTensor, Split};

/// Pixels whose logits are `tau * ln p` with labels drawn from `p`, so the
/// NLL-optimal temperature is `tau`.
pub struct Scene {
    pub logits: Vec<f32>,
    pub labels: Vec<u16>,
}

pub fn scene(rng: &mut ChaCha8Rng, pixels: usize, classes: usize, tau: f64) -> Scene {
    let gamma = Gamma::<f64>::new(0.4, 1.0).unwrap();
    let mut logits = Vec::with_capacity(pixels * classes);
    let mut labels = Vec::with_capacity(pixels);
    for _ in 0..pixels {
        let mut p: Vec<f64> = (0..classes).map(|_| gamma.sample(rng).max(1e-6)).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut label = classes - 1;
        for (k, &pk) in p.iter().enumerate() {
            acc += pk;
            if u < acc {
                label = k;
                break;
            }
        }
        labels.push(label as u16);
        logits.extend(p.iter().map(|v| (tau * v.ln()) as f32));
    }
    Scene { logits, labels }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A square calibration image at temperature `tau` with an optional
/// feature vector and constant image channels.
pub fn image(
    rng: &mut ChaCha8Rng,
    id: &str,
    side: usize,
    classes: usize,
    tau: f64,
    feature: Option<Vec<f32>>,
    channels: Option<Vec<f32>>,
) -> LabeledImage {
    let s = scene(rng, side * side, classes, tau);
    let image = channels.map(|c| {
        let data = (0..side * side).flat_map(|_| c.iter().copied()).collect();
        ImageTensor::new(side, side, c.len(), data).unwrap()
    });
    LabeledImage {
        image_id: id.to_owned(),
        domain_tag: format!("tau{tau}"),
        split: Split::Calibration,
        logits: LogitTensor::new(side, side, classes, s.logits).unwrap(),
        labels: LabelMap::new(side, side, s.labels).unwrap(),
        feature: feature.map(|v| ImageFeature::new(id, v).unwrap()),
        image,
        ood_mask: None,
    }
}
