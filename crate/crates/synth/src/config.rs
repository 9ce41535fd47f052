use std::path::Path;

use serde::{Deserialize, Serialize};

use relikit_core::{Error, Result};

/// One domain of a synthetic benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub tag: String,
    /// Generating temperature: logits are `τ · ln p`, so a global
    /// temperature of `τ` restores calibration when there is no noise.
    pub true_temperature: f64,
    /// Standard deviation of Gaussian noise added to every logit.
    #[serde(default)]
    pub logit_noise: f64,
    pub feature_offset: Vec<f32>,
    /// Standard deviation of a smooth spatial field added to `ln τ`.
    #[serde(default)]
    pub temperature_jitter: f64,
    /// Classes the model treats as unknown; their pixels are flagged in an
    /// OOD mask and their logits are flattened.
    #[serde(default)]
    pub held_out_classes: Vec<u16>,
}

impl DomainSpec {
    pub fn new(
        tag: impl Into<String>,
        true_temperature: f64,
        logit_noise: f64,
        feature_offset: Vec<f32>,
    ) -> Self {
        Self {
            tag: tag.into(),
            true_temperature,
            logit_noise,
            feature_offset,
            temperature_jitter: 0.0,
            held_out_classes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub classes: usize,
    pub height: usize,
    pub width: usize,
    /// Dirichlet concentration of the per-pixel class field.
    pub concentration: f64,
    pub smoothing_radius: usize,
    pub seed: u64,
    /// Standard deviation of per-image feature noise around the domain offset.
    pub feature_jitter: f64,
    /// Standard deviation of noise on the auxiliary image channels.
    pub image_noise: f64,
    /// Factor applied to the logits of held-out-class pixels.
    pub held_out_logit_scale: f64,
    pub calibration_images: usize,
    pub test_images: usize,
    pub domains: Vec<DomainSpec>,
}

/// Temperature and noise per unit of shift on the default ladder.
pub const LADDER_TEMPERATURE_SLOPE: f64 = 1.0;
pub const LADDER_NOISE_SLOPE: f64 = 0.5;

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            classes: 5,
            height: 64,
            width: 64,
            concentration: 0.01,
            smoothing_radius: 2,
            seed: 0,
            feature_jitter: 0.1,
            image_noise: 0.05,
            held_out_logit_scale: 0.5,
            calibration_images: 8,
            test_images: 8,
            domains: ladder(2.0),
        }
    }
}

/// The default `id`, `mild`, `strong` ladder. `shift` is the strength of the
/// strongest domain; `mild` sits halfway. A shift level `s` maps to
/// `τ = 1 + s · LADDER_TEMPERATURE_SLOPE` and `σ = s · LADDER_NOISE_SLOPE`.
pub fn ladder(shift: f64) -> Vec<DomainSpec> {
    [("id", 0.0), ("mild", 0.5 * shift), ("strong", shift)]
        .into_iter()
        .enumerate()
        .map(|(i, (tag, s))| {
            let mut offset = vec![0.0f32; 3];
            offset[i] = 5.0;
            DomainSpec::new(
                tag,
                1.0 + s * LADDER_TEMPERATURE_SLOPE,
                s * LADDER_NOISE_SLOPE,
                offset,
            )
        })
        .collect()
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.classes < 2 || self.classes > usize::from(u16::MAX) {
            return fail(format!(
                "classes must be in [2, 65535], got {}",
                self.classes
            ));
        }
        if self.height == 0 || self.width == 0 {
            return fail("height and width must be positive".into());
        }
        if !(self.concentration.is_finite() && self.concentration > 0.0) {
            return fail(format!(
                "concentration must be positive, got {}",
                self.concentration
            ));
        }
        for (name, v) in [
            ("feature_jitter", self.feature_jitter),
            ("image_noise", self.image_noise),
            ("held_out_logit_scale", self.held_out_logit_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return fail(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self.domains.is_empty() {
            return Err(Error::Empty("synthetic config has no domains".into()));
        }
        let dim = self.domains[0].feature_offset.len();
        if dim == 0 {
            return fail("feature_offset must not be empty".into());
        }
        let mut tags = std::collections::BTreeSet::new();
        for d in &self.domains {
            if !tags.insert(d.tag.as_str()) {
                return fail(format!("duplicate domain tag `{}`", d.tag));
            }
            if d.tag.is_empty() || d.tag.contains(['/', '\\']) {
                return fail(format!("invalid domain tag `{}`", d.tag));
            }
            if !(d.true_temperature.is_finite() && d.true_temperature > 0.0) {
                return fail(format!(
                    "domain `{}`: true_temperature must be positive",
                    d.tag
                ));
            }
            if !(d.logit_noise.is_finite() && d.logit_noise >= 0.0) {
                return fail(format!(
                    "domain `{}`: logit_noise must be non-negative",
                    d.tag
                ));
            }
            if !(d.temperature_jitter.is_finite() && d.temperature_jitter >= 0.0) {
                return fail(format!(
                    "domain `{}`: temperature_jitter must be non-negative",
                    d.tag
                ));
            }
            if d.feature_offset.len() != dim || d.feature_offset.iter().any(|v| !v.is_finite()) {
                return fail(format!(
                    "domain `{}`: feature_offset must have {dim} finite values",
                    d.tag
                ));
            }
            if let Some(c) = d
                .held_out_classes
                .iter()
                .find(|&&c| usize::from(c) >= self.classes)
            {
                return fail(format!(
                    "domain `{}`: held-out class {c} out of range",
                    d.tag
                ));
            }
        }
        Ok(())
    }

    pub fn domain(&self, tag: &str) -> Result<&DomainSpec> {
        self.domains
            .iter()
            .find(|d| d.tag == tag)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown domain `{tag}`")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    /// Number of auxiliary image channels: one shift signal plus one noisy
    /// probability per class.
    pub fn image_channels(&self) -> usize {
        1 + self.classes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ladder_is_valid_and_increasing() {
        let cfg = SynthConfig::default();
        cfg.validate().unwrap();
        let taus: Vec<f64> = cfg.domains.iter().map(|d| d.true_temperature).collect();
        assert_eq!(taus, vec![1.0, 2.0, 3.0]);
        assert_eq!(cfg.domains[0].logit_noise, 0.0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = SynthConfig::default();
        let mut c = base.clone();
        c.domains.clear();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.domains[1].true_temperature = 0.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.domains[2].feature_offset.push(1.0);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.domains[2].tag = "id".into();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.classes = 1;
        assert!(c.validate().is_err());
        let mut c = base;
        c.domains[0].held_out_classes = vec![5];
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_round_trip_with_defaults() {
        let cfg: SynthConfig = serde_json::from_str(
            r#"{"classes": 3, "domains": [{"tag": "a", "true_temperature": 2.0, "feature_offset": [1.0]}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.height, 64);
        assert_eq!(cfg.domains[0].logit_noise, 0.0);
        let back: SynthConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
