//! Run configuration shared by `fit` and `eval`.
//!
//! ```json
//! {
//!   "manifest": "bench/manifest.json",
//!   "metrics": ["miou", "ece", "ada_ece", "ks", "prr", "ood_auroc", "pixel_ood_auroc"],
//!   "bins": 15,
//!   "confidence": "max_prob",
//!   "subsample": {"pixels": 20000, "seed": 0},
//!   "calibration": {"method": "ts", "artifact": "ts.json", "clusters": 16, "seed": 0},
//!   "ood": {"in_domain": "id"},
//!   "output": {"format": "json", "path": "report.json"}
//! }
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use relikit_calibration::{FeatureMode, LtsConfig};
use relikit_core::records::DEFAULT_PIXELS_PER_IMAGE;
use relikit_core::ConfidenceScore;
use relikit_metrics::DEFAULT_BINS;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Miou,
    Ece,
    AdaEce,
    Ks,
    Prr,
    OodAuroc,
    PixelOodAuroc,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Miou,
        Metric::Ece,
        Metric::AdaEce,
        Metric::Ks,
        Metric::Prr,
        Metric::OodAuroc,
        Metric::PixelOodAuroc,
    ];
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| {
            format!("unknown metric `{s}` (expected miou, ece, ada_ece, ks, prr, ood_auroc or pixel_ood_auroc)")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ts,
    ClusterTs,
    ClassClusterTs,
    Lts,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ts" => Ok(Method::Ts),
            "cluster_ts" => Ok(Method::ClusterTs),
            "class_cluster_ts" => Ok(Method::ClassClusterTs),
            "lts" => Ok(Method::Lts),
            other => Err(format!(
                "unknown calibration method `{other}` (expected ts, cluster_ts, class_cluster_ts or lts)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!(
                "unknown output format `{other}` (expected json or csv)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsampleConfig {
    pub pixels: usize,
    pub seed: u64,
}

impl Default for SubsampleConfig {
    fn default() -> Self {
        Self {
            pixels: DEFAULT_PIXELS_PER_IMAGE,
            seed: 0,
        }
    }
}

/// LTS hyperparameters; seed and subsampling come from the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LtsHyper {
    pub feature_mode: FeatureMode,
    pub hidden_width: usize,
    pub t_floor: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_pixels: usize,
    pub domain_weights: BTreeMap<String, f64>,
}

impl Default for LtsHyper {
    fn default() -> Self {
        let d = LtsConfig::default();
        Self {
            feature_mode: d.feature_mode,
            hidden_width: d.hidden_width,
            t_floor: d.t_floor,
            learning_rate: d.learning_rate,
            epochs: d.epochs,
            batch_pixels: d.batch_pixels,
            domain_weights: d.domain_weights,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub method: Option<Method>,
    /// Where `fit` writes the calibrator and `eval` reads it from.
    pub artifact: Option<PathBuf>,
    pub clusters: usize,
    pub seed: u64,
    /// Calibration-split domains to fit on; empty means all.
    pub domains: Vec<String>,
    pub lts: LtsHyper,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            method: None,
            artifact: None,
            clusters: relikit_calibration::cluster::DEFAULT_CLUSTERS,
            seed: 0,
            domains: Vec::new(),
            lts: LtsHyper::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OodConfig {
    /// Domain treated as in-distribution for image-level OOD AUROC.
    pub in_domain: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: OutputFormat,
    /// Report destination; standard output when absent.
    pub path: Option<PathBuf>,
    /// Optional per-bin reliability table (CSV).
    pub reliability: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub metrics: Vec<Metric>,
    pub bins: usize,
    pub confidence: ConfidenceScore,
    pub subsample: SubsampleConfig,
    pub calibration: CalibrationConfig,
    pub ood: OodConfig,
    pub output: OutputConfig,
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            metrics: Metric::ALL.to_vec(),
            bins: DEFAULT_BINS,
            confidence: ConfidenceScore::MaxProb,
            subsample: SubsampleConfig::default(),
            calibration: CalibrationConfig::default(),
            ood: OodConfig::default(),
            output: OutputConfig::default(),
            workers: None,
        }
    }
}

fn rebase(base: &Path, path: &mut Option<PathBuf>) {
    if let Some(p) = path {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
}

impl RunConfig {
    /// Reads a config file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        rebase(base, &mut config.manifest);
        rebase(base, &mut config.calibration.artifact);
        rebase(base, &mut config.output.path);
        rebase(base, &mut config.output.reliability);
        Ok(config)
    }

    pub fn check(&self) -> CliResult<()> {
        if self.bins == 0 {
            return Err(CliError::usage("bins must be positive"));
        }
        if self.subsample.pixels == 0 {
            return Err(CliError::usage("subsample.pixels must be positive"));
        }
        if self.calibration.clusters == 0 {
            return Err(CliError::usage("calibration.clusters must be positive"));
        }
        if self.workers == Some(0) {
            return Err(CliError::usage("workers must be positive"));
        }
        Ok(())
    }

    pub fn wants(&self, metric: Metric) -> bool {
        self.metrics.contains(&metric)
    }

    pub fn manifest_path(&self) -> CliResult<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| CliError::usage("no manifest given (set `manifest` or pass --manifest)"))
    }

    pub fn lts_config(&self) -> LtsConfig {
        let h = &self.calibration.lts;
        LtsConfig {
            feature_mode: h.feature_mode,
            hidden_width: h.hidden_width,
            t_floor: h.t_floor,
            learning_rate: h.learning_rate,
            epochs: h.epochs,
            batch_pixels: h.batch_pixels,
            seed: self.calibration.seed,
            pixels_per_image: self.subsample.pixels,
            domain_weights: h.domain_weights.clone(),
        }
    }
}
