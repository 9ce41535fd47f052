//! Serializable evaluation report.
//!
//! Units: `miou`, `ece`, `ada_ece`, `ks_error`, `prr` and per-class IoU are
//! percentages; AUROC values are fractions in `[0, 1]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use relikit_core::Result;

use crate::binning::BinStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainMetrics {
    pub images: usize,
    pub records: usize,
    /// Metrics are `None` when not requested; `prr` is also `None` when the
    /// domain has no errors or no correct pixels.
    pub miou: Option<f64>,
    pub ece: Option<f64>,
    pub ada_ece: Option<f64>,
    pub ks_error: Option<f64>,
    pub prr: Option<f64>,
    pub per_class_iou: Vec<Option<f64>>,
    /// Equal-width reliability table behind `ece`.
    pub reliability: Vec<BinStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodPair {
    pub in_domain: String,
    pub out_of_domain: String,
    pub auroc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    /// Free-form run description (score, bins, seed, calibrator...).
    pub settings: BTreeMap<String, String>,
    pub domains: BTreeMap<String, DomainMetrics>,
    pub ood_auroc: Vec<OodPair>,
    /// Pixel-level OOD AUROC per domain that carries OOD masks.
    pub pixel_ood_auroc: BTreeMap<String, f64>,
}

impl ReliabilityReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One `domain,metric,value` row per scalar; missing values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("domain,metric,value\n");
        let mut row = |domain: &str, metric: &str, value: Option<String>| {
            let _ = writeln!(out, "{domain},{metric},{}", value.unwrap_or_default());
        };
        let float = |v: Option<f64>| v.map(|v| format!("{v:?}"));
        for (name, d) in &self.domains {
            row(name, "images", Some(d.images.to_string()));
            row(name, "records", Some(d.records.to_string()));
            row(name, "miou", float(d.miou));
            row(name, "ece", float(d.ece));
            row(name, "ada_ece", float(d.ada_ece));
            row(name, "ks_error", float(d.ks_error));
            row(name, "prr", float(d.prr));
            for (c, iou) in d.per_class_iou.iter().enumerate() {
                row(name, &format!("iou_class_{c}"), float(*iou));
            }
        }
        for pair in &self.ood_auroc {
            row(
                &format!("{}->{}", pair.in_domain, pair.out_of_domain),
                "ood_auroc",
                float(Some(pair.auroc)),
            );
        }
        for (name, v) in &self.pixel_ood_auroc {
            row(name, "pixel_ood_auroc", float(Some(*v)));
        }
        out
    }

    /// Per-bin reliability tables as plot-ready CSV.
    pub fn reliability_csv(&self) -> String {
        let mut out =
            String::from("domain,bin,lower_edge,upper_edge,count,mean_confidence,accuracy\n");
        for (name, d) in &self.domains {
            for (i, b) in d.reliability.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{name},{i},{:?},{:?},{},{:?},{:?}",
                    b.lower_edge, b.upper_edge, b.count, b.mean_confidence, b.accuracy
                );
            }
        }
        out
    }
}
