//! Per-domain evaluation of a manifest's test split.

use std::collections::BTreeMap;

use relikit_calibration::Calibrator;
use relikit_core::softmax::{confidence_map, softmax, ConfidenceMap};
use relikit_core::{
    extract_records, parallel, DatasetManifest, Error, ManifestEntry, PredictionRecordSet, Split,
    Subsample,
};
use relikit_metrics::{
    ece, image_mean_confidence, ks_error, ood_image_auroc, pixel_ood_auroc, prr, reliability_bins,
    BinStrategy, ConfusionMatrix, DomainMetrics, OodPair, ReliabilityReport,
};

use crate::config::{Metric, RunConfig};
use crate::error::{CliError, CliResult};

struct ImageResult {
    domain: String,
    records: PredictionRecordSet,
    confusion: ConfusionMatrix,
    mean_confidence: Option<f64>,
    ood: Option<(ConfidenceMap, Vec<bool>)>,
}

fn evaluate_image(
    manifest: &DatasetManifest,
    entry: &ManifestEntry,
    calibrator: Option<&Calibrator>,
    config: &RunConfig,
    subsample: &Subsample,
) -> relikit_core::Result<ImageResult> {
    let image = manifest.load_image(entry)?;
    let probs = match calibrator {
        Some(c) => c.apply(&image)?,
        None => softmax(&image.logits),
    };
    let map = confidence_map(&probs, config.confidence);
    let records = extract_records(
        &map,
        &image.labels,
        manifest.ignore_value,
        Some(subsample),
        &image.image_id,
    )?;
    let mut confusion = ConfusionMatrix::new(manifest.classes);
    confusion.accumulate(&map.predicted, &image.labels, manifest.ignore_value)?;
    let mean_confidence = image_mean_confidence(&map, None, manifest.ignore_value);
    let ood = match image.ood_mask {
        Some(mask) if config.wants(Metric::PixelOodAuroc) => Some((map, mask)),
        _ => None,
    };
    Ok(ImageResult {
        domain: image.domain_tag,
        records,
        confusion,
        mean_confidence,
        ood,
    })
}

fn percent(v: f64) -> f64 {
    100.0 * v
}

fn domain_metrics(
    results: &[&ImageResult],
    config: &RunConfig,
    classes: usize,
) -> relikit_core::Result<DomainMetrics> {
    let records = PredictionRecordSet::concat(
        config.confidence,
        classes,
        results.iter().map(|r| r.records.clone()),
    )?;
    let mut confusion = ConfusionMatrix::new(classes);
    for r in results {
        confusion.merge(&r.confusion);
    }
    let (miou, per_class_iou) = if config.wants(Metric::Miou) {
        let s = confusion.iou()?;
        (
            Some(percent(s.miou)),
            s.per_class_iou
                .into_iter()
                .map(|v| v.map(percent))
                .collect(),
        )
    } else {
        (None, Vec::new())
    };
    let (ece_value, reliability) = if config.wants(Metric::Ece) {
        let part = reliability_bins(&records, config.bins, BinStrategy::EqualWidth)?;
        (Some(percent(part.calibration_error())), part.bins)
    } else {
        (None, Vec::new())
    };
    let ada_ece = config
        .wants(Metric::AdaEce)
        .then(|| ece(&records, config.bins, BinStrategy::EqualPopulation).map(percent))
        .transpose()?;
    let ks = config
        .wants(Metric::Ks)
        .then(|| ks_error(&records).map(percent))
        .transpose()?;
    let prr_value = if config.wants(Metric::Prr) {
        match prr(&records) {
            Ok(v) => Some(v),
            Err(Error::Undefined(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(DomainMetrics {
        images: results.len(),
        records: records.len(),
        miou,
        ece: ece_value,
        ada_ece,
        ks_error: ks,
        prr: prr_value,
        per_class_iou,
        reliability,
    })
}

/// Evaluates the test split of `manifest`, optionally calibrating logits
/// first. Results depend only on the manifest, calibrator and config, not
/// on the number of worker threads.
pub fn evaluate(
    manifest: &DatasetManifest,
    calibrator: Option<&Calibrator>,
    config: &RunConfig,
) -> CliResult<ReliabilityReport> {
    config.check()?;
    let subsample = Subsample::new(config.subsample.pixels, config.subsample.seed)?;
    let mut entries: Vec<&ManifestEntry> = manifest.entries_in(Split::Test).collect();
    if entries.is_empty() {
        return Err(CliError::Data("manifest has no test images".into()));
    }
    entries.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    let results = parallel::try_map(&entries, |e| {
        evaluate_image(manifest, e, calibrator, config, &subsample)
    })?;

    let mut by_domain: BTreeMap<&str, Vec<&ImageResult>> = BTreeMap::new();
    for r in &results {
        by_domain.entry(r.domain.as_str()).or_default().push(r);
    }

    let mut domains = BTreeMap::new();
    for (tag, rs) in &by_domain {
        domains.insert(
            tag.to_string(),
            domain_metrics(rs, config, manifest.classes)?,
        );
    }

    let mut ood_auroc = Vec::new();
    if let (true, Some(id)) = (config.wants(Metric::OodAuroc), &config.ood.in_domain) {
        let scores = |rs: &[&ImageResult]| -> Vec<f64> {
            rs.iter().filter_map(|r| r.mean_confidence).collect()
        };
        let id_scores =
            scores(by_domain.get(id.as_str()).ok_or_else(|| {
                CliError::usage(format!("in-domain tag `{id}` has no test images"))
            })?);
        for (tag, rs) in &by_domain {
            if *tag != id {
                ood_auroc.push(OodPair {
                    in_domain: id.clone(),
                    out_of_domain: tag.to_string(),
                    auroc: ood_image_auroc(&id_scores, &scores(rs))?,
                });
            }
        }
    }

    let mut pixel_ood = BTreeMap::new();
    for (tag, rs) in &by_domain {
        let pairs: Vec<(&ConfidenceMap, &[bool])> = rs
            .iter()
            .filter_map(|r| r.ood.as_ref().map(|(m, mask)| (m, mask.as_slice())))
            .collect();
        if pairs.is_empty() {
            continue;
        }
        match pixel_ood_auroc(&pairs) {
            Ok(v) => {
                pixel_ood.insert(tag.to_string(), v);
            }
            Err(Error::Empty(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }

    Ok(ReliabilityReport {
        settings: settings(config, calibrator),
        domains,
        ood_auroc,
        pixel_ood_auroc: pixel_ood,
    })
}

fn settings(config: &RunConfig, calibrator: Option<&Calibrator>) -> BTreeMap<String, String> {
    let score = serde_json::to_value(config.confidence)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    let metrics: Vec<String> = config
        .metrics
        .iter()
        .filter_map(|m| {
            serde_json::to_value(m)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
        })
        .collect();
    BTreeMap::from([
        ("bins".to_string(), config.bins.to_string()),
        ("confidence".to_string(), score),
        (
            "pixels_per_image".to_string(),
            config.subsample.pixels.to_string(),
        ),
        ("seed".to_string(), config.subsample.seed.to_string()),
        ("metrics".to_string(), metrics.join(",")),
        (
            "calibrator".to_string(),
            calibrator.map_or("none", Calibrator::method).to_string(),
        ),
    ])
}
