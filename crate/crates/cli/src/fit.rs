use std::fmt::Write as _;

use relikit_calibration::{
    fit_cluster_ts, fit_global_ts, fit_lts, CalibrationPixels, Calibrator, ClusterTsConfig,
    ClusterVariant,
};
use relikit_core::{DatasetManifest, LabeledImage, Split, Subsample};

use crate::config::{Method, RunConfig};
use crate::error::{CliError, CliResult};

/// Calibration-split images restricted to the configured domains.
pub fn calibration_images(
    manifest: &DatasetManifest,
    config: &RunConfig,
) -> CliResult<Vec<LabeledImage>> {
    let wanted = &config.calibration.domains;
    let known = manifest.domains();
    if let Some(missing) = wanted.iter().find(|d| !known.contains(d)) {
        return Err(CliError::usage(format!(
            "domain `{missing}` is not in the manifest"
        )));
    }
    let images: Vec<LabeledImage> = manifest
        .load_split(Split::Calibration)?
        .into_iter()
        .filter(|img| wanted.is_empty() || wanted.contains(&img.domain_tag))
        .collect();
    if images.is_empty() {
        return Err(CliError::Data("no calibration images selected".into()));
    }
    Ok(images)
}

/// Fits the configured method and returns it with a printable summary.
pub fn fit_calibrator(
    manifest: &DatasetManifest,
    config: &RunConfig,
) -> CliResult<(Calibrator, String)> {
    config.check()?;
    let method = config.calibration.method.ok_or_else(|| {
        CliError::usage("no calibration method given (ts, cluster_ts, class_cluster_ts or lts)")
    })?;
    let images = calibration_images(manifest, config)?;
    let subsample = Subsample::new(config.subsample.pixels, config.subsample.seed)?;
    let ignore = manifest.ignore_value;
    let mut summary = String::new();
    let calibrator = match method {
        Method::Ts => {
            let pixels = CalibrationPixels::from_images(&images, ignore, Some(&subsample))?;
            let fit = fit_global_ts(&pixels)?;
            let _ = writeln!(
                summary,
                "ts: T = {:.6} (NLL {:.6} -> {:.6} over {} pixels)",
                fit.temperature.value(),
                fit.nll_at_one,
                fit.nll,
                fit.pixels
            );
            Calibrator::Global(fit.temperature)
        }
        Method::ClusterTs | Method::ClassClusterTs => {
            let variant = if method == Method::ClusterTs {
                ClusterVariant::PerImage
            } else {
                ClusterVariant::PerClass
            };
            let cfg = ClusterTsConfig {
                k: config.calibration.clusters,
                variant,
                seed: config.calibration.seed,
                ignore,
                subsample: Some(subsample),
            };
            let model = fit_cluster_ts(&images, &cfg)?;
            let _ = writeln!(
                summary,
                "{}: k = {}, global T = {:.6}",
                calibrator_name(method),
                model.k(),
                model.global_temperature
            );
            for (i, row) in model.temperatures.iter().enumerate() {
                let ts: Vec<String> = row.iter().map(|t| format!("{t:.6}")).collect();
                let _ = writeln!(summary, "  cluster {i}: {}", ts.join(" "));
            }
            Calibrator::Cluster(model)
        }
        Method::Lts => {
            let fit = fit_lts(&images, ignore, &config.lts_config())?;
            let _ = writeln!(summary, "lts: {} parameters", fit.regressor.num_params());
            for (epoch, loss) in fit.loss_curve.iter().enumerate() {
                let _ = writeln!(summary, "  epoch {epoch}: loss {loss:.6}");
            }
            Calibrator::Local(fit.regressor)
        }
    };
    Ok((calibrator, summary))
}

fn calibrator_name(method: Method) -> &'static str {
    match method {
        Method::Ts => "ts",
        Method::ClusterTs => "cluster_ts",
        Method::ClassClusterTs => "class_cluster_ts",
        Method::Lts => "lts",
    }
}
