use std::path::{Path, PathBuf};

use relikit_core::format::{write_feature, write_image, write_labels, write_logits};
use relikit_core::{parallel, DatasetManifest, Error, LabelMap, ManifestEntry, Result, Split};

use crate::config::SynthConfig;
use crate::scene::generate_scene;

/// File name of the manifest written by [`generate_benchmark`].
pub const MANIFEST_FILE: &str = "manifest.json";

struct Job {
    tag: String,
    split: Split,
    image_id: String,
}

fn split_name(split: Split) -> &'static str {
    match split {
        Split::Calibration => "cal",
        Split::Test => "test",
    }
}

fn jobs(config: &SynthConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for d in &config.domains {
        for (split, count) in [
            (Split::Calibration, config.calibration_images),
            (Split::Test, config.test_images),
        ] {
            for i in 0..count {
                out.push(Job {
                    tag: d.tag.clone(),
                    split,
                    image_id: format!("{}_{}_{i:04}", d.tag, split_name(split)),
                });
            }
        }
    }
    out
}

fn write_job(config: &SynthConfig, out_dir: &Path, job: &Job) -> Result<ManifestEntry> {
    let scene = generate_scene(config, &job.tag, &job.image_id)?;
    let rel =
        |suffix: &str| PathBuf::from(&job.tag).join(format!("{}.{suffix}.tensor", job.image_id));
    let entry = ManifestEntry {
        image_id: job.image_id.clone(),
        logit_path: rel("logits"),
        label_path: rel("labels"),
        feature_path: Some(rel("feature")),
        image_path: Some(rel("image")),
        ood_mask_path: scene.ood_mask.as_ref().map(|_| rel("ood")),
        split: job.split,
        domain_tag: job.tag.clone(),
    };
    write_logits(out_dir.join(&entry.logit_path), &scene.logits)?;
    write_labels(
        out_dir.join(&entry.label_path),
        &scene.labels,
        config.classes,
    )?;
    write_feature(
        out_dir.join(entry.feature_path.as_ref().unwrap()),
        &scene.feature,
    )?;
    write_image(
        out_dir.join(entry.image_path.as_ref().unwrap()),
        &scene.image,
    )?;
    if let (Some(mask), Some(path)) = (&scene.ood_mask, &entry.ood_mask_path) {
        let data = mask.iter().map(|&m| u16::from(m)).collect();
        write_labels(
            out_dir.join(path),
            &LabelMap::new(config.height, config.width, data)?,
            2,
        )?;
    }
    Ok(entry)
}

/// Writes every domain's calibration and test images under `out_dir`
/// together with `manifest.json`, and returns the manifest.
pub fn generate_benchmark(config: &SynthConfig, out_dir: &Path) -> Result<DatasetManifest> {
    config.validate()?;
    if config.calibration_images + config.test_images == 0 {
        return Err(Error::InvalidArgument("no images requested".into()));
    }
    for d in &config.domains {
        let dir = out_dir.join(&d.tag);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let entries = parallel::try_map(&jobs(config), |job| write_job(config, out_dir, job))?;
    let mut manifest = DatasetManifest::new(config.classes, entries);
    manifest.save(out_dir.join(MANIFEST_FILE))?;
    manifest.base_dir = out_dir.to_path_buf();
    Ok(manifest)
}
