//! Declarative dataset listings: which images exist, where their tensors
//! live, which split and domain each belongs to.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{self, Dtype, Layout};
use crate::tensor::{ImageFeature, ImageTensor, LabelMap, LogitTensor, DEFAULT_IGNORE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Calibration,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub logit_path: PathBuf,
    pub label_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_path: Option<PathBuf>,
    /// Auxiliary per-pixel input channels (f32 HWC).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<PathBuf>,
    /// u16 HW mask, non-zero where the pixel belongs to an unknown class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ood_mask_path: Option<PathBuf>,
    pub split: Split,
    pub domain_tag: String,
}

fn default_ignore() -> u16 {
    DEFAULT_IGNORE
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub classes: usize,
    #[serde(default = "default_ignore")]
    pub ignore_value: u16,
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// One problem found while validating a manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub file: Option<PathBuf>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(file) => write!(f, "{}: {}: {}", file.display(), self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

fn diag(file: Option<&Path>, field: &str, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        file: file.map(Path::to_path_buf),
        field: field.to_owned(),
        message: message.into(),
    }
}

impl DatasetManifest {
    pub fn new(classes: usize, entries: Vec<ManifestEntry>) -> Self {
        Self {
            classes,
            ignore_value: DEFAULT_IGNORE,
            entries,
            base_dir: PathBuf::new(),
        }
    }

    /// Parses a manifest without touching any referenced file.
    pub fn parse(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(manifest)
    }

    /// Parses a manifest and checks ids and file existence.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let manifest = Self::parse(path)?;
        let problems = manifest.check_structure();
        if !problems.is_empty() {
            let joined: Vec<String> = problems.iter().map(ToString::to_string).collect();
            return Err(Error::Manifest(joined.join("; ")));
        }
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, relative: &Path) -> PathBuf {
        self.base_dir.join(relative)
    }

    pub fn entries_in(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Sorted, de-duplicated domain tags.
    pub fn domains(&self) -> Vec<String> {
        let tags: BTreeSet<&str> = self.entries.iter().map(|e| e.domain_tag.as_str()).collect();
        tags.into_iter().map(str::to_owned).collect()
    }

    fn paths(entry: &ManifestEntry) -> Vec<(&'static str, &Path)> {
        let mut out = vec![
            ("logit_path", entry.logit_path.as_path()),
            ("label_path", entry.label_path.as_path()),
        ];
        for (field, p) in [
            ("feature_path", &entry.feature_path),
            ("image_path", &entry.image_path),
            ("ood_mask_path", &entry.ood_mask_path),
        ] {
            if let Some(p) = p {
                out.push((field, p.as_path()));
            }
        }
        out
    }

    /// Unique ids, sane class count, every referenced file present.
    pub fn check_structure(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.classes < 2 {
            out.push(diag(
                None,
                "classes",
                format!("need at least 2 classes, got {}", self.classes),
            ));
        }
        let mut seen = HashSet::new();
        for entry in &self.entries {
            if !seen.insert(entry.image_id.as_str()) {
                out.push(diag(
                    None,
                    "image_id",
                    format!("duplicate id `{}`", entry.image_id),
                ));
            }
            for (field, rel) in Self::paths(entry) {
                let full = self.resolve(rel);
                if !full.is_file() {
                    out.push(diag(
                        Some(&full),
                        field,
                        format!("missing file for `{}`", entry.image_id),
                    ));
                }
            }
        }
        out
    }

    /// Structure checks plus header checks of every referenced tensor that
    /// exists.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = self.check_structure();
        let mut feature_dim: Option<(usize, String)> = None;
        for entry in &self.entries {
            let logit_path = self.resolve(&entry.logit_path);
            let shape = match format::read_header(&logit_path) {
                Err(_) if !logit_path.is_file() => None,
                Err(e) => {
                    out.push(diag(Some(&logit_path), "logit_path", e.to_string()));
                    None
                }
                Ok(h) => {
                    if h.dtype != Dtype::F32 || h.layout != Layout::Hwc {
                        out.push(diag(Some(&logit_path), "dtype", "logits must be f32 HWC"));
                    }
                    if h.classes != self.classes {
                        out.push(diag(
                            Some(&logit_path),
                            "classes",
                            format!(
                                "header has {} classes, manifest {}",
                                h.classes, self.classes
                            ),
                        ));
                    }
                    Some((h.height, h.width))
                }
            };
            let mut check_hw =
                |field: &str, rel: &Path, dtype: Dtype, layout: Layout, classes: Option<usize>| {
                    let path = self.resolve(rel);
                    match format::read_header(&path) {
                        Err(_) if !path.is_file() => {}
                        Err(e) => out.push(diag(Some(&path), field, e.to_string())),
                        Ok(h) => {
                            if h.dtype != dtype || h.layout != layout {
                                out.push(diag(
                                    Some(&path),
                                    "dtype",
                                    format!("expected {dtype:?} {layout:?}"),
                                ));
                            }
                            if let Some(k) = classes {
                                if h.classes != k {
                                    out.push(diag(
                                        Some(&path),
                                        "classes",
                                        format!("header has {} classes, manifest {k}", h.classes),
                                    ));
                                }
                            }
                            if let Some(hw) = shape {
                                if (h.height, h.width) != hw {
                                    out.push(diag(
                                        Some(&path),
                                        "shape",
                                        format!(
                                            "{}x{} differs from logits {}x{}",
                                            h.height, h.width, hw.0, hw.1
                                        ),
                                    ));
                                }
                            }
                        }
                    }
                };
            check_hw(
                "label_path",
                &entry.label_path,
                Dtype::U16,
                Layout::Hw,
                Some(self.classes),
            );
            if let Some(p) = &entry.image_path {
                check_hw("image_path", p, Dtype::F32, Layout::Hwc, None);
            }
            if let Some(p) = &entry.ood_mask_path {
                check_hw("ood_mask_path", p, Dtype::U16, Layout::Hw, None);
            }
            if let Some(rel) = &entry.feature_path {
                let path = self.resolve(rel);
                match format::read_header(&path) {
                    Err(_) if !path.is_file() => {}
                    Err(e) => out.push(diag(Some(&path), "feature_path", e.to_string())),
                    Ok(h) if h.dtype != Dtype::F32 || h.layout != Layout::Hw || h.height != 1 => {
                        out.push(diag(
                            Some(&path),
                            "dtype",
                            "features must be f32 HW with height 1",
                        ));
                    }
                    Ok(h) => match &feature_dim {
                        None => feature_dim = Some((h.width, entry.image_id.clone())),
                        Some((d, first)) if *d != h.width => out.push(diag(
                            Some(&path),
                            "width",
                            format!("feature length {} differs from {d} of `{first}`", h.width),
                        )),
                        Some(_) => {}
                    },
                }
            }
        }
        out
    }

    /// Loads every tensor of one entry and cross-checks shapes.
    pub fn load_image(&self, entry: &ManifestEntry) -> Result<LabeledImage> {
        let logits = format::read_logits(self.resolve(&entry.logit_path))?;
        if logits.classes() != self.classes {
            return Err(Error::Manifest(format!(
                "`{}` has {} classes, manifest {}",
                entry.image_id,
                logits.classes(),
                self.classes
            )));
        }
        let (labels, _) = format::read_labels(self.resolve(&entry.label_path))?;
        if labels.shape() != (logits.height(), logits.width()) {
            return Err(Error::ShapeMismatch(format!(
                "labels of `{}` do not match its logits",
                entry.image_id
            )));
        }
        labels.check_classes(self.classes, self.ignore_value)?;
        let feature = entry
            .feature_path
            .as_ref()
            .map(|p| format::read_feature(self.resolve(p), &entry.image_id))
            .transpose()?;
        let image = entry
            .image_path
            .as_ref()
            .map(|p| format::read_image(self.resolve(p)))
            .transpose()?;
        if let Some(img) = &image {
            if (img.height(), img.width()) != (logits.height(), logits.width()) {
                return Err(Error::ShapeMismatch(format!(
                    "image channels of `{}` do not match its logits",
                    entry.image_id
                )));
            }
        }
        let ood_mask = entry
            .ood_mask_path
            .as_ref()
            .map(|p| -> Result<Vec<bool>> {
                let (mask, _) = format::read_labels(self.resolve(p))?;
                if mask.shape() != labels.shape() {
                    return Err(Error::ShapeMismatch(format!(
                        "ood mask of `{}` does not match its logits",
                        entry.image_id
                    )));
                }
                Ok(mask.data().iter().map(|&v| v != 0).collect())
            })
            .transpose()?;
        Ok(LabeledImage {
            image_id: entry.image_id.clone(),
            domain_tag: entry.domain_tag.clone(),
            split: entry.split,
            logits,
            labels,
            feature,
            image,
            ood_mask,
        })
    }

    /// Loads all entries of `split`, ordered by image id.
    pub fn load_split(&self, split: Split) -> Result<Vec<LabeledImage>> {
        let mut entries: Vec<&ManifestEntry> = self.entries_in(split).collect();
        entries.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        crate::parallel::try_map(&entries, |e| self.load_image(e))
    }
}

/// Everything known about one image, loaded into memory.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub image_id: String,
    pub domain_tag: String,
    pub split: Split,
    pub logits: LogitTensor,
    pub labels: LabelMap,
    pub feature: Option<ImageFeature>,
    pub image: Option<ImageTensor>,
    pub ood_mask: Option<Vec<bool>>,
}
