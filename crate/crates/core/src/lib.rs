//! Core types for pixel-wise reliability evaluation: logit and label
//! tensors, softmax and confidence scores, prediction records, the binary
//! tensor file format and dataset manifests.

pub mod error;
pub mod format;
pub mod manifest;
pub mod parallel;
pub mod records;
pub mod rng;
pub mod softmax;
pub mod tensor;

pub use error::{Error, Result};
pub use manifest::{DatasetManifest, Diagnostic, LabeledImage, ManifestEntry, Split};
pub use records::{extract_records, PredictionRecord, PredictionRecordSet, Subsample};
pub use softmax::{confidence_map, softmax, ConfidenceMap, ConfidenceScore};
pub use tensor::{ImageFeature, ImageTensor, LabelMap, LogitTensor, ProbTensor, DEFAULT_IGNORE};
