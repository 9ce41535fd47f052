//! Reliability metrics for pixel-wise predictions: calibration error (ECE,
//! adaptive ECE, KS), misclassification detection (PRR), OOD detection
//! (AUROC) and segmentation quality (mIoU).

pub mod binning;
pub mod calibration_error;
pub mod rejection;
pub mod report;
pub mod roc;
pub mod segmentation;

pub use binning::{BinPartition, BinStats, BinStrategy, DEFAULT_BINS};
pub use calibration_error::{ece, ece_from, ks_error, ks_error_from, reliability_bins};
pub use rejection::{prr, prr_from, rejection_curve};
pub use report::{DomainMetrics, OodPair, ReliabilityReport};
pub use roc::{auroc, image_mean_confidence, ood_image_auroc, pixel_ood_auroc};
pub use segmentation::{miou, ConfusionMatrix, SegmentationScore};
