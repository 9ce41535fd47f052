//! Post-hoc calibration of pixel-wise logits: global temperature scaling,
//! cluster-based temperature scaling and a learned per-pixel temperature
//! regressor. Every method divides logits by a strictly positive
//! temperature, so predicted classes never change.

pub mod calibrator;
pub mod cluster;
pub mod kmeans;
pub mod lts;
pub mod pixels;
pub mod search;
pub mod temperature;
pub mod ts;

pub use calibrator::{load_calibrator, save_calibrator, Calibrator};
pub use cluster::{
    apply_cluster_ts, fit_cluster_ts, ClusterTemperatureModel, ClusterTsConfig, ClusterVariant,
};
pub use kmeans::{kmeans, KMeans, KMeansConfig};
pub use lts::{
    fit_lts, predict_temperature_map, FeatureMode, LtsConfig, LtsFit, TemperatureRegressor,
};
pub use pixels::CalibrationPixels;
pub use temperature::{
    apply_temperature, apply_temperature_map, GlobalTemperature, TemperatureMap, T_MAX, T_MIN,
};
pub use ts::{fit_global_ts, TsFit};
