//! Synthetic benchmarks for reliability evaluation. Scenes come with their
//! generating class probabilities, so calibration ground truth is known,
//! and domains differ by a controllable temperature and logit noise.

pub mod benchmark;
pub mod config;
pub mod counterexample;
pub mod scene;

pub use benchmark::{generate_benchmark, MANIFEST_FILE};
pub use config::{ladder, DomainSpec, SynthConfig};
pub use counterexample::{build_counterexample, Counterexample, CounterexampleSpec, TheoremCheck};
pub use scene::{generate_scene, Scene};
