#![allow(dead_code)]

use std::path::Path;

use relikit_synth::{generate_benchmark, DomainSpec, SynthConfig};

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the command-line program in-process.
pub fn relikit(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("relikit").chain(args.iter().copied());
    let code = relikit_cli::run(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn small_ladder(dir: &Path) -> SynthConfig {
    let config = SynthConfig {
        height: 32,
        width: 32,
        calibration_images: 3,
        test_images: 3,
        ..SynthConfig::default()
    };
    generate_benchmark(&config, dir).unwrap();
    config
}

pub fn single_domain(dir: &Path, tau: f64, side: usize, images: usize) -> SynthConfig {
    let config = SynthConfig {
        height: side,
        width: side,
        calibration_images: images,
        test_images: images,
        domains: vec![DomainSpec::new("shifted", tau, 0.0, vec![0.0, 0.0])],
        ..SynthConfig::default()
    };
    generate_benchmark(&config, dir).unwrap();
    config
}
