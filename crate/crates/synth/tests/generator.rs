use relikit_calibration::{fit_global_ts, CalibrationPixels};
use relikit_core::softmax::{confidence_map, softmax};
use relikit_core::{
    extract_records, ConfidenceScore, DatasetManifest, PredictionRecordSet, DEFAULT_IGNORE,
};
use relikit_metrics::{ece, BinStrategy};
use relikit_synth::{generate_benchmark, generate_scene, DomainSpec, SynthConfig, MANIFEST_FILE};

fn single_domain(side: usize, tau: f64, sigma: f64) -> SynthConfig {
    SynthConfig {
        height: side,
        width: side,
        domains: vec![DomainSpec::new("d", tau, sigma, vec![0.0])],
        ..SynthConfig::default()
    }
}

fn records(cfg: &SynthConfig, tag: &str, ids: &[&str]) -> PredictionRecordSet {
    let sets: Vec<PredictionRecordSet> = ids
        .iter()
        .map(|id| {
            let s = generate_scene(cfg, tag, id).unwrap();
            let map = confidence_map(&softmax(&s.logits), ConfidenceScore::MaxProb);
            extract_records(&map, &s.labels, DEFAULT_IGNORE, None, id).unwrap()
        })
        .collect();
    PredictionRecordSet::concat(ConfidenceScore::MaxProb, cfg.classes, sets).unwrap()
}

fn fitted_temperature(cfg: &SynthConfig, tag: &str, id: &str) -> f64 {
    let s = generate_scene(cfg, tag, id).unwrap();
    let px = CalibrationPixels::from_parts(
        cfg.classes,
        s.logits.data().to_vec(),
        s.labels.data().to_vec(),
    )
    .unwrap();
    fit_global_ts(&px).unwrap().temperature.value()
}

#[test]
fn unit_temperature_without_noise_is_calibrated() {
    let cfg = single_domain(1000, 1.0, 0.0);
    let recs = records(&cfg, "d", &["big"]);
    assert_eq!(recs.len(), 1_000_000);
    let e = ece(&recs, 15, BinStrategy::EqualWidth).unwrap();
    assert!(e < 0.01, "ECE {e}");
}

#[test]
fn global_ts_recovers_the_domain_temperature() {
    let cfg = single_domain(320, 2.0, 0.0);
    let t = fitted_temperature(&cfg, "d", "a");
    assert!((t / 2.0 - 1.0).abs() < 0.02, "{t}");
}

#[test]
fn recovered_temperature_increases_with_tau() {
    let ts: Vec<f64> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&tau| fitted_temperature(&single_domain(200, tau, 0.0), "d", "m"))
        .collect();
    assert!(ts[0] < ts[1] && ts[1] < ts[2], "{ts:?}");
}

#[test]
fn default_ladder_has_increasing_ece() {
    let cfg = SynthConfig::default();
    let ids = ["a", "b", "c", "d"];
    let eces: Vec<f64> = ["id", "mild", "strong"]
        .iter()
        .map(|tag| {
            let prefixed: Vec<String> = ids.iter().map(|i| format!("{tag}_{i}")).collect();
            let refs: Vec<&str> = prefixed.iter().map(String::as_str).collect();
            ece(&records(&cfg, tag, &refs), 15, BinStrategy::EqualWidth).unwrap()
        })
        .collect();
    assert!(eces[0] < eces[1] && eces[1] < eces[2], "{eces:?}");
}

#[test]
fn benchmark_writes_a_valid_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SynthConfig {
        height: 16,
        width: 12,
        calibration_images: 2,
        test_images: 3,
        ..SynthConfig::default()
    };
    cfg.domains[2].held_out_classes = vec![1];
    let manifest = generate_benchmark(&cfg, dir.path()).unwrap();
    assert_eq!(manifest.entries.len(), 15);
    let loaded = DatasetManifest::load(dir.path().join(MANIFEST_FILE)).unwrap();
    assert!(loaded.validate().is_empty(), "{:?}", loaded.validate());
    assert_eq!(loaded.domains(), vec!["id", "mild", "strong"]);
    let test = loaded.load_split(relikit_core::Split::Test).unwrap();
    assert_eq!(test.len(), 9);
    for img in &test {
        let scene = generate_scene(&cfg, &img.domain_tag, &img.image_id).unwrap();
        assert_eq!(img.logits, scene.logits);
        assert_eq!(img.ood_mask, scene.ood_mask);
        assert_eq!(img.image.as_ref(), Some(&scene.image));
    }
}

#[test]
fn benchmark_is_byte_identical_across_runs() {
    let cfg = SynthConfig {
        height: 8,
        width: 8,
        calibration_images: 1,
        test_images: 1,
        ..SynthConfig::default()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = generate_benchmark(&cfg, a.path()).unwrap();
    generate_benchmark(&cfg, b.path()).unwrap();
    let read = |root: &std::path::Path, p: &std::path::Path| std::fs::read(root.join(p)).unwrap();
    assert_eq!(
        read(a.path(), MANIFEST_FILE.as_ref()),
        read(b.path(), MANIFEST_FILE.as_ref())
    );
    for e in &ma.entries {
        assert_eq!(read(a.path(), &e.logit_path), read(b.path(), &e.logit_path));
        assert_eq!(read(a.path(), &e.label_path), read(b.path(), &e.label_path));
    }
}

#[test]
fn empty_domain_list_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        domains: Vec::new(),
        ..SynthConfig::default()
    };
    assert!(generate_benchmark(&cfg, dir.path()).is_err());
}
