//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;
#[path = "../../metrics/tests/oracle/mod.rs"]
mod oracle;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use common::{path_str, relikit};
use relikit_calibration::lts::LtsSamples;
use relikit_calibration::{
    fit_cluster_ts, fit_global_ts, fit_lts, CalibrationPixels, Calibrator, ClusterTsConfig,
    ClusterVariant, FeatureMode, LtsConfig, TemperatureRegressor,
};
use relikit_core::softmax::{confidence_map, softmax};
use relikit_core::{
    extract_records, ConfidenceScore, DatasetManifest, LabeledImage, PredictionRecordSet, Split,
    Subsample, DEFAULT_IGNORE,
};
use relikit_metrics::{
    auroc, ece, ece_from, ks_error, ks_error_from, miou, prr_from, BinStrategy, ReliabilityReport,
};
use relikit_synth::{generate_benchmark, generate_scene, DomainSpec, SynthConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn split_by_outcome(conf: &[f64], correct: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let pos = conf
        .iter()
        .zip(correct)
        .filter(|p| *p.1)
        .map(|p| *p.0)
        .collect();
    let neg = conf
        .iter()
        .zip(correct)
        .filter(|p| !*p.1)
        .map(|p| *p.0)
        .collect();
    (pos, neg)
}

fn records_of(
    image: &LabeledImage,
    probs: &relikit_core::ProbTensor,
    score: ConfidenceScore,
    sub: Option<&Subsample>,
) -> PredictionRecordSet {
    let map = confidence_map(probs, score);
    extract_records(&map, &image.labels, DEFAULT_IGNORE, sub, &image.image_id).unwrap()
}

fn scene_image(cfg: &SynthConfig, tag: &str, id: &str) -> LabeledImage {
    let s = generate_scene(cfg, tag, id).unwrap();
    LabeledImage {
        image_id: id.to_owned(),
        domain_tag: tag.to_owned(),
        split: Split::Calibration,
        logits: s.logits,
        labels: s.labels,
        feature: Some(s.feature),
        image: Some(s.image),
        ood_mask: s.ood_mask,
    }
}

fn union_ece(images: &[LabeledImage], cal: Option<&Calibrator>) -> f64 {
    let sets: Vec<PredictionRecordSet> = images
        .iter()
        .map(|img| {
            let probs = cal.map_or_else(|| softmax(&img.logits), |c| c.apply(img).unwrap());
            records_of(img, &probs, ConfidenceScore::MaxProb, None)
        })
        .collect();
    let all =
        PredictionRecordSet::concat(ConfidenceScore::MaxProb, images[0].logits.classes(), sets)
            .unwrap();
    ece(&all, 15, BinStrategy::EqualWidth).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    while instances < 1000 {
        let n = rng.gen_range(2..=1000);
        let m = rng.gen_range(1..=30);
        let conf: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    rng.gen_range(0..=20) as f64 / 20.0
                } else {
                    rng.gen()
                }
            })
            .collect();
        let correct: Vec<bool> = conf
            .iter()
            .map(|&c| rng.gen_bool(c.clamp(0.05, 0.95)))
            .collect();
        let (pos, neg) = split_by_outcome(&conf, &correct);
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        instances += 1;
        let diffs = [
            ece_from(&conf, &correct, m, BinStrategy::EqualWidth).unwrap()
                - oracle::ece_equal_width(&conf, &correct, m),
            ece_from(&conf, &correct, m, BinStrategy::EqualPopulation).unwrap()
                - oracle::ece_equal_population(&conf, &correct, m),
            ks_error_from(&conf, &correct).unwrap() - oracle::ks_error(&conf, &correct),
            prr_from(&conf, &correct).unwrap() - oracle::prr(&conf, &correct),
            auroc(&pos, &neg).unwrap() - oracle::auroc(&pos, &neg),
        ];
        worst = diffs.iter().fold(worst, |w, d| w.max(d.abs()));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 1e-12 && secs < 60.0,
        format!("{instances} instances, max |diff| {worst:.2e}, {secs:.1}s"),
    )
}

fn criterion_2() -> Outcome {
    let cfg = SynthConfig {
        height: 128,
        width: 128,
        domains: vec![DomainSpec::new("id", 1.0, 0.0, vec![0.0])],
        ..SynthConfig::default()
    };
    let sets: Vec<PredictionRecordSet> = (0..4)
        .map(|i| {
            let img = scene_image(&cfg, "id", &format!("a{i}"));
            records_of(&img, &softmax(&img.logits), ConfidenceScore::MaxProb, None)
        })
        .collect();
    let recs = PredictionRecordSet::concat(ConfidenceScore::MaxProb, cfg.classes, sets).unwrap();
    let e = ece(&recs, 15, BinStrategy::EqualWidth).unwrap();
    let a = ece(&recs, 15, BinStrategy::EqualPopulation).unwrap();
    let k = ks_error(&recs).unwrap();
    check(
        recs.len() >= 50_000 && (e - a).abs() < 0.01 && (e - k).abs() < 0.01,
        format!(
            "{} records: ECE {e:.4}, AdaECE {a:.4}, KS {k:.4}",
            recs.len()
        ),
    )
}

fn criterion_3() -> Outcome {
    // segmentation-like pixel accuracy (about 92%) on a shifted domain
    let cfg = SynthConfig {
        height: 1415,
        width: 1415,
        concentration: 0.001,
        domains: vec![DomainSpec::new("mild", 2.0, 0.5, vec![0.0])],
        ..SynthConfig::default()
    };
    let img = scene_image(&cfg, "mild", "big");
    let probs = softmax(&img.logits);
    let all = records_of(&img, &probs, ConfidenceScore::MaxProb, None);
    let accuracy = all.correctness().iter().filter(|c| **c).count() as f64 / all.len() as f64;
    let full = ece(&all, 15, BinStrategy::EqualWidth).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let sub = Subsample::new(20_000, seed).unwrap();
        let e = ece(
            &records_of(&img, &probs, ConfidenceScore::MaxProb, Some(&sub)),
            15,
            BinStrategy::EqualWidth,
        )
        .unwrap();
        worst = worst.max((e - full).abs());
    }
    check(
        worst < 0.005,
        format!(
            "{} pixels, accuracy {accuracy:.3}, full ECE {full:.4}, max |sub − full| {worst:.4} over 10 seeds",
            img.logits.num_pixels()
        ),
    )
}

fn benchmark(dir: &Path, cfg: &SynthConfig) -> (Vec<LabeledImage>, Vec<LabeledImage>) {
    let manifest = generate_benchmark(cfg, dir).unwrap();
    (
        manifest.load_split(Split::Calibration).unwrap(),
        manifest.load_split(Split::Test).unwrap(),
    )
}

fn criterion_4() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SynthConfig {
        height: 48,
        width: 48,
        calibration_images: 4,
        test_images: 4,
        ..SynthConfig::default()
    };
    cfg.domains[2].held_out_classes = vec![4];
    let (cal, test) = benchmark(dir.path(), &cfg);
    let pixels = CalibrationPixels::from_images(&cal, DEFAULT_IGNORE, None).unwrap();
    let lts = LtsConfig {
        epochs: 5,
        ..LtsConfig::default()
    };
    let calibrators = [
        Calibrator::Global(fit_global_ts(&pixels).unwrap().temperature),
        Calibrator::Cluster(
            fit_cluster_ts(&cal, &ClusterTsConfig::new(3, ClusterVariant::PerImage, 0)).unwrap(),
        ),
        Calibrator::Cluster(
            fit_cluster_ts(&cal, &ClusterTsConfig::new(3, ClusterVariant::PerClass, 0)).unwrap(),
        ),
        Calibrator::Local(fit_lts(&cal, DEFAULT_IGNORE, &lts).unwrap().regressor),
    ];
    let all: Vec<&LabeledImage> = cal.iter().chain(&test).collect();
    let labels: Vec<_> = all.iter().map(|i| i.labels.clone()).collect();
    let before: Vec<Vec<u16>> = all.iter().map(|i| i.logits.argmax()).collect();
    let miou_before = miou(&before, &labels, cfg.classes, DEFAULT_IGNORE)
        .unwrap()
        .miou;
    let mut failures = Vec::new();
    for c in &calibrators {
        let after: Vec<Vec<u16>> = all
            .iter()
            .map(|img| confidence_map(&c.apply(img).unwrap(), ConfidenceScore::MaxProb).predicted)
            .collect();
        let miou_after = miou(&after, &labels, cfg.classes, DEFAULT_IGNORE)
            .unwrap()
            .miou;
        if after != before || miou_after.to_bits() != miou_before.to_bits() {
            failures.push(c.method());
        }
    }
    check(
        failures.is_empty(),
        format!(
            "{} images × {{ts, cluster_ts, class_cluster_ts, lts}}; changed: {failures:?}",
            all.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for tau in [0.5, 1.0, 2.0, 4.0] {
        let cfg = SynthConfig {
            height: 317,
            width: 317,
            domains: vec![DomainSpec::new("d", tau, 0.0, vec![0.0])],
            ..SynthConfig::default()
        };
        let img = scene_image(&cfg, "d", "cal");
        let pixels = CalibrationPixels::from_image(&img, DEFAULT_IGNORE, None).unwrap();
        let start = Instant::now();
        let t = fit_global_ts(&pixels).unwrap().temperature.value();
        let secs = start.elapsed().as_secs_f64();
        let rel = (t / tau - 1.0).abs();
        ok &= rel < 0.02 && secs < 10.0;
        lines.push(format!(
            "τ={tau}: T={t:.4} ({:.2}%, {secs:.2}s)",
            100.0 * rel
        ));
    }
    check(ok, format!("100489 pixels each; {}", lines.join(", ")))
}

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        height: 48,
        width: 48,
        calibration_images: 6,
        test_images: 0,
        ..SynthConfig::default()
    };
    let (cal, _) = benchmark(dir.path(), &cfg);
    let ccfg = ClusterTsConfig::new(1, ClusterVariant::PerImage, 3);
    let model = fit_cluster_ts(&cal, &ccfg).unwrap();
    let pixels =
        CalibrationPixels::from_images(&cal, DEFAULT_IGNORE, ccfg.subsample.as_ref()).unwrap();
    let global = fit_global_ts(&pixels).unwrap().temperature.value();
    let gap = (model.temperatures[0][0].ln() - global.ln()).abs();
    check(
        gap < 1e-3,
        format!(
            "cluster T {:.6}, global T {global:.6}, |Δ ln T| {gap:.2e}",
            model.temperatures[0][0]
        ),
    )
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        height: 48,
        width: 48,
        calibration_images: 6,
        test_images: 6,
        domains: vec![
            DomainSpec::new("t1", 1.0, 0.0, vec![0.0, 0.0]),
            DomainSpec::new("t2", 2.0, 0.0, vec![10.0, 0.0]),
            DomainSpec::new("t4", 4.0, 0.0, vec![0.0, 10.0]),
        ],
        ..SynthConfig::default()
    };
    let (cal, test) = benchmark(dir.path(), &cfg);
    let pixels = CalibrationPixels::from_images(&cal, DEFAULT_IGNORE, None).unwrap();
    let global = Calibrator::Global(fit_global_ts(&pixels).unwrap().temperature);
    let clustered = Calibrator::Cluster(
        fit_cluster_ts(&cal, &ClusterTsConfig::new(3, ClusterVariant::PerImage, 0)).unwrap(),
    );
    let (g, c) = (
        union_ece(&test, Some(&global)),
        union_ece(&test, Some(&clustered)),
    );
    let reduction = 1.0 - c / g;
    check(
        reduction >= 0.25,
        format!(
            "union test ECE: global TS {g:.4}, cluster TS {c:.4} ({:.0}% lower)",
            100.0 * reduction
        ),
    )
}

fn gradient_check() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let classes = rng.gen_range(2..6);
        let channels = rng.gen_range(1..4);
        let hidden = rng.gen_range(1..9);
        let n = rng.gen_range(1..10);
        let d = classes + channels;
        let logits: Vec<f32> = (0..n * classes)
            .map(|_| (2.0 * rng.sample::<f64, _>(StandardNormal)) as f32)
            .collect();
        let samples = LtsSamples {
            classes,
            input_dim: d,
            inputs: (0..n * d)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect(),
            logits,
            labels: (0..n).map(|_| rng.gen_range(0..classes) as u16).collect(),
            weights: vec![1.0; n],
        };
        let mut reg = TemperatureRegressor::zeros(FeatureMode::Both, classes, d, hidden, 0.05);
        let params: Vec<f64> = (0..reg.num_params())
            .map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        reg.set_params(&params);
        let idx: Vec<usize> = (0..n).collect();
        let (_, analytic) = reg.loss_and_gradient(&samples, &idx);
        let h = 1e-4;
        let numeric: Vec<f64> = (0..params.len())
            .map(|j| {
                let mut probe = reg.clone();
                let mut p = params.clone();
                p[j] += h;
                probe.set_params(&p);
                let up = probe.loss(&samples, &idx);
                p[j] -= 2.0 * h;
                probe.set_params(&p);
                (up - probe.loss(&samples, &idx)) / (2.0 * h)
            })
            .collect();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let denom = norm(&analytic).max(norm(&numeric));
        if denom > 0.0 {
            worst = worst.max(norm(&diff) / denom);
        }
    }
    worst
}

fn eval_domain_ece(manifest: &Path, calibrator: Option<&Path>, domain: &str) -> f64 {
    let mut args = vec!["eval", "--manifest", path_str(manifest), "--metrics", "ece"];
    if let Some(c) = calibrator {
        args.extend(["--calibrator", path_str(c)]);
    }
    let out = relikit(&args);
    assert_eq!(out.code, 0, "{}", out.stderr);
    ReliabilityReport::from_json(&out.stdout).unwrap().domains[domain]
        .ece
        .unwrap()
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SynthConfig::default();
    cfg.domains[0].temperature_jitter = 0.4;
    generate_benchmark(&cfg, dir.path()).unwrap();
    let manifest = dir.path().join("manifest.json");
    let artifact = dir.path().join("lts.json");
    let out = relikit(&[
        "fit",
        "--manifest",
        path_str(&manifest),
        "--method",
        "lts",
        "--feature-mode",
        "image_only",
        "--domains",
        "id",
        "-o",
        path_str(&artifact),
    ]);
    if out.code != 0 {
        return Err(format!("fit failed: {}", out.stderr));
    }
    let before = eval_domain_ece(&manifest, None, "strong");
    let after = eval_domain_ece(&manifest, Some(&artifact), "strong");
    let reduction = 1.0 - after / before;
    let grad = gradient_check();
    check(
        reduction >= 0.20 && grad < 1e-4,
        format!(
            "strong-domain ECE {before:.2}% → {after:.2}% ({:.0}% lower); gradient check max rel. error {grad:.2e}",
            100.0 * reduction
        ),
    )
}

fn criterion_9() -> Outcome {
    let out = relikit(&[
        "theorem",
        "--residual",
        "0.2",
        "--bins",
        "3",
        "--per-bin",
        "100",
    ]);
    let expected =
        "f       0.200000  0.200000  0.000000\noracle  0.100000  0.100000  0.100000\nPASS\n";
    let default_ok = out.code == 0 && out.stdout.ends_with(expected);
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let (mut valid, mut passed, mut tried) = (0, 0, 0);
    while valid < 100 && tried < 100_000 {
        tried += 1;
        let bins = rng.gen_range(1..=10usize);
        let per_bin = rng.gen_range(1..=200usize);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let residual = sign * rng.gen_range(0.001..0.5);
        let spec = relikit_synth::CounterexampleSpec {
            bins,
            residual,
            per_bin,
        };
        if relikit_synth::build_counterexample(&spec).is_err() {
            continue;
        }
        valid += 1;
        let out = relikit(&[
            "theorem",
            "--bins",
            &bins.to_string(),
            "--per-bin",
            &per_bin.to_string(),
            "--residual",
            &residual.to_string(),
        ]);
        if out.code == 0 && out.stdout.trim_end().ends_with("PASS") {
            passed += 1;
        }
    }
    check(
        default_ok && valid == 100 && passed == 100,
        format!("r=0.2: f (0.2, 0.2, 0) vs oracle (0.1, 0.1, 0.1) {}; {passed}/{valid} random specs PASS", if default_ok { "exact" } else { "MISMATCH" }),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut transform_ok = true;
    for _ in 0..200 {
        let n = rng.gen_range(2..=500);
        let conf: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0..=1000) as f64 / 1000.0)
            .collect();
        let correct: Vec<bool> = conf
            .iter()
            .map(|&c| rng.gen_bool(c.clamp(0.05, 0.95)))
            .collect();
        let (pos, neg) = split_by_outcome(&conf, &correct);
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        let base = (
            prr_from(&conf, &correct).unwrap(),
            auroc(&pos, &neg).unwrap(),
        );
        let transforms: [fn(f64) -> f64; 3] = [
            |c| (5.0 * c).exp(),
            |c| c * c * c + 2.0 * c - 1.0,
            |c| 1.0 / (1.0 + (-8.0 * (c - 0.5)).exp()),
        ];
        for f in transforms {
            let warped: Vec<f64> = conf.iter().map(|&c| f(c)).collect();
            let (wp, wn) = split_by_outcome(&warped, &correct);
            transform_ok &= prr_from(&warped, &correct).unwrap() == base.0
                && auroc(&wp, &wn).unwrap() == base.1;
        }
    }
    // K = 2: negative entropy is a monotone function of max probability
    let cfg = SynthConfig {
        classes: 2,
        height: 64,
        width: 64,
        domains: vec![DomainSpec::new("b", 1.5, 0.3, vec![0.0])],
        ..SynthConfig::default()
    };
    let mut binary_ok = true;
    for i in 0..5 {
        let img = scene_image(&cfg, "b", &format!("k2_{i}"));
        let probs = softmax(&img.logits);
        let mp = records_of(&img, &probs, ConfidenceScore::MaxProb, None);
        let ne = records_of(&img, &probs, ConfidenceScore::NegEntropy, None);
        let metrics = |r: &PredictionRecordSet| {
            let (c, ok) = (r.confidences(), r.correctness());
            let (p, n) = split_by_outcome(&c, &ok);
            (prr_from(&c, &ok).unwrap(), auroc(&p, &n).unwrap())
        };
        binary_ok &= metrics(&mp) == metrics(&ne);
    }
    check(
        transform_ok && binary_ok,
        format!("monotone transforms exact: {transform_ok}; K=2 MaxProb vs NegEntropy identical: {binary_ok}"),
    )
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let n = 10_000;
    let correct: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.8)).collect();
    let oracle_conf: Vec<f64> = correct.iter().map(|&c| if c { 0.9 } else { 0.1 }).collect();
    let oracle_prr = prr_from(&oracle_conf, &correct).unwrap();
    let mut total = 0.0;
    for seed in 0..20u64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let ok: Vec<bool> = (0..n).map(|_| r.gen_bool(0.8)).collect();
        let conf: Vec<f64> = (0..n).map(|_| r.gen()).collect();
        total += prr_from(&conf, &ok).unwrap();
    }
    let mean = total / 20.0;
    check(
        oracle_prr == 100.0 && mean.abs() <= 3.0,
        format!("oracle ordering PRR {oracle_prr}; random confidence mean PRR {mean:.3} over 20 × 10k records"),
    )
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SynthConfig {
        height: 40,
        width: 40,
        calibration_images: 3,
        test_images: 5,
        ..SynthConfig::default()
    };
    cfg.domains[2].held_out_classes = vec![0];
    let synth_cfg = dir.path().join("synth.json");
    std::fs::write(&synth_cfg, serde_json::to_string(&cfg).unwrap()).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let r = relikit(&[
            "synth",
            "--config",
            path_str(&synth_cfg),
            "--out",
            path_str(out),
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
    }
    let manifest = DatasetManifest::load(a.join("manifest.json")).unwrap();
    let same_data = manifest.entries.iter().all(|e| {
        std::fs::read(a.join(&e.logit_path)).unwrap()
            == std::fs::read(b.join(&e.logit_path)).unwrap()
    });
    let run = serde_json::json!({
        "manifest": "a/manifest.json",
        "subsample": {"pixels": 500, "seed": 7},
        "calibration": {"method": "cluster_ts", "artifact": "cal.json", "clusters": 2, "seed": 3},
        "ood": {"in_domain": "id"}
    });
    let run_cfg = dir.path().join("run.json");
    std::fs::write(&run_cfg, run.to_string()).unwrap();
    assert_eq!(relikit(&["fit", "--config", path_str(&run_cfg)]).code, 0);
    let mut reports = BTreeMap::new();
    for (name, workers) in [("w1", "1"), ("w4", "4"), ("w4-again", "4")] {
        let out = dir.path().join(format!("{name}.json"));
        let r = relikit(&[
            "--workers",
            workers,
            "eval",
            "--config",
            path_str(&run_cfg),
            "-o",
            path_str(&out),
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        reports.insert(name, std::fs::read(out).unwrap());
    }
    std::env::set_var(relikit_core::parallel::WORKERS_ENV, "1");
    let env_run = relikit(&["eval", "--config", path_str(&run_cfg)]);
    std::env::remove_var(relikit_core::parallel::WORKERS_ENV);
    let identical = reports["w1"] == reports["w4"] && reports["w4"] == reports["w4-again"];
    let env_identical = env_run.stdout.as_bytes() == reports["w1"].as_slice();
    check(
        same_data && identical && env_identical,
        format!(
            "synth outputs identical: {same_data}; reports identical across runs and workers {{1, 4}}: {identical}; RELIKIT_WORKERS=1: {env_identical}"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("metric-oracle equivalence", criterion_1),
        ("ECE / AdaECE / KS agreement", criterion_2),
        ("20k-pixel subsampling stability", criterion_3),
        ("argmax preservation", criterion_4),
        ("temperature recovery", criterion_5),
        ("one cluster equals global TS", criterion_6),
        ("cluster TS beats global TS on a mixed set", criterion_7),
        ("LTS out of domain + gradient check", criterion_8),
        ("per-subset vs union ECE counterexample", criterion_9),
        ("rank-metric invariances", criterion_10),
        ("PRR boundary behaviour", criterion_11),
        ("determinism", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
