//! Brute-force reference implementations of every record-level metric.
//! Deliberately naive: explicit edge comparisons, full pair enumeration and
//! per-prefix re-summation. Shared with the workspace acceptance suite.

#![allow(dead_code)]

/// Equal-width ECE by testing each record against every bin's edges.
pub fn ece_equal_width(conf: &[f64], correct: &[bool], m: usize) -> f64 {
    let n = conf.len() as f64;
    let mut total = 0.0;
    for b in 0..m {
        let lo = b as f64 / m as f64;
        let hi = (b + 1) as f64 / m as f64;
        let members: Vec<usize> = (0..conf.len())
            .filter(|&i| conf[i] >= lo && (conf[i] < hi || (b == m - 1 && conf[i] <= 1.0)))
            .collect();
        if members.is_empty() {
            continue;
        }
        let count = members.len() as f64;
        let mean_conf = members.iter().map(|&i| conf[i]).sum::<f64>() / count;
        let acc = members.iter().filter(|&&i| correct[i]).count() as f64 / count;
        total += count / n * (acc - mean_conf).abs();
    }
    total
}

/// Equal-population ECE: sort, then hand out `⌈n/m⌉` records to the first
/// `n mod m` bins and `⌊n/m⌋` to the rest.
pub fn ece_equal_population(conf: &[f64], correct: &[bool], m: usize) -> f64 {
    let mut idx: Vec<usize> = (0..conf.len()).collect();
    idx.sort_by(|&a, &b| conf[a].partial_cmp(&conf[b]).unwrap());
    let n = conf.len();
    let mut bounds = vec![0usize];
    for b in 0..m {
        let size = n / m + if b < n % m { 1 } else { 0 };
        bounds.push(bounds[b] + size);
    }
    let mut total = 0.0;
    for b in 0..m {
        let members = &idx[bounds[b]..bounds[b + 1]];
        if members.is_empty() {
            continue;
        }
        let count = members.len() as f64;
        let mean_conf = members.iter().map(|&i| conf[i]).sum::<f64>() / count;
        let acc = members.iter().filter(|&&i| correct[i]).count() as f64 / count;
        total += count / n as f64 * (acc - mean_conf).abs();
    }
    total
}

/// KS error by re-summing every prefix from scratch.
pub fn ks_error(conf: &[f64], correct: &[bool]) -> f64 {
    let mut idx: Vec<usize> = (0..conf.len()).collect();
    idx.sort_by(|&a, &b| conf[a].partial_cmp(&conf[b]).unwrap());
    let n = conf.len() as f64;
    let mut worst = 0.0f64;
    for k in 1..=idx.len() {
        let c: f64 = idx[..k].iter().map(|&i| conf[i]).sum();
        let a: f64 = idx[..k].iter().filter(|&&i| correct[i]).count() as f64;
        worst = worst.max((c - a).abs() / n);
    }
    worst
}

/// AUROC by comparing every positive with every negative.
pub fn auroc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut credit = 0.0;
    for &p in pos {
        for &q in neg {
            if p > q {
                credit += 1.0;
            } else if p == q {
                credit += 0.5;
            }
        }
    }
    credit / (pos.len() as f64 * neg.len() as f64)
}

/// PRR from an explicit rejection curve: for each rejected count `k`, count
/// the errors among the retained records by scanning them, then integrate
/// the model, oracle and random curves with the trapezoid rule. Curves are
/// kept as integer error counts so every area is exact in `f64`; the common
/// `1/n²` scale cancels in the ratio.
pub fn prr(conf: &[f64], correct: &[bool]) -> f64 {
    let mut idx: Vec<usize> = (0..conf.len()).collect();
    idx.sort_by(|&a, &b| conf[a].partial_cmp(&conf[b]).unwrap());
    let n = conf.len();
    let errors = correct.iter().filter(|c| !**c).count();
    let model: Vec<f64> = (0..=n)
        .map(|k| idx[k..].iter().filter(|&&i| !correct[i]).count() as f64)
        .collect();
    let oracle: Vec<f64> = (0..=n).map(|k| errors.saturating_sub(k) as f64).collect();
    let doubled_area = |curve: &[f64]| -> f64 { curve.windows(2).map(|w| w[0] + w[1]).sum() };
    let random = (errors * n) as f64;
    100.0 * (random - doubled_area(&model)) / (random - doubled_area(&oracle))
}
