use serde::{Deserialize, Serialize};

use relikit_core::{Error, Result};

/// Default number of confidence bins for both ECE variants.
pub const DEFAULT_BINS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinStrategy {
    /// `m` equal intervals of `[0, 1]`, the last one closed at 1.
    #[default]
    EqualWidth,
    /// `m` bins of `⌊n/m⌋` or `⌈n/m⌉` records after sorting by confidence.
    EqualPopulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub count: usize,
    pub mean_confidence: f64,
    pub accuracy: f64,
    pub lower_edge: f64,
    pub upper_edge: f64,
}

impl BinStats {
    /// `acc − conf`, zero for an empty bin.
    pub fn residual(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.accuracy - self.mean_confidence
        }
    }
}

/// A binning of confidences with per-bin count, mean confidence and accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinPartition {
    pub strategy: BinStrategy,
    pub bins: Vec<BinStats>,
    /// Number of records that landed in some bin.
    pub total: usize,
}

/// Equal-width bin of a confidence in `[0, 1]`: the `i` with
/// `i/m <= c < (i+1)/m`, where the edges are the rounded `f64` quotients.
pub fn equal_width_bin(confidence: f64, bins: usize) -> usize {
    let m = bins as f64;
    let mut i = ((confidence * m) as usize).min(bins - 1);
    // `c * m` can round across an edge; settle against the edges themselves.
    if i > 0 && confidence < i as f64 / m {
        i -= 1;
    } else if i + 1 < bins && confidence >= (i + 1) as f64 / m {
        i += 1;
    }
    i
}

impl BinPartition {
    /// Bins `confidences` (with matching `correct` flags). Confidences
    /// outside `[0, 1]` are left out of every bin.
    pub fn build(
        confidences: &[f64],
        correct: &[bool],
        bins: usize,
        strategy: BinStrategy,
    ) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidArgument(
                "bin count must be at least 1".into(),
            ));
        }
        if confidences.len() != correct.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} confidences vs {} outcomes",
                confidences.len(),
                correct.len()
            )));
        }
        let inside: Vec<usize> = (0..confidences.len())
            .filter(|&i| (0.0..=1.0).contains(&confidences[i]))
            .collect();
        if inside.is_empty() {
            return Err(Error::Empty("no records with confidence in [0, 1]".into()));
        }
        let mut sums = vec![(0usize, 0.0f64, 0usize); bins];
        let mut edges: Vec<(f64, f64)>;
        match strategy {
            BinStrategy::EqualWidth => {
                for &i in &inside {
                    let s = &mut sums[equal_width_bin(confidences[i], bins)];
                    s.0 += 1;
                    s.1 += confidences[i];
                    s.2 += usize::from(correct[i]);
                }
                edges = (0..bins)
                    .map(|b| (b as f64 / bins as f64, (b + 1) as f64 / bins as f64))
                    .collect();
            }
            BinStrategy::EqualPopulation => {
                let mut order = inside;
                order.sort_by(|&a, &b| confidences[a].total_cmp(&confidences[b]));
                let n = order.len();
                let (base, extra) = (n / bins, n % bins);
                edges = Vec::with_capacity(bins);
                let mut start = 0;
                for (b, s) in sums.iter_mut().enumerate() {
                    let size = base + usize::from(b < extra);
                    let members = &order[start..start + size];
                    for &i in members {
                        s.0 += 1;
                        s.1 += confidences[i];
                        s.2 += usize::from(correct[i]);
                    }
                    let prev = edges.last().map_or(0.0, |e: &(f64, f64)| e.1);
                    edges.push(match (members.first(), members.last()) {
                        (Some(&lo), Some(&hi)) => (confidences[lo], confidences[hi]),
                        _ => (prev, prev),
                    });
                    start += size;
                }
            }
        }
        let total = sums.iter().map(|s| s.0).sum();
        let bins = sums
            .into_iter()
            .zip(edges)
            .map(|((count, conf, hits), (lower_edge, upper_edge))| BinStats {
                count,
                mean_confidence: if count == 0 { 0.0 } else { conf / count as f64 },
                accuracy: if count == 0 {
                    0.0
                } else {
                    hits as f64 / count as f64
                },
                lower_edge,
                upper_edge,
            })
            .collect();
        Ok(Self {
            strategy,
            bins,
            total,
        })
    }

    /// `Σ_i (#B_i / n) · |acc(B_i) − conf(B_i)|`.
    pub fn calibration_error(&self) -> f64 {
        let n = self.total as f64;
        self.bins
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| b.count as f64 / n * (b.accuracy - b.mean_confidence).abs())
            .sum()
    }
}
