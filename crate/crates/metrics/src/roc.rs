//! Rank-based AUROC and its image- and pixel-level OOD detection uses.

use relikit_core::{ConfidenceMap, Error, LabelMap, Result};

/// Pair counts behind a Mann–Whitney AUROC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub wins: u128,
    pub ties: u128,
    pub pairs: u128,
}

impl PairCounts {
    pub fn auroc(&self) -> f64 {
        (2 * self.wins + self.ties) as f64 / (2 * self.pairs) as f64
    }
}

/// Counts (positive > negative) and tied pairs in `O(n log n)`.
pub fn pair_counts(positive: &[f64], negative: &[f64]) -> Result<PairCounts> {
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::Empty(
            "AUROC needs both positive and negative scores".into(),
        ));
    }
    if positive.iter().chain(negative).any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let mut all: Vec<(f64, bool)> = positive
        .iter()
        .map(|&s| (s, true))
        .chain(negative.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut wins, mut ties, mut neg_below) = (0u128, 0u128, 0u128);
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        let (mut pos_here, mut neg_here) = (0u128, 0u128);
        // -0.0 and 0.0 compare equal, so group with `==` rather than total order.
        while j < all.len() && all[j].0 == all[i].0 {
            if all[j].1 {
                pos_here += 1;
            } else {
                neg_here += 1;
            }
            j += 1;
        }
        wins += pos_here * neg_below;
        ties += pos_here * neg_here;
        neg_below += neg_here;
        i = j;
    }
    Ok(PairCounts {
        wins,
        ties,
        pairs: positive.len() as u128 * negative.len() as u128,
    })
}

/// Probability that a positive outscores a negative, half credit for ties.
pub fn auroc(positive: &[f64], negative: &[f64]) -> Result<f64> {
    pair_counts(positive, negative).map(|c| c.auroc())
}

/// Mean confidence over an image's labeled pixels (all pixels when no
/// labels are given). `None` if nothing is left.
pub fn image_mean_confidence(
    map: &ConfidenceMap,
    labels: Option<&LabelMap>,
    ignore: u16,
) -> Option<f64> {
    let (sum, count) = match labels {
        Some(l) => map
            .confidence
            .iter()
            .zip(l.data())
            .filter(|(_, &lab)| lab != ignore)
            .fold((0.0, 0usize), |(s, n), (c, _)| (s + c, n + 1)),
        None => (map.confidence.iter().sum(), map.confidence.len()),
    };
    (count > 0).then(|| sum / count as f64)
}

/// Image-level OOD detection from per-image mean confidences; in-domain
/// images are the positive (confident) class.
pub fn ood_image_auroc(in_domain: &[f64], out_of_domain: &[f64]) -> Result<f64> {
    auroc(in_domain, out_of_domain)
}

/// Pixel-level OOD detection: known-class pixels (mask `false`) are the
/// positive class, unknown-class pixels the negative one.
pub fn pixel_ood_auroc(maps: &[(&ConfidenceMap, &[bool])]) -> Result<f64> {
    let mut known = Vec::new();
    let mut unknown = Vec::new();
    for (map, mask) in maps {
        if map.confidence.len() != mask.len() {
            return Err(Error::ShapeMismatch(
                "OOD mask does not match confidence map".into(),
            ));
        }
        for (&c, &is_ood) in map.confidence.iter().zip(mask.iter()) {
            if is_ood {
                unknown.push(c);
            } else {
                known.push(c);
            }
        }
    }
    if known.is_empty() || unknown.is_empty() {
        return Err(Error::Empty(
            "pixel OOD mask must mark at least one known and one unknown pixel".into(),
        ));
    }
    auroc(&known, &unknown)
}
