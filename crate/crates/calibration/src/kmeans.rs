//! Lloyd's k-means with k-means++ seeding over image feature vectors.

use rand::Rng;

use relikit_core::rng;
use relikit_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iterations: usize,
    /// Stop once the relative objective decrease falls below this.
    pub tolerance: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iterations: 100,
            tolerance: 1e-6,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after every assignment step.
    pub objective_history: Vec<f64>,
}

impl KMeans {
    pub fn objective(&self) -> f64 {
        *self.objective_history.last().unwrap()
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest centroid; ties go to the lowest index.
pub fn nearest(centroids: &[Vec<f64>], point: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(c, point);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed, "kmeans++");
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = d2.iter().rposition(|&d| d > 0.0).unwrap();
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            // every point coincides with a centroid already
            rng.gen_range(0..points.len())
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let assignments: Vec<usize> = points.iter().map(|p| nearest(centroids, p)).collect();
    let objective = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| squared_distance(p, &centroids[a]))
        .sum();
    (assignments, objective)
}

/// Clusters `points` into `config.k` groups. Final assignments always map each
/// point to its nearest final centroid. A cluster that loses all points keeps
/// its previous centroid.
pub fn kmeans(points: &[Vec<f64>], config: &KMeansConfig) -> Result<KMeans> {
    let k = config.k;
    if k == 0 || k > points.len() {
        return Err(Error::InvalidArgument(format!(
            "cluster count {k} must be in 1..={}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::ShapeMismatch(
            "feature vectors differ in length".into(),
        ));
    }
    let mut centroids = plus_plus_init(points, k, config.seed);
    let (mut assignments, mut objective) = assign(points, &centroids);
    let mut history = vec![objective];
    for _ in 0..config.max_iterations {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for ((c, s), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
            if n > 0 {
                *c = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
        let (next, next_objective) = assign(points, &centroids);
        assignments = next;
        history.push(next_objective);
        let converged =
            objective == 0.0 || (objective - next_objective) <= config.tolerance * objective;
        objective = next_objective;
        if converged {
            break;
        }
    }
    Ok(KMeans {
        centroids,
        assignments,
        objective_history: history,
    })
}
