//! Lloyd's k-means with k-means++ seeding.
//!
//! Runs are fully deterministic for a given seed: initialisation draws from a
//! ChaCha8 stream, assignment ties go to the lowest centroid index, and all
//! arithmetic is sequential.

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    #[default]
    Euclidean,
    /// Spherical k-means: inputs are L2-normalised, then clustered with
    /// squared Euclidean distance (monotone in cosine distance).
    Cosine,
}

impl std::str::FromStr for Distance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(Distance::Euclidean),
            "cosine" => Ok(Distance::Cosine),
            other => Err(format!(
                "unknown distance {other:?} (expected euclidean or cosine)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iter: usize,
    /// Convergence threshold on the largest centroid shift, relative to the
    /// largest centroid norm (at least 1).
    pub tol: f64,
    pub seed: u64,
    pub distance: Distance,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansParams {
            k,
            max_iter: 100,
            tol: 1e-6,
            seed,
            distance: Distance::Euclidean,
        }
    }

    pub fn with_distance(mut self, distance: Distance) -> Self {
        self.distance = distance;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to assigned centroids.
    pub objective: f64,
    /// Objective after seeding, then after every Lloyd iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansResult {
    fn empty() -> Self {
        KMeansResult {
            assignments: Vec::new(),
            centroids: Vec::new(),
            objective: 0.0,
            history: Vec::new(),
            iterations: 0,
        }
    }

    /// Member indices of each cluster, in centroid order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.centroids.len()];
        for (i, &c) in self.assignments.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_init<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // every remaining point coincides with a centroid
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centroids.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[pick]));
        }
    }
    centroids
}

/// Clusters `points` into `params.k` groups.
///
/// `k` is clamped to `[1, points.len()]`; an empty input gives an empty
/// result. All points must share one dimension.
pub fn kmeans(points: &[Vec<f64>], params: &KMeansParams) -> KMeansResult {
    let n = points.len();
    if n == 0 {
        return KMeansResult::empty();
    }
    let dim = points[0].len();
    assert!(
        points.iter().all(|p| p.len() == dim),
        "points must share a dimension"
    );
    let mut k = params.k.max(1);
    if k > n {
        warn!("k-means: k = {k} exceeds {n} points, clamping");
        k = n;
    }
    let normalized;
    let points: &[Vec<f64>] = match params.distance {
        Distance::Euclidean => points,
        Distance::Cosine => {
            normalized = points
                .iter()
                .map(|p| {
                    let l = norm(p);
                    if l > 0.0 {
                        p.iter().map(|x| x / l).collect()
                    } else {
                        p.clone()
                    }
                })
                .collect::<Vec<Vec<f64>>>();
            &normalized
        }
    };

    let mut rng = seed::rng(params.seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignments = vec![0usize; n];
    let mut dists = vec![0.0; n];
    let assign = |centroids: &[Vec<f64>], assignments: &mut [usize], dists: &mut [f64]| {
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, centroids);
            assignments[i] = j;
            dists[i] = d;
        }
        dists.iter().sum::<f64>()
    };
    let mut objective = assign(&centroids, &mut assignments, &mut dists);
    let mut history = vec![objective];
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            counts[c] += 1;
            sums[c].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        let mut updated: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &cnt), old)| {
                if cnt == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|x| x / cnt as f64).collect()
                }
            })
            .collect();
        // Re-seed empty clusters at the point farthest from its centroid,
        // taken from a cluster that can spare it.
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| counts[assignments[i]] > 1 && dists[i] > 0.0)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
            if let Some(i) = donor {
                counts[assignments[i]] -= 1;
                counts[j] = 1;
                assignments[i] = j;
                dists[i] = 0.0;
                updated[j] = points[i].clone();
            }
        }
        let scale = centroids.iter().map(|c| norm(c)).fold(1.0, f64::max);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        objective = assign(&centroids, &mut assignments, &mut dists);
        history.push(objective);
        if shift <= params.tol * scale {
            break;
        }
    }

    KMeansResult {
        assignments,
        centroids,
        objective,
        history,
        iterations,
    }
}
