//! Lloyd's K-Means and MiniBatch K-Means.
//!
//! Both use Euclidean distance. The reported `distortion` is the sum of
//! point-to-centroid distances (not squared), while centroid updates use the
//! cluster mean. Cluster indices are 0-based.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{euclidean, mean_vector, squared_euclidean};
use crate::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MINIBATCH_SIZE: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index in `0..k` for every input point.
    pub assignments: Vec<usize>,
    pub distortion: f64,
    pub iterations: usize,
    /// False when the run stopped at `max_iter`.
    pub converged: bool,
    pub seed: u64,
}

/// Per-iteration objective values recorded by [`kmeans_traced`]. Entry `t`
/// is measured right after the assignment step of iteration `t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KMeansTrace {
    /// Sum of Euclidean distances.
    pub distortion: Vec<f64>,
    /// Sum of squared Euclidean distances, the objective Lloyd's iteration
    /// descends.
    pub inertia: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize) -> Self {
        KMeansParams {
            k,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

/// Sum over points of the distance to their assigned centroid.
pub fn distortion(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> Result<f64> {
    if points.len() != assignments.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: assignments.len(),
        });
    }
    let mut total = 0.0;
    for (p, &a) in points.iter().zip(assignments) {
        let c = centroids.get(a).ok_or_else(|| {
            Error::InvalidInput(format!(
                "assignment {a} out of range for {} centroids",
                centroids.len()
            ))
        })?;
        if c.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: c.len(),
                got: p.len(),
            });
        }
        total += euclidean(p, c);
    }
    Ok(total)
}

/// Lloyd's algorithm: alternate nearest-centroid assignment and mean update
/// until centroids move less than `tol` and a final reassignment changes
/// nothing, or `max_iter` is reached.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<ClusteringResult> {
    kmeans_traced(points, KMeansParams { k, max_iter, tol }, seed).map(|(r, _)| r)
}

pub fn kmeans_traced(
    points: &[Vec<f64>],
    params: KMeansParams,
    seed: u64,
) -> Result<(ClusteringResult, KMeansTrace)> {
    let dim = validate(points, params.k)?;
    let k = params.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = init_centroids(points, k, &mut rng);
    let mut trace = KMeansTrace::default();

    let mut assignments = assign(points, &centroids);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        iterations += 1;
        record(&mut trace, points, &centroids, &assignments);
        let mut next = cluster_means(points, &assignments, k, dim);
        repair_empty(points, &mut next, &assignments);
        let movement = max_displacement(&centroids, &next);
        centroids = next;
        let reassigned = assign(points, &centroids);
        let stable = reassigned == assignments;
        assignments = reassigned;
        if movement < params.tol && stable {
            converged = true;
            break;
        }
    }
    let distortion = distortion(points, &centroids, &assignments)?;
    Ok((
        ClusteringResult {
            k,
            centroids,
            assignments,
            distortion,
            iterations,
            converged,
            seed,
        },
        trace,
    ))
}

/// MiniBatch K-Means with per-centroid streaming means.
///
/// Each iteration assigns every point to its nearest centroid, draws a
/// uniform minibatch without replacement, and moves each centroid toward its
/// minibatch members with step `1 / count`, where `count` accumulates over
/// the whole run. Stops once the largest centroid displacement drops below
/// `tol`. Final assignments are recomputed over all points.
pub fn minibatch_kmeans(
    points: &[Vec<f64>],
    k: usize,
    minibatch_size: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<ClusteringResult> {
    let dim = validate(points, k)?;
    if minibatch_size == 0 || minibatch_size > points.len() {
        return Err(Error::InvalidInput(format!(
            "minibatch size {minibatch_size} must be in 1..={}",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = init_centroids(points, k, &mut rng);
    let mut counts = vec![0usize; k];

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let assignments = assign(points, &centroids);
        let previous = centroids.clone();
        for c in repair_empty(points, &mut centroids, &assignments) {
            counts[c] = 0;
        }
        for i in index::sample(&mut rng, points.len(), minibatch_size) {
            let c = assignments[i];
            counts[c] += 1;
            let eta = 1.0 / counts[c] as f64;
            for (cj, xj) in centroids[c].iter_mut().zip(&points[i]) {
                *cj += eta * (xj - *cj);
            }
        }
        debug_assert!(centroids.iter().all(|c| c.len() == dim));
        if max_displacement(&previous, &centroids) < tol {
            converged = true;
            break;
        }
    }
    let assignments = assign(points, &centroids);
    let distortion = distortion(points, &centroids, &assignments)?;
    Ok(ClusteringResult {
        k,
        centroids,
        assignments,
        distortion,
        iterations,
        converged,
        seed,
    })
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_euclidean(point, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

pub fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    points.iter().map(|p| nearest_centroid(p, centroids)).collect()
}

/// Mean of each cluster. Empty clusters get a zero vector; callers repair
/// them with [`repair_empty`].
pub fn cluster_means(points: &[Vec<f64>], assignments: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|c| {
            mean_vector(
                dim,
                points
                    .iter()
                    .zip(assignments)
                    .filter(|(_, &a)| a == c)
                    .map(|(p, _)| p.as_slice()),
            )
        })
        .collect()
}

fn validate(points: &[Vec<f64>], k: usize) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::InvalidInput("cannot cluster an empty point set".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if k > points.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} exceeds the number of points ({})",
            points.len()
        )));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.len(),
        });
    }
    Ok(dim)
}

fn init_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    index::sample(rng, points.len(), k)
        .into_iter()
        .map(|i| points[i].clone())
        .collect()
}

/// Moves every centroid that owns no point onto the point farthest from its
/// own centroid. Returns the repaired cluster indices.
fn repair_empty(points: &[Vec<f64>], centroids: &mut [Vec<f64>], assignments: &[usize]) -> Vec<usize> {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    let mut repaired = Vec::new();
    let mut taken = vec![false; points.len()];
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let far = points
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken[*i])
            .map(|(i, p)| (i, squared_euclidean(p, &centroids[assignments[i]])))
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        if let Some((i, d)) = far {
            if d > 0.0 {
                taken[i] = true;
                centroids[c] = points[i].clone();
                repaired.push(c);
            }
        }
    }
    repaired
}

fn max_displacement(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| euclidean(x, y))
        .fold(0.0, f64::max)
}

fn record(trace: &mut KMeansTrace, points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) {
    let (mut d, mut sse) = (0.0, 0.0);
    for (p, &a) in points.iter().zip(assignments) {
        let sq = squared_euclidean(p, &centroids[a]);
        d += sq.sqrt();
        sse += sq;
    }
    trace.distortion.push(d);
    trace.inertia.push(sse);
}
