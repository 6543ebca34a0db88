//! Silhouette coefficients and the silhouette-difference drift detector.
//!
//! Batch pairs are numbered from 1: pair `i` is the union of batches `i` and
//! `i + 1`, and `s[i - 1]` holds its average silhouette. The drift signal
//! `d_i = |s_i - s_{i-1}|` exists for `i >= 2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{minibatch_kmeans, DEFAULT_MAX_ITER, DEFAULT_MINIBATCH_SIZE, DEFAULT_TOL};
use crate::data::TemporalBatch;
use crate::linalg::euclidean;
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.05;
pub const DEFAULT_K: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteSeries {
    /// `s[i - 1]` is the average silhouette of pair `i`.
    pub s: Vec<f64>,
    pub k_used: usize,
    /// Clustering seed used for each pair, aligned with `s`.
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// `d[j]` is `d_{j+2} = |s_{j+2} - s_{j+1}|`.
    pub d: Vec<f64>,
    pub threshold: f64,
    /// Pair indices `i` (1-based, `>= 2`) with `d_i > threshold`, ascending.
    pub drift_indices: Vec<usize>,
}

impl DriftReport {
    /// `(i, d_i)` pairs in order.
    pub fn indexed(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.d.iter().enumerate().map(|(j, &d)| (j + 2, d))
    }
}

/// Cluster sizes, checking that at least two clusters are populated.
fn cluster_sizes(n: usize, assignments: &[usize], k: usize) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "silhouette needs k >= 2, got {k}"
        )));
    }
    if assignments.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: assignments.len(),
        });
    }
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        if a >= k {
            return Err(Error::InvalidInput(format!(
                "assignment {a} out of range for k = {k}"
            )));
        }
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::InvalidInput(
            "silhouette needs at least two non-empty clusters".into(),
        ));
    }
    Ok(sizes)
}

/// `(b - a) / max(a, b)` from per-cluster distance sums of one point.
fn coefficient(own: usize, sums: &[f64], sizes: &[usize]) -> f64 {
    // A singleton's cohesion is defined as 0.
    let a = if sizes[own] > 1 {
        sums[own] / (sizes[own] - 1) as f64
    } else {
        0.0
    };
    let b = sums
        .iter()
        .zip(sizes)
        .enumerate()
        .filter(|&(c, (_, &n))| c != own && n > 0)
        .map(|(_, (&s, &n))| s / n as f64)
        .fold(f64::INFINITY, f64::min);
    let denom = a.max(b);
    if denom == 0.0 {
        0.0
    } else {
        (b - a) / denom
    }
}

/// Silhouette coefficient of one point.
pub fn silhouette_sample(
    point_index: usize,
    points: &[Vec<f64>],
    assignments: &[usize],
    k: usize,
) -> Result<f64> {
    let sizes = cluster_sizes(points.len(), assignments, k)?;
    let x = points.get(point_index).ok_or_else(|| {
        Error::InvalidInput(format!(
            "point index {point_index} out of range for {} points",
            points.len()
        ))
    })?;
    let mut sums = vec![0.0; k];
    for (j, (y, &c)) in points.iter().zip(assignments).enumerate() {
        if j != point_index {
            sums[c] += euclidean(x, y);
        }
    }
    Ok(coefficient(assignments[point_index], &sums, &sizes))
}

/// Per-point silhouette coefficients, sharing one pairwise distance pass.
pub fn silhouette_samples(points: &[Vec<f64>], assignments: &[usize], k: usize) -> Result<Vec<f64>> {
    let n = points.len();
    let sizes = cluster_sizes(n, assignments, k)?;
    // sums[i * k + c] = sum of distances from point i to members of cluster c
    let mut sums = vec![0.0; n * k];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(&points[i], &points[j]);
            sums[i * k + assignments[j]] += d;
            sums[j * k + assignments[i]] += d;
        }
    }
    Ok((0..n)
        .map(|i| coefficient(assignments[i], &sums[i * k..(i + 1) * k], &sizes))
        .collect())
}

/// Mean silhouette coefficient over all points.
pub fn avg_silhouette(points: &[Vec<f64>], assignments: &[usize], k: usize) -> Result<f64> {
    let per = silhouette_samples(points, assignments, k)?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

/// Clusters every consecutive batch pair and records its average
/// silhouette. Pair `i` is clustered with seed `seed_base + i`.
pub fn silhouette_series(
    batches: &[TemporalBatch],
    k: usize,
    minibatch_size: usize,
    seed_base: u64,
) -> Result<SilhouetteSeries> {
    if batches.len() < 2 {
        return Err(Error::Data(format!(
            "need at least 2 batches for a silhouette series, got {}",
            batches.len()
        )));
    }
    let seeds: Vec<u64> = (1..batches.len() as u64).map(|i| seed_base.wrapping_add(i)).collect();
    let s = batches
        .par_windows(2)
        .zip(seeds.par_iter())
        .map(|(pair, &seed)| {
            let points: Vec<Vec<f64>> = pair
                .iter()
                .flat_map(|b| b.samples.iter().map(|s| s.values.clone()))
                .collect();
            let mb = minibatch_size.min(points.len());
            let r = minibatch_kmeans(&points, k, mb, seed, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
            avg_silhouette(&points, &r.assignments, k)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SilhouetteSeries {
        s,
        k_used: k,
        seeds,
    })
}

/// Default-parameter convenience wrapper.
pub fn default_series(batches: &[TemporalBatch], seed_base: u64) -> Result<SilhouetteSeries> {
    silhouette_series(batches, DEFAULT_K, DEFAULT_MINIBATCH_SIZE, seed_base)
}

/// Flags pair indices whose silhouette jumped by strictly more than
/// `threshold` relative to the previous pair.
pub fn detect_drift(series: &SilhouetteSeries, threshold: f64) -> Result<DriftReport> {
    if series.s.len() < 2 {
        return Err(Error::Data(format!(
            "drift detection needs at least 2 silhouette values, got {}",
            series.s.len()
        )));
    }
    let d: Vec<f64> = series.s.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let drift_indices = d
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > threshold)
        .map(|(j, _)| j + 2)
        .collect();
    Ok(DriftReport {
        d,
        threshold,
        drift_indices,
    })
}
