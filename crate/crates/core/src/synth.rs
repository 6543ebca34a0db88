//! Synthetic drifting families with known drift points.
//!
//! Batch `b` draws from an isotropic Gaussian mixture whose centers are the
//! base centers translated by every drift event active at `b`. A sudden
//! event applies its whole shift at its batch; a gradual one ramps it in
//! linearly over `ramp_batches` batches. An optional background random walk
//! moves all centers together by a small Gaussian step per batch.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureVector};
use crate::{Error, Result};

/// 2008-02-29T00:00:00Z
pub const DEFAULT_START_TIMESTAMP: i64 = 1_204_243_200;
pub const DEFAULT_INTERVAL_SECS: i64 = 3600;
const WALK_SALT: u64 = 0x005e_ed0f_da7a_3a1c;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    Sudden,
    Gradual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEvent {
    /// First (1-based) batch affected by the event.
    pub batch_index: usize,
    pub shift: Vec<f64>,
    pub mode: DriftMode,
    /// Batches over which the shift ramps in; 1 for sudden events.
    pub ramp_batches: usize,
}

impl DriftEvent {
    pub fn sudden(batch_index: usize, shift: Vec<f64>) -> Self {
        DriftEvent {
            batch_index,
            shift,
            mode: DriftMode::Sudden,
            ramp_batches: 1,
        }
    }

    pub fn gradual(batch_index: usize, shift: Vec<f64>, ramp_batches: usize) -> Self {
        DriftEvent {
            batch_index,
            shift,
            mode: DriftMode::Gradual,
            ramp_batches,
        }
    }

    /// Fraction of the shift in effect at `batch`.
    pub fn progress(&self, batch: usize) -> f64 {
        if batch < self.batch_index {
            0.0
        } else {
            ((batch - self.batch_index + 1) as f64 / self.ramp_batches as f64).min(1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSchedule {
    pub n_batches: usize,
    pub batch_size: usize,
    pub dim: usize,
    /// Mixture component centers before any drift; components are equally
    /// likely.
    pub base_centers: Vec<Vec<f64>>,
    pub drift_events: Vec<DriftEvent>,
    pub noise_sigma: f64,
    /// Per-coordinate standard deviation of the batch-to-batch random walk
    /// of the centers; 0 disables it.
    #[serde(default)]
    pub walk_sigma: f64,
    pub seed: u64,
    /// Raw values are clipped to this range, then scaled linearly onto
    /// `[0, 1]`.
    pub value_range: (f64, f64),
    pub start_timestamp: i64,
    pub interval_secs: i64,
}

impl DriftSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_batches == 0 {
            return bad("schedule needs at least one batch".into());
        }
        if self.batch_size == 0 || !self.batch_size.is_multiple_of(2) {
            return bad(format!(
                "batch size must be a positive even number, got {}",
                self.batch_size
            ));
        }
        if self.dim == 0 {
            return bad("dimension must be positive".into());
        }
        if self.base_centers.is_empty() {
            return bad("schedule needs at least one base center".into());
        }
        if let Some(c) = self.base_centers.iter().find(|c| c.len() != self.dim) {
            return bad(format!(
                "base center has {} coordinates, expected {}",
                c.len(),
                self.dim
            ));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma must be positive, got {}", self.noise_sigma));
        }
        if !(self.walk_sigma >= 0.0 && self.walk_sigma.is_finite()) {
            return bad(format!("walk sigma must be non-negative, got {}", self.walk_sigma));
        }
        let (lo, hi) = self.value_range;
        if !(lo < hi) {
            return bad(format!("value range ({lo}, {hi}) is empty"));
        }
        if self.interval_secs <= 0 {
            return bad("interval between samples must be positive".into());
        }
        let mut previous = 1;
        for e in &self.drift_events {
            if e.batch_index <= previous || e.batch_index > self.n_batches {
                return bad(format!(
                    "drift event batch indices must be strictly increasing within (1, {}], got {}",
                    self.n_batches, e.batch_index
                ));
            }
            previous = e.batch_index;
            if e.shift.len() != self.dim {
                return bad(format!(
                    "drift shift has {} coordinates, expected {}",
                    e.shift.len(),
                    self.dim
                ));
            }
            match (e.mode, e.ramp_batches) {
                (_, 0) => return bad("ramp_batches must be at least 1".into()),
                (DriftMode::Sudden, r) if r != 1 => {
                    return bad(format!("sudden events ramp over 1 batch, got {r}"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Cumulative random-walk offset per batch; entry `b - 1` is batch `b`,
    /// and batch 1 has no offset.
    pub fn walk_offsets(&self) -> Vec<Vec<f64>> {
        let mut offsets = vec![vec![0.0; self.dim]; self.n_batches];
        if self.walk_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ WALK_SALT);
            let step = Normal::new(0.0, self.walk_sigma).expect("validated sigma");
            for b in 1..self.n_batches {
                let (done, rest) = offsets.split_at_mut(b);
                for (o, p) in rest[0].iter_mut().zip(&done[b - 1]) {
                    *o = p + step.sample(&mut rng);
                }
            }
        }
        offsets
    }

    /// Mixture centers in effect at (1-based) `batch`.
    pub fn centers_at(&self, batch: usize) -> Vec<Vec<f64>> {
        let walk = self.walk_offsets();
        self.centers_with(batch, &walk)
    }

    fn centers_with(&self, batch: usize, walk: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut offset = walk
            .get(batch.wrapping_sub(1))
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.dim]);
        for e in &self.drift_events {
            let f = e.progress(batch);
            for (o, s) in offset.iter_mut().zip(&e.shift) {
                *o += f * s;
            }
        }
        self.base_centers
            .iter()
            .map(|c| c.iter().zip(&offset).map(|(a, b)| a + b).collect())
            .collect()
    }
}

/// A vector of Euclidean length `magnitude` in a seeded random direction.
pub fn random_shift(dim: usize, magnitude: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x * magnitude / norm).collect();
        }
    }
}

/// Draws `n_batches * batch_size` samples following the schedule.
pub fn generate_family(schedule: &DriftSchedule, family_name: &str) -> Result<Dataset> {
    schedule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let noise = Normal::new(0.0, schedule.noise_sigma).expect("validated sigma");
    let (lo, hi) = schedule.value_range;
    let components = schedule.base_centers.len();
    let walk = schedule.walk_offsets();
    let mut samples = Vec::with_capacity(schedule.n_batches * schedule.batch_size);
    for batch in 1..=schedule.n_batches {
        let centers = schedule.centers_with(batch, &walk);
        for _ in 0..schedule.batch_size {
            let n = samples.len();
            let center = &centers[rng.random_range(0..components)];
            let values = center
                .iter()
                .map(|&c| {
                    let raw = (c + noise.sample(&mut rng)).clamp(lo, hi);
                    (raw - lo) / (hi - lo)
                })
                .collect();
            samples.push(FeatureVector {
                sample_id: format!("{family_name}-{n:06}"),
                timestamp: schedule.start_timestamp + n as i64 * schedule.interval_secs,
                values,
                family: family_name.to_string(),
            });
        }
    }
    let names = (0..schedule.dim).map(|j| format!("f{j:03}")).collect();
    Dataset::new(family_name, names, samples)
}

/// Pair indices whose window `{B_i, B_{i+1}}` spans a change in the active
/// centers.
pub fn ground_truth_drift(schedule: &DriftSchedule) -> BTreeSet<usize> {
    let last_pair = schedule.n_batches.saturating_sub(1);
    schedule
        .drift_events
        .iter()
        .flat_map(|e| {
            let first = e.batch_index - 1;
            let last = e.batch_index + e.ramp_batches.max(1) - 2;
            first..=last.min(last_pair)
        })
        .filter(|&i| i >= 1)
        .collect()
}

/// Parameters of a two-family benchmark: a target family whose two-component
/// mixture jumps back and forth along a direction `v` orthogonal to its
/// mixture axis, and a stationary other family with the same shape sitting
/// `other_offset` noise units along the first jump's direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkParams {
    pub dim: usize,
    pub n_batches: usize,
    pub batch_size: usize,
    pub event_batches: Vec<usize>,
    /// Jump length, in noise standard deviations.
    pub shift: f64,
    /// Distance between the two mixture components, in noise units.
    pub separation: f64,
    pub other_offset: f64,
    pub other_batches: usize,
    pub walk_sigma: f64,
    pub value_range: (f64, f64),
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        BenchmarkParams {
            dim: 8,
            n_batches: 40,
            batch_size: 50,
            event_batches: vec![10, 20, 30],
            shift: 5.0,
            separation: 10.0,
            other_offset: 8.0,
            other_batches: 4,
            walk_sigma: 0.15,
            value_range: (-30.0, 30.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPair {
    pub target: DriftSchedule,
    pub other: DriftSchedule,
}

const AXIS_SALT: u64 = 0x0a11_ce5a_17e5;
const JUMP_SALT: u64 = 0x00de_fec7_ed00;
const OTHER_SALT: u64 = 0x07e4_fa41_1e55;

/// Builds the benchmark schedules for `seed`. Noise sigma is 1, so all
/// lengths in `params` are in noise units.
pub fn benchmark_pair(params: &BenchmarkParams, seed: u64) -> Result<BenchmarkPair> {
    if params.dim < 2 {
        return Err(Error::Config("benchmark families need at least 2 dimensions".into()));
    }
    let axis = random_shift(params.dim, params.separation / 2.0, seed ^ AXIS_SALT);
    let jump = orthogonal_unit(&axis, seed ^ JUMP_SALT);
    let base_centers = vec![axis.clone(), axis.iter().map(|x| -x).collect()];
    let drift_events = params
        .event_batches
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            DriftEvent::sudden(b, jump.iter().map(|x| sign * params.shift * x).collect())
        })
        .collect();
    let target = DriftSchedule {
        n_batches: params.n_batches,
        batch_size: params.batch_size,
        dim: params.dim,
        base_centers: base_centers.clone(),
        drift_events,
        noise_sigma: 1.0,
        walk_sigma: params.walk_sigma,
        seed,
        value_range: params.value_range,
        start_timestamp: DEFAULT_START_TIMESTAMP,
        interval_secs: DEFAULT_INTERVAL_SECS,
    };
    let other = DriftSchedule {
        n_batches: params.other_batches,
        base_centers: base_centers
            .iter()
            .map(|c| c.iter().zip(&jump).map(|(a, v)| a + params.other_offset * v).collect())
            .collect(),
        drift_events: Vec::new(),
        walk_sigma: 0.0,
        seed: seed ^ OTHER_SALT,
        ..target.clone()
    };
    target.validate()?;
    other.validate()?;
    Ok(BenchmarkPair { target, other })
}

/// A seeded unit vector orthogonal to `axis`.
fn orthogonal_unit(axis: &[f64], seed: u64) -> Vec<f64> {
    let aa: f64 = axis.iter().map(|x| x * x).sum();
    let mut salt = seed;
    loop {
        let v = random_shift(axis.len(), 1.0, salt);
        let p = if aa > 0.0 {
            axis.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / aa
        } else {
            0.0
        };
        let w: Vec<f64> = v.iter().zip(axis).map(|(x, a)| x - p * a).collect();
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return w.into_iter().map(|x| x / n).collect();
        }
        salt = salt.wrapping_add(1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule(centers: Vec<Vec<f64>>, events: Vec<DriftEvent>) -> DriftSchedule {
        let dim = centers[0].len();
        DriftSchedule {
            n_batches: 40,
            batch_size: 50,
            dim,
            base_centers: centers,
            drift_events: events,
            noise_sigma: 1.0,
            walk_sigma: 0.0,
            seed: 5,
            value_range: (-50.0, 50.0),
            start_timestamp: DEFAULT_START_TIMESTAMP,
            interval_secs: DEFAULT_INTERVAL_SECS,
        }
    }

    fn batch_mean(ds: &Dataset, batch: usize, bs: usize) -> Vec<f64> {
        let rows = &ds.samples[(batch - 1) * bs..batch * bs];
        let dim = ds.dim;
        (0..dim)
            .map(|j| rows.iter().map(|r| r.values[j]).sum::<f64>() / bs as f64)
            .collect()
    }

    #[test]
    fn null_schedule_has_stable_means() {
        let s = schedule(vec![vec![0.0; 4]], vec![]);
        let ds = generate_family(&s, "null").unwrap();
        assert_eq!(ds.len(), 2000);
        let sigma_scaled = 1.0 / 100.0;
        let bound = 3.0 * sigma_scaled / ((50 * 4) as f64).sqrt();
        let m1 = batch_mean(&ds, 1, 50);
        let mn = batch_mean(&ds, 40, 50);
        let g1 = m1.iter().sum::<f64>() / 4.0;
        let gn = mn.iter().sum::<f64>() / 4.0;
        assert!((g1 - gn).abs() < bound, "{g1} vs {gn}, bound {bound}");
    }

    #[test]
    fn sudden_shift_moves_batch_means() {
        let shift = random_shift(4, 5.0, 1);
        let s = schedule(vec![vec![0.0; 4]], vec![DriftEvent::sudden(20, shift.clone())]);
        let ds = generate_family(&s, "drift").unwrap();
        // Pool 19 batches either side for a tight mean estimate.
        let before = mean_of_range(&ds, 0, 19 * 50);
        let after = mean_of_range(&ds, 19 * 50, 40 * 50);
        let moved: Vec<f64> = before.iter().zip(&after).map(|(a, b)| (b - a) * 100.0).collect();
        let magnitude = moved.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((magnitude - 5.0).abs() < 0.3, "{magnitude}");
        for (m, s) in moved.iter().zip(&shift) {
            assert!((m - s).abs() < 0.3);
        }
    }

    fn mean_of_range(ds: &Dataset, a: usize, b: usize) -> Vec<f64> {
        (0..ds.dim)
            .map(|j| ds.samples[a..b].iter().map(|r| r.values[j]).sum::<f64>() / (b - a) as f64)
            .collect()
    }

    #[test]
    fn generation_is_deterministic() {
        let s = schedule(vec![vec![0.0; 3], vec![4.0; 3]], vec![DriftEvent::sudden(10, vec![1.0; 3])]);
        let a = generate_family(&s, "x").unwrap();
        let b = generate_family(&s, "x").unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.samples.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
        assert!(a.samples.iter().all(|s| s.values.iter().all(|v| (0.0..=1.0).contains(v))));
    }

    #[test]
    fn truth_for_sudden_and_gradual() {
        let s = schedule(vec![vec![0.0]], vec![DriftEvent::sudden(20, vec![1.0])]);
        assert_eq!(ground_truth_drift(&s), BTreeSet::from([19]));
        let s = schedule(vec![vec![0.0]], vec![]);
        assert!(ground_truth_drift(&s).is_empty());

        let s = schedule(vec![vec![0.0]], vec![DriftEvent::gradual(10, vec![1.0], 5)]);
        let truth = ground_truth_drift(&s);
        assert_eq!(truth, (9..14).collect());
        // Independent check: pairs whose two batches have different centers.
        let changed: BTreeSet<usize> = (1..s.n_batches)
            .filter(|&i| s.centers_at(i) != s.centers_at(i + 1))
            .collect();
        assert_eq!(truth, changed);
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        let mut s = schedule(vec![vec![0.0]], vec![DriftEvent::sudden(1, vec![1.0])]);
        assert!(s.validate().is_err());
        s.drift_events = vec![DriftEvent::sudden(10, vec![1.0]), DriftEvent::sudden(10, vec![1.0])];
        assert!(s.validate().is_err());
        s.drift_events = vec![DriftEvent::sudden(41, vec![1.0])];
        assert!(s.validate().is_err());
        s.drift_events = vec![DriftEvent::gradual(5, vec![1.0], 0)];
        assert!(s.validate().is_err());
        s.drift_events = vec![DriftEvent { ramp_batches: 3, ..DriftEvent::sudden(5, vec![1.0]) }];
        assert!(s.validate().is_err());
        s.drift_events = vec![DriftEvent::sudden(5, vec![1.0, 2.0])];
        assert!(s.validate().is_err());
    }

    #[test]
    fn walk_starts_at_zero_and_is_seeded() {
        let mut s = schedule(vec![vec![0.0; 3]], vec![]);
        assert!(s.walk_offsets().iter().all(|o| o.iter().all(|&x| x == 0.0)));
        s.walk_sigma = 0.5;
        let w = s.walk_offsets();
        assert_eq!(w.len(), 40);
        assert!(w[0].iter().all(|&x| x == 0.0));
        assert_ne!(w[1], w[0]);
        assert_eq!(w, s.walk_offsets());
        assert_eq!(s.centers_at(7)[0], w[6]);
        s.walk_sigma = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn benchmark_geometry() {
        let p = BenchmarkParams::default();
        let pair = benchmark_pair(&p, 3).unwrap();
        let t = &pair.target;
        let axis: Vec<f64> = t.base_centers[0].iter().zip(&t.base_centers[1]).map(|(a, b)| a - b).collect();
        let axis_len = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((axis_len - p.separation).abs() < 1e-9);
        let signs: Vec<f64> = t.drift_events.iter().map(|e| e.shift[0].signum()).collect();
        assert_eq!(signs, vec![signs[0], -signs[0], signs[0]]);
        for e in &t.drift_events {
            let n = e.shift.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - p.shift).abs() < 1e-9);
            let dot: f64 = e.shift.iter().zip(&axis).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-9);
        }
        // The first jump lands the target between its start and the other family.
        let first = &t.drift_events[0].shift;
        let gap: Vec<f64> = pair.other.base_centers[0].iter().zip(&t.base_centers[0]).map(|(o, x)| o - x).collect();
        let along: f64 = gap.iter().zip(first).map(|(g, f)| g * f).sum::<f64>() / p.shift;
        assert!((along - p.other_offset).abs() < 1e-9);
        assert_eq!(ground_truth_drift(t), BTreeSet::from([9, 19, 29]));
        assert!(benchmark_pair(&BenchmarkParams { dim: 1, ..p }, 0).is_err());
    }

    #[test]
    fn random_shift_has_requested_length() {
        let v = random_shift(7, 5.0, 3);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 5.0).abs() < 1e-12);
        assert_eq!(v, random_shift(7, 5.0, 3));
    }
}
