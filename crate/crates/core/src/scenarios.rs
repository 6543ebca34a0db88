//! Static, periodic and drift-aware retraining protocols.
//!
//! Every model is trained on the first half of one target-family batch plus
//! the fixed other-family training draw, and scored on the second half of a
//! batch plus the fixed other-family test draw. A model trained on batch `b`
//! always uses seed `seed_base + b`, so the same model appears bit-for-bit in
//! every scenario that trains on `b`.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    accuracy, grid_search, train, ClassifierKind, HyperGrid, Hyperparams, TrainedModel, TrainingSet,
};
use crate::data::{
    normalize, partition_batches, sample_other_family, BatchReport, Dataset, OtherFamilySplit,
    TemporalBatch,
};
use crate::silhouette::{detect_drift, silhouette_series, DriftReport, SilhouetteSeries};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Static,
    Periodic,
    DriftAware,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Static, Scenario::Periodic, Scenario::DriftAware];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Static => "static",
            Scenario::Periodic => "periodic",
            Scenario::DriftAware => "drift_aware",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClassifierChoice {
    Fixed(Hyperparams),
    /// Searched once on the first interval; the winner is reused for every
    /// retrain.
    Grid { kind: ClassifierKind, grid: HyperGrid },
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Family whose drift is tracked (label 1).
    pub family_x: Dataset,
    /// Family supplying the "other" class (label 0).
    pub family_y: Dataset,
    pub batch_size: usize,
    pub classifier: ClassifierChoice,
    pub threshold: f64,
    pub k: usize,
    pub minibatch_size: usize,
    pub seed_base: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub validation_accuracy: f64,
    pub candidates: usize,
}

/// An [`ExperimentSpec`] after normalization, batching and the other-family draw.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub family_x: String,
    pub family_y: String,
    pub batches: Vec<TemporalBatch>,
    pub other: OtherFamilySplit,
    pub hyperparams: Hyperparams,
    pub seed_base: u64,
    pub threshold: f64,
    pub k: usize,
    pub minibatch_size: usize,
    pub batch_report: Option<BatchReport>,
    pub grid: Option<GridSummary>,
}

impl Experiment {
    /// Normalizes family X on itself, maps family Y through X's scaling,
    /// batches X and draws the other-family halves with `seed_base`.
    pub fn prepare(spec: &ExperimentSpec) -> Result<Self> {
        if spec.family_x.family == spec.family_y.family {
            return Err(Error::Config(format!(
                "family X and family Y must differ (both are '{}')",
                spec.family_x.family
            )));
        }
        if spec.family_x.dim != spec.family_y.dim {
            return Err(Error::DimensionMismatch {
                expected: spec.family_x.dim,
                got: spec.family_y.dim,
            });
        }
        if !(spec.threshold.is_finite() || spec.threshold == f64::INFINITY) {
            return Err(Error::Config(format!("invalid drift threshold {}", spec.threshold)));
        }
        let (x, table) = normalize(&spec.family_x)?;
        let y = table.apply(&spec.family_y)?;
        let (batches, report) = partition_batches(&x, spec.batch_size)?;
        let other = sample_other_family(&y, spec.batch_size / 2, spec.seed_base)?;
        let mut exp = Experiment {
            family_x: spec.family_x.family.clone(),
            family_y: spec.family_y.family.clone(),
            batches,
            other,
            hyperparams: match &spec.classifier {
                ClassifierChoice::Fixed(h) => h.clone(),
                ClassifierChoice::Grid { kind, .. } => Hyperparams::default_for(*kind),
            },
            seed_base: spec.seed_base,
            threshold: spec.threshold,
            k: spec.k,
            minibatch_size: spec.minibatch_size,
            batch_report: Some(report),
            grid: None,
        };
        if let ClassifierChoice::Grid { kind, grid } = &spec.classifier {
            let result = grid_search(
                *kind,
                grid,
                &exp.training_set(1)?,
                &exp.test_set(1)?,
                exp.train_seed(1),
            )?;
            exp.hyperparams = result.best;
            exp.grid = Some(GridSummary {
                validation_accuracy: result.validation_accuracy,
                candidates: result.evaluated.len(),
            });
        }
        Ok(exp)
    }

    /// Builds an experiment from already-prepared parts.
    pub fn from_parts(
        batches: Vec<TemporalBatch>,
        other: OtherFamilySplit,
        hyperparams: Hyperparams,
        seed_base: u64,
    ) -> Self {
        let family_x = batches
            .first()
            .and_then(|b| b.samples.first())
            .map(|s| s.family.clone())
            .unwrap_or_default();
        let family_y = other
            .y_train
            .first()
            .map(|s| s.family.clone())
            .unwrap_or_default();
        Experiment {
            family_x,
            family_y,
            batches,
            other,
            hyperparams,
            seed_base,
            threshold: crate::silhouette::DEFAULT_THRESHOLD,
            k: crate::silhouette::DEFAULT_K,
            minibatch_size: crate::clustering::DEFAULT_MINIBATCH_SIZE,
            batch_report: None,
            grid: None,
        }
    }

    pub fn batch_count(&self) -> usize {
        self.batches.len()
    }

    fn batch(&self, index: usize) -> Result<&TemporalBatch> {
        index
            .checked_sub(1)
            .and_then(|i| self.batches.get(i))
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "batch {index} outside 1..={}",
                    self.batches.len()
                ))
            })
    }

    pub fn train_seed(&self, batch: usize) -> u64 {
        self.seed_base.wrapping_add(batch as u64)
    }

    /// `(B_b^t, Y_t)`.
    pub fn training_set(&self, batch: usize) -> Result<TrainingSet> {
        TrainingSet::from_families(self.batch(batch)?.train_half(), &self.other.y_train)
    }

    /// `(B_b^T, Y_T)`.
    pub fn test_set(&self, batch: usize) -> Result<TrainingSet> {
        TrainingSet::from_families(self.batch(batch)?.test_half(), &self.other.y_test)
    }

    pub fn train_model(&self, batch: usize) -> Result<TrainedModel> {
        train(&self.hyperparams, &self.training_set(batch)?, self.train_seed(batch))
    }

    /// Silhouette series over batch pairs and the resulting drift report.
    pub fn detect(&self) -> Result<(SilhouetteSeries, DriftReport)> {
        let series = silhouette_series(&self.batches, self.k, self.minibatch_size, self.seed_base)?;
        let report = detect_drift(&series, self.threshold)?;
        Ok((series, report))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    /// Accuracy on `(B_i^T, Y_T)`; entry `i - 1` is batch `i`.
    pub per_interval_accuracy: Vec<f64>,
    pub average_accuracy: f64,
    pub models_trained: usize,
    /// Batches whose training half produced a model, ascending.
    pub retrain_indices: Vec<usize>,
    /// For each interval, the batch whose model scored it.
    pub model_batch: Vec<usize>,
}

/// Which batch's model scores each interval, given the activation batches.
fn schedule(n: usize, activations: &[usize]) -> Vec<usize> {
    let mut current = activations[0];
    let mut next = activations.iter().skip(1).peekable();
    (1..=n)
        .map(|i| {
            while let Some(&&a) = next.peek() {
                if a <= i {
                    current = a;
                    next.next();
                } else {
                    break;
                }
            }
            current
        })
        .collect()
}

fn evaluate(
    exp: &Experiment,
    scenario: Scenario,
    activations: Vec<usize>,
    models: &BTreeMap<usize, TrainedModel>,
) -> Result<ScenarioResult> {
    let model_batch = schedule(exp.batch_count(), &activations);
    let per_interval_accuracy = model_batch
        .par_iter()
        .enumerate()
        .map(|(i, b)| accuracy(&models[b], &exp.test_set(i + 1)?))
        .collect::<Result<Vec<f64>>>()?;
    let average_accuracy =
        per_interval_accuracy.iter().sum::<f64>() / per_interval_accuracy.len() as f64;
    Ok(ScenarioResult {
        scenario,
        per_interval_accuracy,
        average_accuracy,
        models_trained: activations.len(),
        retrain_indices: activations,
        model_batch,
    })
}

fn train_all(exp: &Experiment, batches: &[usize]) -> Result<BTreeMap<usize, TrainedModel>> {
    batches
        .par_iter()
        .map(|&b| Ok((b, exp.train_model(b)?)))
        .collect()
}

fn activations(exp: &Experiment, scenario: Scenario, report: Option<&DriftReport>) -> Result<Vec<usize>> {
    let n = exp.batch_count();
    if n == 0 {
        return Err(Error::Data("experiment has no batches".into()));
    }
    Ok(match scenario {
        Scenario::Static => vec![1],
        Scenario::Periodic => (1..=n).collect(),
        Scenario::DriftAware => {
            let report = report.expect("drift-aware runs need a report");
            let mut v = vec![1];
            for &i in &report.drift_indices {
                if i + 1 > n {
                    return Err(Error::InvalidInput(format!(
                        "drift index {i} does not fit {n} batches"
                    )));
                }
                if *v.last().expect("non-empty") < i + 1 {
                    v.push(i + 1);
                }
            }
            v
        }
    })
}

/// Train once on batch 1; score every interval with that model.
pub fn run_static(exp: &Experiment) -> Result<ScenarioResult> {
    let act = activations(exp, Scenario::Static, None)?;
    evaluate(exp, Scenario::Static, act.clone(), &train_all(exp, &act)?)
}

/// Train a fresh model on every batch and score that batch with it.
pub fn run_periodic(exp: &Experiment) -> Result<ScenarioResult> {
    let act = activations(exp, Scenario::Periodic, None)?;
    evaluate(exp, Scenario::Periodic, act.clone(), &train_all(exp, &act)?)
}

/// Start with the batch-1 model; after drift at pair `i`, switch to a model
/// trained on batch `i + 1`, which scores intervals `i + 1` onward until the
/// next switch.
pub fn run_drift_aware(exp: &Experiment, report: &DriftReport) -> Result<ScenarioResult> {
    let act = activations(exp, Scenario::DriftAware, Some(report))?;
    evaluate(exp, Scenario::DriftAware, act.clone(), &train_all(exp, &act)?)
}

/// Percentage of trainings saved by drift-aware over periodic retraining,
/// rounded to two decimals.
pub fn savings(periodic_models: usize, drift_models: usize) -> Result<f64> {
    if drift_models == 0 || drift_models > periodic_models {
        return Err(Error::InvalidInput(format!(
            "savings need periodic >= drift-aware >= 1, got ({periodic_models}, {drift_models})"
        )));
    }
    let raw = 100.0 * (1.0 - drift_models as f64 / periodic_models as f64);
    Ok((raw * 100.0).round() / 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub family_x: String,
    pub family_y: String,
    pub kind: ClassifierKind,
    pub hyperparams: Hyperparams,
    pub series: SilhouetteSeries,
    pub report: DriftReport,
    pub static_result: ScenarioResult,
    pub periodic: ScenarioResult,
    pub drift_aware: ScenarioResult,
    pub savings_percent: f64,
}

impl ExperimentOutcome {
    pub fn results(&self) -> [&ScenarioResult; 3] {
        [&self.static_result, &self.periodic, &self.drift_aware]
    }
}

/// Runs detection and all three scenarios, training each batch's model at
/// most once.
pub fn run_all(exp: &Experiment) -> Result<ExperimentOutcome> {
    let (series, report) = exp.detect()?;
    let periodic_act = activations(exp, Scenario::Periodic, None)?;
    let models = train_all(exp, &periodic_act)?;
    let static_result = evaluate(exp, Scenario::Static, activations(exp, Scenario::Static, None)?, &models)?;
    let periodic = evaluate(exp, Scenario::Periodic, periodic_act, &models)?;
    let drift_aware = evaluate(
        exp,
        Scenario::DriftAware,
        activations(exp, Scenario::DriftAware, Some(&report))?,
        &models,
    )?;
    let savings_percent = savings(periodic.models_trained, drift_aware.models_trained)?;
    Ok(ExperimentOutcome {
        family_x: exp.family_x.clone(),
        family_y: exp.family_y.clone(),
        kind: exp.hyperparams.kind(),
        hyperparams: exp.hyperparams.clone(),
        series,
        report,
        static_result,
        periodic,
        drift_aware,
        savings_percent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{ForestParams, GbtParams};
    use crate::data::FeatureVector;

    fn fv(family: &str, i: usize, values: Vec<f64>) -> FeatureVector {
        FeatureVector {
            sample_id: format!("{family}-{i:05}"),
            timestamp: i as i64,
            values,
            family: family.into(),
        }
    }

    /// Target family whose class center sits at `x` for batch `b`.
    fn toy(centers: &[f64]) -> Experiment {
        let batches = centers
            .iter()
            .enumerate()
            .map(|(b, &c)| TemporalBatch {
                index: b + 1,
                samples: (0..10)
                    .map(|j| fv("x", b * 10 + j, vec![c + 0.01 * j as f64, 0.5]))
                    .collect(),
            })
            .collect();
        let other = OtherFamilySplit {
            y_train: (0..5).map(|j| fv("y", j, vec![0.5 + 0.01 * j as f64, 0.5])).collect(),
            y_test: (5..10).map(|j| fv("y", j, vec![0.5 + 0.01 * j as f64, 0.5])).collect(),
            seed: 0,
        };
        Experiment::from_parts(
            batches,
            other,
            Hyperparams::Gbt(GbtParams {
                n_estimators: 20,
                ..GbtParams::default()
            }),
            7,
        )
    }

    fn report(n_pairs: usize, drift: &[usize]) -> DriftReport {
        DriftReport {
            d: vec![0.0; n_pairs - 1],
            threshold: 0.05,
            drift_indices: drift.to_vec(),
        }
    }

    #[test]
    fn savings_reproduces_published_rows() {
        assert_eq!(savings(69, 35).unwrap(), 49.28);
        assert_eq!(savings(154, 96).unwrap(), 37.66);
        assert_eq!(savings(423, 256).unwrap(), 39.48);
        assert!(savings(10, 0).is_err());
        assert!(savings(10, 11).is_err());
    }

    #[test]
    fn schedule_follows_activations() {
        assert_eq!(schedule(6, &[1, 3, 5]), vec![1, 1, 3, 3, 5, 5]);
        assert_eq!(schedule(3, &[1]), vec![1, 1, 1]);
    }

    #[test]
    fn single_batch_scenarios_coincide() {
        let exp = toy(&[0.1]);
        let s = run_static(&exp).unwrap();
        let p = run_periodic(&exp).unwrap();
        assert_eq!(s.per_interval_accuracy, p.per_interval_accuracy);
        assert_eq!(s.per_interval_accuracy.len(), 1);
    }

    #[test]
    fn model_counts_follow_protocols() {
        let exp = toy(&[0.1, 0.1, 0.9, 0.9, 0.9]);
        let s = run_static(&exp).unwrap();
        let p = run_periodic(&exp).unwrap();
        let d = run_drift_aware(&exp, &report(4, &[2])).unwrap();
        assert_eq!(s.models_trained, 1);
        assert_eq!(p.models_trained, 5);
        assert_eq!(d.models_trained, 2);
        assert_eq!(d.retrain_indices, vec![1, 3]);
        assert_eq!(d.model_batch, vec![1, 1, 3, 3, 3]);
        assert_eq!(s.per_interval_accuracy[0], p.per_interval_accuracy[0]);
        for r in [&s, &p, &d] {
            assert_eq!(r.per_interval_accuracy.len(), 5);
            let mean = r.per_interval_accuracy.iter().sum::<f64>() / 5.0;
            assert!((mean - r.average_accuracy).abs() < 1e-12);
        }
        // Drift-aware intervals 3..5 use the periodic batch-3 model.
        assert_eq!(d.per_interval_accuracy[2], p.per_interval_accuracy[2]);
        assert!(p.average_accuracy > s.average_accuracy);
    }

    #[test]
    fn empty_report_equals_static() {
        let exp = toy(&[0.1, 0.2, 0.9]);
        let s = run_static(&exp).unwrap();
        let d = run_drift_aware(&exp, &report(2, &[])).unwrap();
        assert_eq!(s.per_interval_accuracy, d.per_interval_accuracy);
        assert_eq!(d.models_trained, 1);
    }

    #[test]
    fn saturated_report_tracks_periodic_from_batch_three() {
        let exp = toy(&[0.1, 0.2, 0.9, 0.4, 0.8]);
        let p = run_periodic(&exp).unwrap();
        let d = run_drift_aware(&exp, &report(4, &[2, 3, 4])).unwrap();
        assert_eq!(d.models_trained, 4);
        assert_eq!(d.model_batch, vec![1, 1, 3, 4, 5]);
        assert_eq!(d.per_interval_accuracy[2..], p.per_interval_accuracy[2..]);
    }

    #[test]
    fn run_all_matches_individual_runs() {
        let exp = toy(&[0.1, 0.1, 0.9, 0.9]);
        let all = run_all(&exp).unwrap();
        assert_eq!(all.static_result, run_static(&exp).unwrap());
        assert_eq!(all.periodic, run_periodic(&exp).unwrap());
        assert_eq!(all.drift_aware, run_drift_aware(&exp, &all.report).unwrap());
    }

    #[test]
    fn same_family_twice_is_rejected() {
        let ds = Dataset::new(
            "x",
            vec!["a".into()],
            (0..200).map(|i| fv("x", i, vec![i as f64])).collect(),
        )
        .unwrap();
        let spec = ExperimentSpec {
            family_x: ds.clone(),
            family_y: ds,
            batch_size: 50,
            classifier: ClassifierChoice::Fixed(Hyperparams::RandomForest(ForestParams::default())),
            threshold: 0.05,
            k: 2,
            minibatch_size: 20,
            seed_base: 0,
        };
        assert!(matches!(Experiment::prepare(&spec), Err(Error::Config(_))));
    }
}
