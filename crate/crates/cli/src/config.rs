//! Experiment configuration, read from a TOML document.
//!
//! Families are declared under `[families.<name>]` with a `source` of `csv`,
//! `synth` or `benchmark`. Relative CSV paths resolve against the directory
//! holding the config file. Everything except `families` has a default.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use driftwatch::classifiers::{
    ClassifierKind, ForestParams, GbtParams, HyperGrid, Hyperparams, MlpParams, SvmParams,
};
use driftwatch::data::{load_csv_families, CsvColumns, Dataset, LoadReport, SAMPLE_ID_COLUMN};
use driftwatch::synth::{
    benchmark_pair, generate_family, ground_truth_drift, random_shift, BenchmarkParams,
    DriftEvent, DriftMode, DriftSchedule, DEFAULT_INTERVAL_SECS, DEFAULT_START_TIMESTAMP,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_minibatch")]
    pub minibatch_size: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierKind>,
    /// Tune each (pair, classifier) once on the first interval.
    #[serde(default)]
    pub grid_search: bool,
    #[serde(default)]
    pub grid: HyperGrid,
    /// Fixed hyperparameters used when `grid_search` is off.
    #[serde(default)]
    pub models: ModelSettings,
    pub families: BTreeMap<String, FamilySource>,
    #[serde(default)]
    pub pairs: Vec<FamilyPair>,
}

fn default_batch_size() -> usize {
    driftwatch::data::DEFAULT_BATCH_SIZE
}
fn default_k() -> usize {
    driftwatch::silhouette::DEFAULT_K
}
fn default_minibatch() -> usize {
    driftwatch::clustering::DEFAULT_MINIBATCH_SIZE
}
fn default_threshold() -> f64 {
    driftwatch::silhouette::DEFAULT_THRESHOLD
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("driftwatch-out")
}
fn default_classifiers() -> Vec<ClassifierKind> {
    ClassifierKind::ALL.to_vec()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub mlp: MlpParams,
    pub linear_svm: SvmParams,
    pub random_forest: ForestParams,
    pub gbt: GbtParams,
}

impl ModelSettings {
    pub fn for_kind(&self, kind: ClassifierKind) -> Hyperparams {
        match kind {
            ClassifierKind::Mlp => Hyperparams::Mlp(self.mlp.clone()),
            ClassifierKind::LinearSvm => Hyperparams::LinearSvm(self.linear_svm.clone()),
            ClassifierKind::RandomForest => Hyperparams::RandomForest(self.random_forest.clone()),
            ClassifierKind::Gbt => Hyperparams::Gbt(self.gbt.clone()),
        }
    }
}

/// Target family `x` (label 1) against other family `y` (label 0).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyPair {
    pub x: String,
    pub y: String,
}

impl FamilyPair {
    /// Directory-safe identifier.
    pub fn slug(&self) -> String {
        format!("{}__{}", sanitize(&self.x), sanitize(&self.y))
    }
}

/// File path plus timestamp, label and id column names.
type CsvKey = (PathBuf, String, String, String);

/// Replaces characters outside `[A-Za-z0-9._-]` with `_`.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum FamilySource {
    Csv(CsvSource),
    Synth(SynthSource),
    Benchmark(BenchmarkSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub path: PathBuf,
    #[serde(default = "default_ts_column")]
    pub timestamp_column: String,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    #[serde(default = "default_id_column")]
    pub id_column: String,
    /// Label value to select; may be omitted when the file holds one family.
    #[serde(default)]
    pub label: Option<String>,
}

fn default_ts_column() -> String {
    "timestamp".into()
}
fn default_label_column() -> String {
    "family".into()
}
fn default_id_column() -> String {
    SAMPLE_ID_COLUMN.into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSource {
    pub n_batches: usize,
    /// Defaults to the experiment batch size.
    #[serde(default)]
    pub batch_size: Option<usize>,
    pub base_centers: Vec<Vec<f64>>,
    #[serde(default)]
    pub events: Vec<EventConfig>,
    #[serde(default = "one")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub walk_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_value_range")]
    pub value_range: (f64, f64),
    #[serde(default = "default_start")]
    pub start_timestamp: i64,
    #[serde(default = "default_interval")]
    pub interval_secs: i64,
}

fn one() -> f64 {
    1.0
}
fn default_value_range() -> (f64, f64) {
    (-30.0, 30.0)
}
fn default_start() -> i64 {
    DEFAULT_START_TIMESTAMP
}
fn default_interval() -> i64 {
    DEFAULT_INTERVAL_SECS
}

/// A drift event. Give either an explicit `shift` vector or a `magnitude`
/// with a `direction_seed` for a seeded random direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub batch: usize,
    #[serde(default)]
    pub mode: Option<DriftMode>,
    #[serde(default)]
    pub ramp_batches: Option<usize>,
    #[serde(default)]
    pub shift: Option<Vec<f64>>,
    #[serde(default)]
    pub magnitude: Option<f64>,
    #[serde(default)]
    pub direction_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkRole {
    Target,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSource {
    pub role: BenchmarkRole,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: BenchmarkParams,
}

impl SynthSource {
    pub fn schedule(&self, default_batch_size: usize) -> Result<DriftSchedule> {
        let dim = self
            .base_centers
            .first()
            .map(Vec::len)
            .ok_or_else(|| CliError::Config("synthetic family needs base_centers".into()))?;
        let drift_events = self
            .events
            .iter()
            .map(|e| e.to_event(dim))
            .collect::<Result<Vec<_>>>()?;
        let schedule = DriftSchedule {
            n_batches: self.n_batches,
            batch_size: self.batch_size.unwrap_or(default_batch_size),
            dim,
            base_centers: self.base_centers.clone(),
            drift_events,
            noise_sigma: self.noise_sigma,
            walk_sigma: self.walk_sigma,
            seed: self.seed,
            value_range: self.value_range,
            start_timestamp: self.start_timestamp,
            interval_secs: self.interval_secs,
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

impl EventConfig {
    fn to_event(&self, dim: usize) -> Result<DriftEvent> {
        let shift = match (&self.shift, self.magnitude) {
            (Some(v), None) => v.clone(),
            (None, Some(m)) => random_shift(dim, m, self.direction_seed.unwrap_or(self.batch as u64)),
            _ => {
                return Err(CliError::Config(format!(
                    "event at batch {} needs exactly one of shift or magnitude",
                    self.batch
                )))
            }
        };
        let mode = self.mode.unwrap_or(DriftMode::Sudden);
        let ramp = self.ramp_batches.unwrap_or(1);
        Ok(match mode {
            DriftMode::Sudden => DriftEvent {
                ramp_batches: ramp,
                ..DriftEvent::sudden(self.batch, shift)
            },
            DriftMode::Gradual => DriftEvent::gradual(self.batch, shift, ramp),
        })
    }
}

/// A family ready for the pipeline.
#[derive(Debug, Clone)]
pub struct ResolvedFamily {
    pub name: String,
    pub dataset: Dataset,
    /// Generator schedule for synthetic families.
    pub schedule: Option<DriftSchedule>,
    pub load_report: Option<LoadReport>,
}

impl ResolvedFamily {
    pub fn ground_truth(&self) -> Option<BTreeSet<usize>> {
        self.schedule.as_ref().map(ground_truth_drift)
    }
}

impl ExperimentConfig {
    /// Parses and validates a config file, resolving relative CSV paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for source in cfg.families.values_mut() {
            if let FamilySource::Csv(c) = source {
                if c.path.is_relative() {
                    c.path = base.join(&c.path);
                }
            }
        }
        Ok(cfg)
    }

    /// Parses without validating, so command-line overrides can apply first.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return bad(format!("threshold must be positive, got {}", self.threshold));
        }
        if self.batch_size == 0 || !self.batch_size.is_multiple_of(2) {
            return bad(format!("batch_size must be a positive even number, got {}", self.batch_size));
        }
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if self.minibatch_size == 0 {
            return bad("minibatch_size must be positive".into());
        }
        if self.classifiers.is_empty() {
            return bad("at least one classifier is required".into());
        }
        if self.families.is_empty() {
            return bad("no families configured".into());
        }
        for pair in &self.pairs {
            for name in [&pair.x, &pair.y] {
                if !self.families.contains_key(name) {
                    return bad(format!("pair refers to unknown family '{name}'"));
                }
            }
            if pair.x == pair.y {
                return bad(format!("pair uses family '{}' on both sides", pair.x));
            }
        }
        if self.grid_search {
            for &kind in &self.classifiers {
                self.grid.candidates(kind)?;
            }
        }
        Ok(())
    }

    /// Families drift detection runs on: every pair's target, or every family
    /// when no pairs are configured.
    pub fn detect_families(&self) -> Vec<String> {
        if self.pairs.is_empty() {
            return self.families.keys().cloned().collect();
        }
        let set: BTreeSet<String> = self.pairs.iter().map(|p| p.x.clone()).collect();
        set.into_iter().collect()
    }

    pub fn synthetic_families(&self) -> Vec<String> {
        self.families
            .iter()
            .filter(|(_, s)| !matches!(s, FamilySource::Csv(_)))
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Loads or generates the named families. Each CSV file is read once.
    pub fn resolve(&self, names: &[String]) -> Result<BTreeMap<String, ResolvedFamily>> {
        let mut csv_cache: BTreeMap<CsvKey, (BTreeMap<String, Dataset>, LoadReport)> = BTreeMap::new();
        let mut out = BTreeMap::new();
        for name in names {
            let source = self
                .families
                .get(name)
                .ok_or_else(|| CliError::Config(format!("unknown family '{name}'")))?;
            let resolved = match source {
                FamilySource::Csv(c) => {
                    let key = (
                        c.path.clone(),
                        c.timestamp_column.clone(),
                        c.label_column.clone(),
                        c.id_column.clone(),
                    );
                    if !csv_cache.contains_key(&key) {
                        let columns = CsvColumns {
                            timestamp: c.timestamp_column.clone(),
                            label: c.label_column.clone(),
                            id: c.id_column.clone(),
                        };
                        log::info!("loading {}", c.path.display());
                        let loaded = load_csv_families(&c.path, &columns)?;
                        csv_cache.insert(key.clone(), loaded);
                    }
                    let (families, report) = &csv_cache[&key];
                    let dataset = match &c.label {
                        Some(label) => families.get(label).cloned().ok_or_else(|| {
                            CliError::Data(format!(
                                "{} has no rows labeled '{label}'",
                                c.path.display()
                            ))
                        })?,
                        None if families.len() == 1 => {
                            families.values().next().cloned().expect("one family")
                        }
                        None => {
                            return Err(CliError::Config(format!(
                                "{} holds {} families; set `label` for family '{name}'",
                                c.path.display(),
                                families.len()
                            )))
                        }
                    };
                    ResolvedFamily {
                        name: name.clone(),
                        dataset,
                        schedule: None,
                        load_report: Some(report.clone()),
                    }
                }
                FamilySource::Synth(s) => {
                    let schedule = s.schedule(self.batch_size)?;
                    ResolvedFamily {
                        name: name.clone(),
                        dataset: generate_family(&schedule, name)?,
                        schedule: Some(schedule),
                        load_report: None,
                    }
                }
                FamilySource::Benchmark(b) => {
                    let pair = benchmark_pair(&b.params, b.seed)?;
                    let schedule = match b.role {
                        BenchmarkRole::Target => pair.target,
                        BenchmarkRole::Other => pair.other,
                    };
                    ResolvedFamily {
                        name: name.clone(),
                        dataset: generate_family(&schedule, name)?,
                        schedule: Some(schedule),
                        load_report: None,
                    }
                }
            };
            out.insert(name.clone(), resolved);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [families.x]
        source = "benchmark"
        role = "target"
        seed = 4

        [families.y]
        source = "benchmark"
        role = "other"
        seed = 4

        [[pairs]]
        x = "x"
        y = "y"
    "#;

    #[test]
    fn defaults_follow_the_published_settings() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.batch_size, 50);
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.minibatch_size, 20);
        assert_eq!(cfg.threshold, 0.05);
        assert_eq!(cfg.classifiers.len(), 4);
        assert_eq!(cfg.grid, HyperGrid::default());
        assert_eq!(cfg.detect_families(), vec!["x".to_string()]);
    }

    #[test]
    fn invalid_settings_are_config_errors() {
        for patch in [
            "threshold = 0.0",
            "threshold = -1.0",
            "batch_size = 49",
            "k = 1",
            "classifiers = []",
        ] {
            let cfg = ExperimentConfig::from_toml(&format!("{patch}\n{MINIMAL}")).unwrap();
            assert!(matches!(cfg.validate(), Err(CliError::Config(_))), "{patch}");
        }
        let bad_pair = MINIMAL.replace("y = \"y\"", "y = \"z\"");
        let cfg = ExperimentConfig::from_toml(&bad_pair).unwrap();
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_toml("nonsense = 1\n").is_err());
    }

    #[test]
    fn grids_can_be_overridden_partially() {
        let text = format!("grid_search = true\n[grid.gbt]\nmax_depth = [2]\n{MINIMAL}");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.grid.gbt.max_depth, vec![2]);
        assert_eq!(cfg.grid.gbt.n_estimators, vec![50, 100, 200]);
        assert_eq!(cfg.grid.random_forest, Default::default());
    }

    #[test]
    fn synth_events_accept_vectors_or_magnitudes() {
        let text = r#"
            [families.s]
            source = "synth"
            n_batches = 6
            base_centers = [[0.0, 0.0], [5.0, 5.0]]
            events = [
                { batch = 3, shift = [1.0, 0.0] },
                { batch = 5, magnitude = 2.0, direction_seed = 9, mode = "gradual", ramp_batches = 2 },
            ]
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let fams = cfg.resolve(&["s".to_string()]).unwrap();
        let s = fams["s"].schedule.as_ref().unwrap();
        assert_eq!(s.drift_events[0].shift, vec![1.0, 0.0]);
        let n: f64 = s.drift_events[1].shift.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 2.0).abs() < 1e-12);
        assert_eq!(fams["s"].dataset.len(), 300);
        assert_eq!(fams["s"].ground_truth().unwrap(), BTreeSet::from([2, 4, 5]));
    }

    #[test]
    fn sanitize_keeps_safe_characters() {
        assert_eq!(sanitize("Air push/2"), "Air_push_2");
        let p = FamilyPair { x: "a".into(), y: "b c".into() };
        assert_eq!(p.slug(), "a__b_c");
    }
}
