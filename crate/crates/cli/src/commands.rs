//! The `synth`, `detect`, `run` and `report` subcommands.
//!
//! Output layout under the configured output directory:
//!
//! ```text
//! data/<family>.csv, data/<family>.truth.json        synth
//! detect/<family>.{json,csv,svg}                       detect
//! run/<x>__<y>/<classifier>/{static,periodic,drift_aware}.csv
//! run/<x>__<y>/<classifier>/{summary.json,retrain.svg} run
//! run/{summary.csv,savings.csv,savings.md,accuracy.svg,report.md}
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use driftwatch::classifiers::ClassifierKind;
use driftwatch::data::{normalize, partition_batches, write_csv as write_dataset, BatchReport, LoadReport};
use driftwatch::scenarios::{
    run_all, ClassifierChoice, Experiment, ExperimentOutcome, ExperimentSpec, GridSummary,
    Scenario, ScenarioResult,
};
use driftwatch::silhouette::{detect_drift, silhouette_series, DriftReport, SilhouetteSeries};
use driftwatch::synth::DriftSchedule;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charts;
use crate::config::{sanitize, ExperimentConfig, FamilyPair, ResolvedFamily};
use crate::error::{CliError, Result};
use crate::output::{read_json, write_csv, write_json, write_text, SavingsTable, SAVINGS_HEADER};

/// Sizes the global worker pool; 0 keeps rayon's default of one thread per
/// core. Only the first call in a process has an effect.
pub fn init_thread_pool(jobs: usize) {
    if jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::debug!("thread pool already initialized: {e}");
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFile {
    pub family: String,
    pub ground_truth: Vec<usize>,
    pub schedule: DriftSchedule,
}

/// Writes every synthetic family as CSV plus its ground truth.
pub fn cmd_synth(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let names = cfg.synthetic_families();
    if names.is_empty() {
        return Err(CliError::Config("no synthetic or benchmark families configured".into()));
    }
    let families = cfg.resolve(&names)?;
    let dir = cfg.out_dir.join("data");
    crate::output::ensure_dir(&dir)?;
    let mut written = Vec::new();
    for fam in families.values() {
        let schedule = fam.schedule.clone().expect("synthetic families carry a schedule");
        let csv_path = dir.join(format!("{}.csv", sanitize(&fam.name)));
        write_dataset(&fam.dataset, &csv_path).map_err(|e| CliError::output(&csv_path, e))?;
        let truth_path = dir.join(format!("{}.truth.json", sanitize(&fam.name)));
        write_json(
            &truth_path,
            &GroundTruthFile {
                family: fam.name.clone(),
                ground_truth: fam.ground_truth().unwrap_or_default().into_iter().collect(),
                schedule,
            },
        )?;
        log::info!("wrote {} ({} rows)", csv_path.display(), fam.dataset.len());
        written.push(csv_path);
        written.push(truth_path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectSummary {
    pub family: String,
    pub threshold: f64,
    pub k: usize,
    pub minibatch_size: usize,
    pub seed_base: u64,
    pub batch_report: BatchReport,
    pub series: SilhouetteSeries,
    pub report: DriftReport,
    pub ground_truth: Option<Vec<usize>>,
    pub load_report: Option<LoadReport>,
}

fn detect_family(cfg: &ExperimentConfig, fam: &ResolvedFamily) -> Result<DetectSummary> {
    let (normalized, _) = normalize(&fam.dataset)?;
    let (batches, batch_report) = partition_batches(&normalized, cfg.batch_size)?;
    let series = silhouette_series(&batches, cfg.k, cfg.minibatch_size, cfg.seed_base)?;
    let report = detect_drift(&series, cfg.threshold)?;
    Ok(DetectSummary {
        family: fam.name.clone(),
        threshold: cfg.threshold,
        k: cfg.k,
        minibatch_size: cfg.minibatch_size,
        seed_base: cfg.seed_base,
        batch_report,
        series,
        report,
        ground_truth: fam.ground_truth().map(|t| t.into_iter().collect()),
        load_report: fam.load_report.clone(),
    })
}

/// Runs the drift detector on each detection family.
pub fn cmd_detect(cfg: &ExperimentConfig) -> Result<Vec<DetectSummary>> {
    let families = cfg.resolve(&cfg.detect_families())?;
    let summaries = families
        .par_iter()
        .map(|(_, fam)| detect_family(cfg, fam))
        .collect::<Result<Vec<_>>>()?;
    let dir = cfg.out_dir.join("detect");
    for s in &summaries {
        let stem = sanitize(&s.family);
        write_json(&dir.join(format!("{stem}.json")), s)?;
        let rows: Vec<Vec<String>> = s
            .series
            .s
            .iter()
            .enumerate()
            .map(|(j, si)| {
                let i = j + 1;
                let d = if i >= 2 { s.report.d[i - 2].to_string() } else { String::new() };
                let flagged = s.report.drift_indices.binary_search(&i).is_ok();
                vec![i.to_string(), si.to_string(), d, u8::from(flagged).to_string()]
            })
            .collect();
        write_csv(&dir.join(format!("{stem}.csv")), &["pair_index", "s", "d", "drift"], &rows)?;
        let points: Vec<(usize, f64)> = s.report.indexed().collect();
        write_text(
            &dir.join(format!("{stem}.svg")),
            &charts::drift_chart(
                &format!("Silhouette differences: {}", s.family),
                &points,
                s.threshold,
            ),
        )?;
        log::info!(
            "{}: {} drift points at threshold {}: {:?}",
            s.family,
            s.report.drift_indices.len(),
            s.threshold,
            s.report.drift_indices
        );
    }
    Ok(summaries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub pair: FamilyPair,
    pub classifier: ClassifierKind,
    pub seed_base: u64,
    pub threshold: f64,
    pub batch_report: Option<BatchReport>,
    pub grid: Option<GridSummary>,
    pub outcome: ExperimentOutcome,
}

fn run_job(
    cfg: &ExperimentConfig,
    families: &BTreeMap<String, ResolvedFamily>,
    pair: &FamilyPair,
    kind: ClassifierKind,
) -> Result<RunSummary> {
    let classifier = if cfg.grid_search {
        ClassifierChoice::Grid {
            kind,
            grid: cfg.grid.clone(),
        }
    } else {
        ClassifierChoice::Fixed(cfg.models.for_kind(kind))
    };
    let spec = ExperimentSpec {
        family_x: families[&pair.x].dataset.clone(),
        family_y: families[&pair.y].dataset.clone(),
        batch_size: cfg.batch_size,
        classifier,
        threshold: cfg.threshold,
        k: cfg.k,
        minibatch_size: cfg.minibatch_size,
        seed_base: cfg.seed_base,
    };
    let exp = Experiment::prepare(&spec)?;
    let outcome = run_all(&exp)?;
    log::info!(
        "{} vs {} / {kind}: static {:.4}, periodic {:.4}, drift-aware {:.4} ({} models)",
        pair.x,
        pair.y,
        outcome.static_result.average_accuracy,
        outcome.periodic.average_accuracy,
        outcome.drift_aware.average_accuracy,
        outcome.drift_aware.models_trained
    );
    Ok(RunSummary {
        pair: pair.clone(),
        classifier: kind,
        seed_base: cfg.seed_base,
        threshold: cfg.threshold,
        batch_report: exp.batch_report,
        grid: exp.grid,
        outcome,
    })
}

fn job_dir(out: &Path, pair: &FamilyPair, kind: ClassifierKind) -> PathBuf {
    out.join("run").join(pair.slug()).join(kind.as_str())
}

fn scenario_rows(r: &ScenarioResult) -> Vec<Vec<String>> {
    r.per_interval_accuracy
        .iter()
        .zip(&r.model_batch)
        .enumerate()
        .map(|(j, (acc, b))| vec![(j + 1).to_string(), b.to_string(), acc.to_string()])
        .collect()
}

fn retrain_chart(s: &RunSummary) -> String {
    let o = &s.outcome;
    let rows: Vec<(&str, &[usize])> = o
        .results()
        .iter()
        .map(|r| (r.scenario.as_str(), r.retrain_indices.as_slice()))
        .collect();
    charts::retrain_markers(
        &format!("Retraining intervals: {} vs {} ({})", s.pair.x, s.pair.y, s.classifier),
        o.periodic.per_interval_accuracy.len(),
        &rows,
    )
}

/// Trains and scores every (pair, classifier) combination.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    if cfg.pairs.is_empty() {
        return Err(CliError::Config("`run` needs at least one entry in pairs".into()));
    }
    let mut names: Vec<String> = cfg.pairs.iter().flat_map(|p| [p.x.clone(), p.y.clone()]).collect();
    names.sort();
    names.dedup();
    let families = cfg.resolve(&names)?;
    let jobs: Vec<(&FamilyPair, ClassifierKind)> = cfg
        .pairs
        .iter()
        .flat_map(|p| cfg.classifiers.iter().map(move |&k| (p, k)))
        .collect();
    let summaries = jobs
        .par_iter()
        .map(|&(pair, kind)| run_job(cfg, &families, pair, kind))
        .collect::<Result<Vec<_>>>()?;
    for s in &summaries {
        let dir = job_dir(&cfg.out_dir, &s.pair, s.classifier);
        for r in s.outcome.results() {
            write_csv(
                &dir.join(format!("{}.csv", r.scenario)),
                &["interval", "model_batch", "accuracy"],
                &scenario_rows(r),
            )?;
        }
        write_json(&dir.join("summary.json"), s)?;
    }
    write_aggregates(&cfg.out_dir, &summaries)?;
    Ok(summaries)
}

/// Rebuilds the aggregate tables and charts from the saved run summaries.
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    let mut summaries = Vec::new();
    for pair in &cfg.pairs {
        for &kind in &cfg.classifiers {
            let path = job_dir(&cfg.out_dir, pair, kind).join("summary.json");
            if !path.exists() {
                return Err(CliError::Data(format!(
                    "{} is missing; run the `run` subcommand first",
                    path.display()
                )));
            }
            summaries.push(read_json::<RunSummary>(&path)?);
        }
    }
    if summaries.is_empty() {
        return Err(CliError::Config("no pairs configured".into()));
    }
    write_aggregates(&cfg.out_dir, &summaries)?;
    Ok(summaries)
}

/// Savings counts per target family. Detection depends only on the target
/// family, so pairs sharing a target share a row.
pub fn savings_counts(summaries: &[RunSummary]) -> Vec<(String, usize, usize)> {
    let mut by_family: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for s in summaries {
        by_family.entry(s.pair.x.clone()).or_insert((
            s.outcome.periodic.models_trained,
            s.outcome.drift_aware.models_trained,
        ));
    }
    by_family.into_iter().map(|(f, (p, d))| (f, p, d)).collect()
}

fn write_aggregates(out: &Path, summaries: &[RunSummary]) -> Result<()> {
    let dir = out.join("run");
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    let mut report = String::from("# Drift-aware retraining report\n\n## Average accuracy\n\n");
    report.push_str("| Target | Other | Classifier | Static | Periodic | Drift-aware | Models (static / periodic / drift-aware) |\n");
    report.push_str("|---|---|---|---:|---:|---:|---|\n");
    for s in summaries {
        let o = &s.outcome;
        for r in o.results() {
            rows.push(vec![
                s.pair.x.clone(),
                s.pair.y.clone(),
                s.classifier.to_string(),
                r.scenario.to_string(),
                r.average_accuracy.to_string(),
                r.models_trained.to_string(),
            ]);
        }
        groups.push((
            format!("{} / {}", s.pair.x, s.classifier),
            o.results().iter().map(|r| r.average_accuracy).collect(),
        ));
        report.push_str(&format!(
            "| {} | {} | {} | {:.2}% | {:.2}% | {:.2}% | {} / {} / {} |\n",
            s.pair.x,
            s.pair.y,
            s.classifier,
            100.0 * o.static_result.average_accuracy,
            100.0 * o.periodic.average_accuracy,
            100.0 * o.drift_aware.average_accuracy,
            o.static_result.models_trained,
            o.periodic.models_trained,
            o.drift_aware.models_trained
        ));
        write_text(
            &job_dir(out, &s.pair, s.classifier).join("retrain.svg"),
            &retrain_chart(s),
        )?;
    }
    write_csv(
        &dir.join("summary.csv"),
        &["family_x", "family_y", "classifier", "scenario", "average_accuracy", "models_trained"],
        &rows,
    )?;
    let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.as_str()).collect();
    write_text(
        &dir.join("accuracy.svg"),
        &charts::grouped_bars("Average accuracy per retraining scenario", &names, &groups),
    )?;
    let table = SavingsTable::new(&savings_counts(summaries))?;
    write_csv(&dir.join("savings.csv"), &SAVINGS_HEADER, &table.csv_rows())?;
    write_text(&dir.join("savings.md"), &table.markdown())?;
    report.push_str("\n## Retraining savings\n\n");
    report.push_str(&table.markdown());
    write_text(&dir.join("report.md"), &report)?;
    Ok(())
}
