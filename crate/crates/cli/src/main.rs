use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use driftwatch_cli::commands::{cmd_detect, cmd_report, cmd_run, cmd_synth, init_thread_pool};
use driftwatch_cli::config::ExperimentConfig;
use driftwatch_cli::{CliError, Result};

/// Silhouette-based concept drift detection and retraining experiments.
#[derive(Debug, Parser)]
#[command(name = "driftwatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override `seed_base`.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Override the drift threshold.
    #[arg(long, global = true, value_name = "REAL")]
    threshold: Option<f64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, value_name = "INT")]
    jobs: Option<usize>,
    /// Override the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic families and their ground truth.
    Synth,
    /// Compute silhouette series and drift points per family.
    Detect,
    /// Run static, periodic and drift-aware retraining.
    Run,
    /// Rebuild tables and charts from saved run summaries.
    Report,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed_base = seed;
    }
    if let Some(t) = cli.threshold {
        cfg.threshold = t;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    init_thread_pool(cfg.jobs);
    match cli.command {
        Command::Synth => {
            let files = cmd_synth(&cfg)?;
            println!("wrote {} files under {}", files.len(), cfg.out_dir.join("data").display());
        }
        Command::Detect => {
            for s in cmd_detect(&cfg)? {
                println!("{}: drift at {:?}", s.family, s.report.drift_indices);
            }
        }
        Command::Run | Command::Report => {
            let summaries = if matches!(cli.command, Command::Run) {
                cmd_run(&cfg)?
            } else {
                cmd_report(&cfg)?
            };
            for s in &summaries {
                let o = &s.outcome;
                println!(
                    "{} vs {} [{}]: static {:.2}%  periodic {:.2}%  drift-aware {:.2}%  savings {:.2}%",
                    s.pair.x,
                    s.pair.y,
                    s.classifier,
                    100.0 * o.static_result.average_accuracy,
                    100.0 * o.periodic.average_accuracy,
                    100.0 * o.drift_aware.average_accuracy,
                    o.savings_percent
                );
            }
            println!("report: {}", cfg.out_dir.join("run").join("report.md").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DRIFTWATCH_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("driftwatch: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
