//! Privacy audits for synthetic tabular data, from the command line.
//!
//! Three subcommands share one config-file format (see `config`):
//!
//! * `audit`  runs every configured attacker once per seed and writes
//!   `report.json` plus one score CSV per attacker;
//! * `sweep`  varies one knob over a grid and writes `sweep.csv`;
//! * `shift`  varies the reference/test distribution-shift level p_group0
//!   and writes `sweep.csv` keyed by that column.
//!
//! Everything is deterministic for a given config and seed list. Grid
//! points and seeds run concurrently up to `--jobs`, but results are
//! collected in task order and written by the main thread, so the output
//! bytes do not depend on scheduling.
//!
//! Exit codes: 0 success, 1 config error, 2 data error, 3 numeric or
//! training error. Logging goes to stderr, gated by SYNTH_AUDIT_LOG
//! (error, info or debug; default error).

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use rayon::prelude::*;

use synth_audit_core::audit::{assemble_report, run_audit_once, AuditSpec, SeedOutcome};
use synth_audit_core::error::ErrorClass;
use synth_audit_core::eval::{scores_to_csv, SweepRow, SweepSeedCol, SweepTable};
use synth_audit_core::{AuditError, Result};

use config::Execution;

#[derive(Parser)]
#[command(name = "synth-audit", version, about = "Membership-inference audits of synthetic tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every configured attacker per seed; write report.json and score CSVs
    Audit(RunArgs),
    /// Re-run the audit over a one-knob grid; write sweep.csv
    Sweep(RunArgs),
    /// Re-run the audit over a p_group0 shift grid; write sweep.csv
    Shift(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Master seed or comma-separated list of seeds
    #[arg(long, value_name = "N[,N...]", default_value = "0")]
    seed: String,

    /// Output directory, created if missing
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Concurrent tasks (grid points x seeds)
    #[arg(long, value_name = "K", default_value_t = 1)]
    jobs: usize,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Audit(_) => "audit",
            Command::Sweep(_) => "sweep",
            Command::Shift(_) => "shift",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Audit(a) | Command::Sweep(a) | Command::Shift(a) => a,
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Keep clap's rendering but fold usage mistakes into the config
            // exit code; --help and --version are successes.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = init_logging() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
    if let Err(e) = run(&cli.command) {
        eprintln!("error: {e}");
        let code = match e.class() {
            ErrorClass::Config => 1,
            ErrorClass::Data => 2,
            ErrorClass::Numeric => 3,
        };
        std::process::exit(code);
    }
}

fn init_logging() -> Result<()> {
    let level = match std::env::var("SYNTH_AUDIT_LOG") {
        Err(_) => log::LevelFilter::Error,
        Ok(v) if v.is_empty() => log::LevelFilter::Error,
        Ok(v) => match v.as_str() {
            "error" => log::LevelFilter::Error,
            "info" => log::LevelFilter::Info,
            "debug" => log::LevelFilter::Debug,
            other => {
                return Err(AuditError::Config(format!(
                    "SYNTH_AUDIT_LOG must be error, info or debug, got `{other}`"
                )))
            }
        },
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    Ok(())
}

fn run(command: &Command) -> Result<()> {
    let args = command.args();
    let seeds = parse_seeds(&args.seed)?;
    if args.jobs == 0 {
        return Err(AuditError::Config("--jobs must be at least 1".into()));
    }

    // A wrong --config path is a config mistake, not a data problem.
    let text = fs::read_to_string(&args.config).map_err(|e| {
        AuditError::Config(format!("cannot read config file {}: {e}", args.config.display()))
    })?;
    let plan = config::parse_config(&text)?;
    let exec = config::plan_for(command.name(), &plan)?;

    // Validation is done; only now may files appear.
    fs::create_dir_all(&args.out)?;

    match exec {
        Execution::Audit(spec) => {
            let outcomes = run_tasks(std::slice::from_ref(&spec), &seeds, args.jobs)?;
            write_audit_outputs(&spec, &seeds, &outcomes, &args.out)
        }
        Execution::Grid { knob_name, points } => {
            let specs: Vec<AuditSpec> = points.iter().map(|(_, s)| s.clone()).collect();
            let outcomes = run_tasks(&specs, &seeds, args.jobs)?;
            write_sweep_output(&knob_name, &points, &seeds, &outcomes, &args.out)
        }
    }
}

fn parse_seeds(raw: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for item in raw.split(',').map(str::trim) {
        if item.is_empty() {
            return Err(AuditError::Config(format!("empty entry in seed list `{raw}`")));
        }
        let seed: u64 = item
            .parse()
            .map_err(|_| AuditError::Config(format!("seed `{item}` is not an unsigned integer")))?;
        if seeds.contains(&seed) {
            return Err(AuditError::Config(format!("seed {seed} appears twice")));
        }
        seeds.push(seed);
    }
    Ok(seeds)
}

/// Run every (spec, seed) pair, specs outermost, on a bounded pool.
/// Collection preserves task order, so downstream writes are stable no
/// matter how the scheduler interleaves.
fn run_tasks(specs: &[AuditSpec], seeds: &[u64], jobs: usize) -> Result<Vec<SeedOutcome>> {
    let tasks: Vec<(usize, u64)> = specs
        .iter()
        .enumerate()
        .flat_map(|(i, _)| seeds.iter().map(move |&s| (i, s)))
        .collect();
    info!("running {} task(s) on {} thread(s)", tasks.len(), jobs);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| AuditError::Config(format!("cannot build a {jobs}-thread pool: {e}")))?;
    pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, seed)| {
                debug!("spec {i}, seed {seed}: start");
                let out = run_audit_once(&specs[i], seed);
                debug!("spec {i}, seed {seed}: done");
                out
            })
            .collect()
    })
}

fn write_audit_outputs(
    spec: &AuditSpec,
    seeds: &[u64],
    outcomes: &[SeedOutcome],
    out_dir: &Path,
) -> Result<()> {
    let report = assemble_report(spec, "audit", env!("CARGO_PKG_VERSION"), outcomes)?;
    write_file(&out_dir.join("report.json"), &report.to_json()?)?;
    for outcome in outcomes {
        for scores in &outcome.scores {
            let file = if seeds.len() == 1 {
                format!("scores_{}.csv", scores.name)
            } else {
                format!("scores_{}.seed{}.csv", scores.name, outcome.seed)
            };
            write_file(&out_dir.join(file), &scores_to_csv(scores))?;
        }
    }
    Ok(())
}

fn write_sweep_output(
    knob_name: &str,
    points: &[(f64, AuditSpec)],
    seeds: &[u64],
    outcomes: &[SeedOutcome],
    out_dir: &Path,
) -> Result<()> {
    let attacker_names: Vec<String> = points[0]
        .1
        .attackers
        .iter()
        .map(|a| a.name().to_string())
        .collect();
    let mut table = SweepTable::new(knob_name, attacker_names);
    for (p, (value, _)) in points.iter().enumerate() {
        for (s, _) in seeds.iter().enumerate() {
            let outcome = &outcomes[p * seeds.len() + s];
            table.rows.push(SweepRow {
                value: *value,
                seed: SweepSeedCol::Seed(outcome.seed),
                utility: outcome.utility_wasserstein,
                aucs: outcome.attackers.iter().map(|a| a.auc).collect(),
            });
        }
    }
    table.append_aggregate_rows();
    write_file(&out_dir.join("sweep.csv"), &table.to_csv_string())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)?;
    info!("wrote {}", path.display());
    Ok(())
}
