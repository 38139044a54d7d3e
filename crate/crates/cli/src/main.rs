//! `condenser-widths <task> --config <path> [--seed S] [--threads T] [--out DIR]`
//!
//! Writes `result.json`, task CSVs and `manifest.json` into the output
//! directory. Exit status: 0 success, 2 validation failure, 3 evaluation
//! budget exhausted, 1 anything else (I/O).

mod config;
mod tasks;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};

use config::{RunConfig, Task, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "condenser-widths",
    version,
    about = "Condenser equilibrium, extremal-constant and n-width experiments"
)]
struct Cli {
    task: Task,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the config output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a regression fixture (chi task) into this directory.
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

#[derive(Debug)]
pub enum RunError {
    Validation(String),
    Budget(String),
    Io(anyhow::Error),
}

impl From<condenser_core::Error> for RunError {
    fn from(e: condenser_core::Error) -> Self {
        match e {
            condenser_core::Error::BudgetExceeded { .. } => RunError::Budget(e.to_string()),
            other => RunError::Validation(other.to_string()),
        }
    }
}

impl RunError {
    fn exit_code(&self) -> u8 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Budget(_) => 3,
            RunError::Io(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            RunError::Validation(m) => format!("validation failed: {m}"),
            RunError::Budget(m) => format!("numeric budget exhausted: {m}"),
            RunError::Io(e) => format!("{e:#}"),
        }
    }
}

fn io<E: Into<anyhow::Error>>(what: &Path) -> impl FnOnce(E) -> RunError + '_ {
    move |e| RunError::Io(e.into().context(format!("writing {}", what.display())))
}

fn write_json(path: &Path, v: &Value) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(v).map_err(io(path))?;
    text.push('\n');
    fs::write(path, text).map_err(io(path))
}

fn write_csv(path: &Path, table: &tasks::CsvTable) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(io(path))?;
    w.write_record(&table.header).map_err(io(path))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(io(path))?;
    }
    w.flush().map_err(io(path))
}

fn execute(cli: &Cli) -> Result<bool, RunError> {
    let started = Instant::now();
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &cli.out {
        cfg.output = Some(o.clone());
    }
    cfg.task = Some(cli.task);
    cfg.validate()?;
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| RunError::Io(e.into()))?;
    }

    let output = tasks::run(cli.task, &cfg)?;

    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(io(&dir))?;
    let mut files = vec!["result.json".to_string()];
    write_json(&dir.join("result.json"), &output.result)?;
    for table in &output.tables {
        write_csv(&dir.join(table.file), table)?;
        files.push(table.file.to_string());
    }
    if let (Some(fdir), Some((name, fixture))) = (&cli.fixtures, &output.fixture) {
        fs::create_dir_all(fdir).map_err(io(fdir))?;
        write_json(&fdir.join(name), fixture)?;
    }
    files.push("manifest.json".to_string());
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "task": cli.task.name(),
        "seed": cfg.seed,
        "threads": rayon::current_num_threads(),
        "versions": {
            "condenser-widths": env!("CARGO_PKG_VERSION"),
            "condenser-core": condenser_core::VERSION,
        },
        "config": cfg,
        "outputs": files,
        "passed": output.passed,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(output.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed: at least one check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
