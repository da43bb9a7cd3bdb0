//! Command-line driver: parses a run configuration, evaluates the requested
//! sweep and writes CSV tables plus a JSON manifest.

mod commands;
mod config;
mod csv;
mod grid;
mod manifest;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use dephase_lab::exec::Execution;

use crate::commands::Report;
use crate::config::{Command, ConfigError, Overrides, RunConfig, Settings};
use crate::manifest::{Manifest, TOOL};

#[derive(Parser)]
#[command(name = "dephase-lab", version, about = "Dephasing of locally encoded multi-qubit probes")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Figures of merit over a noise grid, one CSV per output.
    Sweep(Overrides),
    /// All-plus fringe over a phase grid.
    Fringes(Overrides),
    /// Phase variance at the steepest fringe point with shot-noise intervals.
    Variance(Overrides),
    /// QFI of the bare and encoded probe over register sizes.
    Qfi(Overrides),
    /// Robustness of multilevel coherence.
    Coherence(Overrides),
    /// Numeric values next to their closed forms.
    Compare(Overrides),
}

impl Sub {
    fn split(self) -> (Command, Overrides) {
        match self {
            Sub::Sweep(o) => (Command::Sweep, o),
            Sub::Fringes(o) => (Command::Fringes, o),
            Sub::Variance(o) => (Command::Variance, o),
            Sub::Qfi(o) => (Command::Qfi, o),
            Sub::Coherence(o) => (Command::Coherence, o),
            Sub::Compare(o) => (Command::Compare, o),
        }
    }
}

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = cli.command.split();
    match run(command, &flags) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(feature = "parallel")]
fn evaluate(cfg: &RunConfig, settings: &Settings) -> Result<(dephase_lab::Result<Report>, usize), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = settings.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(std::io::Error::other)?;
    let result = pool.install(|| commands::run(cfg, Execution::Parallel));
    Ok((result, pool.current_num_threads()))
}

#[cfg(not(feature = "parallel"))]
fn evaluate(cfg: &RunConfig, _settings: &Settings) -> Result<(dephase_lab::Result<Report>, usize), CliError> {
    Ok((commands::run(cfg, Execution::Sequential), 1))
}

fn run(command: Command, flags: &Overrides) -> Result<u8, CliError> {
    let (cfg, settings) = config::load(command, flags)?;
    let hash = cfg.hash();
    let start = Instant::now();
    let (result, threads) = evaluate(&cfg, &settings)?;
    let wall_time_s = start.elapsed().as_secs_f64();

    let report = match result {
        Ok(r) => r,
        Err(e) => Report {
            failure: Some(e.to_string()),
            ..Report::default()
        },
    };

    fs::create_dir_all(&settings.out_dir)?;
    let mut outputs = Vec::new();
    for (name, table) in &report.tables {
        let file = format!("{}_{name}_{hash}.csv", command.name());
        write_file(&settings.out_dir.join(&file), table.to_csv_string().as_bytes())?;
        outputs.push(file);
    }
    let mut notes = report.notes.clone();
    if let Some(path) = &settings.config_file {
        notes.push(format!("config file {}", path.display()));
    }
    if !cfg!(feature = "parallel") && settings.threads.is_some() {
        notes.push("built without the parallel feature; --threads ignored".into());
    }
    let manifest = Manifest {
        tool: TOOL.into(),
        command: command.name().into(),
        config_hash: hash.clone(),
        seed: cfg.seed,
        seed_source: settings.seed_source,
        versions: manifest::versions(),
        parallel: cfg!(feature = "parallel"),
        threads,
        wall_time_s,
        outputs: outputs.clone(),
        partial: report.failure.is_some(),
        failure: report.failure.clone(),
        notes,
        max_abs_deviation: report.max_abs_deviation,
        config: cfg,
    };
    let manifest_file = Manifest::file_name(command.name(), &hash);
    write_file(&settings.out_dir.join(&manifest_file), manifest.to_json().as_bytes())?;

    let out = std::io::stdout();
    let mut out = out.lock();
    for file in outputs.iter().chain(std::iter::once(&manifest_file)) {
        writeln!(out, "{}", settings.out_dir.join(file).display())?;
    }
    if let Some(dev) = report.max_abs_deviation {
        writeln!(out, "max abs deviation {}", csv::format_g15(dev))?;
    }
    for note in &report.notes {
        writeln!(out, "note: {note}")?;
    }
    match &report.failure {
        Some(f) => {
            eprintln!("error: {f}");
            Ok(EXIT_NUMERIC)
        }
        None => Ok(0),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    fs::write(path, bytes).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}
