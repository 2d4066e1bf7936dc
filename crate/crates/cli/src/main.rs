//! `hyperlace`: runs scenario files and writes CSV/JSON reports.
//!
//! Exit status: 0 success, 2 schema or expression error, 3 hypothesis
//! violation, 4 numerical abort or failed check, 1 I/O error.

mod config;
mod failure;
mod report;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::failure::Failure;
use crate::report::{write_document, write_table, Manifest};

#[derive(Parser)]
#[command(name = "hyperlace", version, about = "Scenario runner for magnetic hyperbolic Schrödinger experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its reports.
    Run {
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List built-in potentials and exact solutions.
    Catalog,
    /// Parse and check a scenario without running it.
    Validate { config: PathBuf },
}

/// Caps the worker pool at `HYPERLACE_THREADS`.
fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("HYPERLACE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Schema(format!("HYPERLACE_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Schema(format!("thread pool: {e}")))
}

fn run(path: &Path, output: Option<PathBuf>) -> Result<PathBuf, Failure> {
    let mut scenario = config::load(path)?;
    if let Some(dir) = output {
        scenario.config.output.dir = dir;
    }
    let dir = scenario.output_dir();
    std::fs::create_dir_all(&dir)?;
    let task = scenario.config.task.name();
    let mut manifest = Manifest::new(&dir, path, &scenario.config, task, scenario.config.seed)?;
    manifest.write()?;

    let outcome = match tasks::run(&scenario, &dir) {
        Ok(o) => o,
        Err(e) => {
            manifest.set("status", json!("failed"));
            manifest.set("error", json!({ "kind": e.kind(), "exit_code": e.exit_code(), "message": e.to_string() }));
            manifest.write()?;
            return Err(e);
        }
    };
    let mut files = Vec::new();
    for table in &outcome.tables {
        write_table(&dir, table)?;
        files.push(table.file);
    }
    for (name, value) in &outcome.documents {
        write_document(&dir, name, value)?;
        files.push(name);
    }
    manifest.set("outputs", json!(files));
    manifest.set("diagnostics", json!(outcome.diagnostics));
    manifest.set("cutoff_bounds", outcome.cutoff_bounds.clone().unwrap_or(json!(null)));
    manifest.set("assumption_norms", outcome.assumption_norms.clone().unwrap_or(json!(null)));
    match &outcome.check_failed {
        Some(msg) => {
            manifest.set("status", json!("failed"));
            manifest.set("error", json!({ "kind": "check", "exit_code": 4, "message": msg }));
            manifest.write()?;
            Err(Failure::Check(msg.clone()))
        }
        None => {
            manifest.set("status", json!("ok"));
            manifest.write()?;
            Ok(dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Catalog => {
            print!("{}", hyperlace::catalog::list_catalog());
            Ok(())
        }
        Command::Validate { config } => config::load(&config).map(|s| {
            println!("{}: valid {} scenario", config.display(), s.config.task.name());
        }),
        Command::Run { config, output } => run(&config, output).map(|dir| {
            println!("wrote {}", dir.display());
        }),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
