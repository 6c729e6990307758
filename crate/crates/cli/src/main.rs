//! `sklab`: runs one experiment and writes a JSON result document.
//!
//! Exit codes: 0 success, 2 configuration error, 3 enumeration budget
//! exceeded, 4 numerical failure (e.g. fixed-point non-convergence), 1 I/O.

mod config;
mod run;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};
use sklab::LabError;

use config::{name, Command, ConfigError, ExperimentConfig, Flags};
use run::{RunError, Table};

const WORKERS_ENV: &str = "SKLAB_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "sklab", version, about = "Replica-symmetric SK solver and finite-n lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(2, "config", &e.to_string()),
    };
    let cfg = match ExperimentConfig::resolve(cli.command, &cli.flags) {
        Ok(c) => c,
        Err(e) => return fail(2, "config", &e.0),
    };
    let workers = match worker_count(cli.flags.workers) {
        Ok(w) => w,
        Err(e) => return fail(2, "config", &e.0),
    };
    if let Some(w) = workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            return fail(1, "io", &e.to_string());
        }
    }

    let start = Instant::now();
    let outcome = match run::run(&cfg) {
        Ok(o) => o,
        Err(RunError::Config(e)) => return fail(2, "config", &e.0),
        Err(RunError::Lab(e)) => return lab_failure(&e),
    };
    let doc = json!({
        "tool": "sklab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name(cfg.command),
        "config": serde_json::to_value(&cfg).expect("config serializes"),
        "result": outcome.result,
        "workers": rayon::current_num_threads(),
        "wall_time_s": start.elapsed().as_secs_f64(),
        "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
    });
    if let Err(e) = write_outputs(&cfg, &doc, outcome.table.as_ref()) {
        return fail(1, "io", &e);
    }
    ExitCode::SUCCESS
}

fn worker_count(flag: Option<usize>) -> Result<Option<usize>, ConfigError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(s) => Some(s.trim().parse().map_err(|_| {
                ConfigError(format!("{WORKERS_ENV} must be a positive integer, got {s:?}"))
            })?),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(ConfigError("worker count must be >= 1".into()));
    }
    Ok(n)
}

fn lab_failure(e: &LabError) -> ExitCode {
    let (code, kind) = classify(e);
    fail(code, kind, &e.to_string())
}

fn classify(e: &LabError) -> (u8, &'static str) {
    match e {
        LabError::BudgetExceeded { .. } => (3, "budget"),
        LabError::NonConvergence { .. } => (4, "numerical"),
        LabError::InvalidParameter(_) | LabError::InvalidDistribution(_) | LabError::NonFinite(_) => {
            (2, "config")
        }
    }
}

/// Prints a JSON error document to stderr and returns the exit code.
fn fail(code: u8, kind: &str, message: &str) -> ExitCode {
    let doc = json!({
        "tool": "sklab",
        "version": env!("CARGO_PKG_VERSION"),
        "error": { "kind": kind, "exit_code": code, "message": message },
    });
    eprintln!("{}", serde_json::to_string_pretty(&doc).expect("error document serializes"));
    ExitCode::from(code)
}

fn write_outputs(cfg: &ExperimentConfig, doc: &Value, table: Option<&Table>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| e.to_string())? + "\n";
    match &cfg.out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string())?,
    }
    if let (Some(path), Some(table)) = (&cfg.csv, table) {
        write_csv(path, table)?;
    }
    Ok(())
}

fn write_csv(path: &Path, table: &Table) -> Result<(), String> {
    let err = |e: csv::Error| format!("{}: {e}", path.display());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(&table.header).map_err(err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(err)?;
    }
    w.flush().map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let nc = LabError::NonConvergence {
            iterations: 10,
            last: 0.5,
            residual: 1e-3,
        };
        assert_eq!(classify(&nc), (4, "numerical"));
        let b = LabError::BudgetExceeded { terms: 10, limit: 5 };
        assert_eq!(classify(&b), (3, "budget"));
        assert_eq!(classify(&LabError::InvalidParameter("x".into())).0, 2);
    }
}
