//! `tcbs`: batch front end for the transaction-cost option solver.
//!
//! Subcommands:
//! * `solve <config.toml>`  : construct brackets, solve, verify, emit artifacts
//! * `certify <config.toml>`: bracket construction and certification only
//! * `verify <config.toml> <solution.csv>`: re-check a solution file
//!
//! Exit codes: 0 success, 1 configuration error, 2 certification failure,
//! 3 non-convergence, 4 verification failure. Relative output paths resolve
//! under `$TCBS_OUT_DIR` (default: current directory).

mod config;
mod csvio;
mod pipeline;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct AppError {
    pub code: i32,
    pub message: String,
}

impl AppError {
    pub fn config(message: String) -> AppError {
        AppError { code: 1, message }
    }

    pub fn io(path: &Path, e: std::io::Error) -> AppError {
        AppError {
            code: 1,
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn cert(e: tcbs_core::bracket::BracketError) -> AppError {
        AppError {
            code: 2,
            message: format!("{e}"),
        }
    }

    pub fn cert_msg(message: String) -> AppError {
        AppError { code: 2, message }
    }

    pub fn converge(message: String) -> AppError {
        AppError { code: 3, message }
    }

    pub fn verify_msg(message: String) -> AppError {
        AppError { code: 4, message }
    }

    fn kind(&self) -> &'static str {
        match self.code {
            1 => "configuration",
            2 => "certification",
            3 => "non-convergence",
            4 => "verification",
            _ => "error",
        }
    }
}

#[derive(Parser)]
#[command(name = "tcbs", version, about = "Stationary transaction-cost option solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct and certify brackets, solve, verify, and write artifacts.
    Solve {
        config: PathBuf,
        /// Override a config key, e.g. --override solver.n=4096
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Construct and certify brackets only.
    Certify {
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Re-verify a previously written solution CSV.
    Verify {
        config: PathBuf,
        solution: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn out_dir() -> PathBuf {
    std::env::var_os("TCBS_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn load(config_path: &Path, overrides: &[String]) -> Result<config::BuiltConfig, AppError> {
    let text = std::fs::read_to_string(config_path).map_err(|e| AppError::io(config_path, e))?;
    let file = config::load_config(&text, overrides)?;
    config::build(file)
}

fn run() -> Result<(), AppError> {
    let cli = Cli::parse();
    let dir = out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
    match &cli.cmd {
        Cmd::Solve { config, overrides } => {
            let cfg = load(config, overrides)?;
            pipeline::run_solve(&cfg, &dir)?;
            println!(
                "ok: report written to {}",
                dir.join(&cfg.file.output.report).display()
            );
        }
        Cmd::Certify { config, overrides } => {
            let cfg = load(config, overrides)?;
            pipeline::run_certify(&cfg, &dir)?;
            println!(
                "ok: certificates written to {}",
                dir.join(&cfg.file.output.report).display()
            );
        }
        Cmd::Verify {
            config,
            solution,
            overrides,
        } => {
            let cfg = load(config, overrides)?;
            pipeline::run_verify(&cfg, solution, &dir)?;
            println!(
                "ok: verification report written to {}",
                dir.join(&cfg.file.output.report).display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let diag = serde_json::json!({
                "error": { "code": e.code, "kind": e.kind(), "detail": e.message }
            });
            eprintln!("{diag}");
            ExitCode::from(e.code as u8)
        }
    }
}
