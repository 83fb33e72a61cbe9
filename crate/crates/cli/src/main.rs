//! `kcell run <config>` and `kcell replay <csv> <config>`.
//!
//! Exit codes: 0 on success, 1 on a failed check, replay mismatch or run
//! error, 2 on a config error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kcell::campaign::{first_difference, run_campaign, CampaignConfig, CampaignError, CampaignOutcome};

#[derive(Parser)]
#[command(name = "kcell", version, about = "Monte Carlo campaigns for K-cells of Poisson hyperplane processes")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "KCELL_WORKERS", default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign and write its CSV, JSON summary and plot.
    Run {
        config: PathBuf,
        /// Exit 1 if any check fails.
        #[arg(long)]
        check: bool,
        /// Directory for outputs.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Re-run a campaign and byte-compare against an existing CSV.
    Replay { csv: PathBuf, config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, check, out } => run(&config, cli.workers, check, &out),
        Command::Replay { csv, config } => replay(&csv, &config, cli.workers),
    }
}

/// Loads a config and applies the `SEED` override.
fn load(path: &Path) -> Result<CampaignConfig, CampaignError> {
    let mut config = CampaignConfig::from_path(path)?;
    if let Ok(seed) = std::env::var("SEED") {
        config.master_seed = seed.trim().parse().map_err(|_| {
            CampaignError::Config(vec![kcell::campaign::Issue {
                path: "SEED".into(),
                message: format!("not an unsigned integer: {seed:?}"),
            }])
        })?;
    }
    Ok(config)
}

fn execute(path: &Path, workers: usize) -> Result<CampaignOutcome, ExitCode> {
    let config = load(path).map_err(report)?;
    let outcome = run_campaign(&config, workers).map_err(report)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    Ok(outcome)
}

fn report(e: CampaignError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        // Io here means the config file could not be read.
        CampaignError::Config(_) | CampaignError::Io { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn run(path: &Path, workers: usize, check: bool, out: &Path) -> ExitCode {
    let outcome = match execute(path, workers) {
        Ok(o) => o,
        Err(code) => return code,
    };
    match outcome.write(out) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    for c in &outcome.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if check && !outcome.passed() {
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn replay(csv: &Path, path: &Path, workers: usize) -> ExitCode {
    let expected = match std::fs::read_to_string(csv) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", csv.display());
            return ExitCode::from(2);
        }
    };
    let outcome = match execute(path, workers) {
        Ok(o) => o,
        Err(code) => return code,
    };
    match first_difference(&expected, &outcome.to_csv()) {
        None => {
            println!("replay identical ({} rows)", outcome.rows.len());
            ExitCode::SUCCESS
        }
        Some((line, want, got)) => {
            eprintln!("replay differs at line {line}\n  recorded: {want}\n  replayed: {got}");
            ExitCode::from(1)
        }
    }
}
