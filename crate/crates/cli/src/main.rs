use std::path::PathBuf;
use std::process::ExitCode;

use casched_cli::{cmd_compare, cmd_run, CliError, Overrides};
use casched_core::channel::LogBase;
use clap::{Parser, Subcommand};

/// Application-aware resource-block scheduling simulator for
/// multi-carrier cellular downlink.
#[derive(Parser)]
#[command(name = "casched", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Logarithm base of the SNR-to-rate mapping: 2 or e.
    #[arg(long, global = true, value_name = "2|e")]
    log_base: Option<String>,
    /// End a stage early once its shares are stationary to this tolerance.
    #[arg(long, global = true, value_name = "TOL")]
    kkt_tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheduling policy on a scenario and write its artifacts.
    Run {
        /// Scenario file (TOML).
        scenario: PathBuf,
        /// Frames to schedule per carrier stage (overrides the file).
        #[arg(long)]
        frames: Option<u64>,
        /// Scheduling policy: upf, pf, or pf-weighted.
        #[arg(long)]
        policy: Option<String>,
        /// Artifact directory (overrides the file's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run UPF and both proportional-fair baselines on identical inputs.
    Compare {
        /// Scenario file (TOML).
        scenario: PathBuf,
        /// Frames to schedule per carrier stage (overrides the file).
        #[arg(long)]
        frames: Option<u64>,
        /// Artifact directory (overrides the file's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_log_base(word: &str) -> Result<LogBase, CliError> {
    match word {
        "2" => Ok(LogBase::Base2),
        "e" => Ok(LogBase::Natural),
        _ => Err(CliError::BadChoice {
            what: "log base",
            got: word.to_owned(),
            expected: "2, e",
        }),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let log_base = cli.log_base.as_deref().map(parse_log_base).transpose()?;
    match cli.command {
        Command::Run {
            scenario,
            frames,
            policy,
            out,
        } => {
            let overrides = Overrides {
                frames,
                log_base,
                kkt_tol: cli.kkt_tol,
            };
            let report = cmd_run(&scenario, policy.as_deref(), out, overrides)?;
            for warning in &report.warnings {
                eprintln!("warning: {warning}");
            }
            println!(
                "policy {}: total log-utility {:.6}",
                report.policy.label(),
                report.total_log_utility
            );
            println!("artifacts written to {}", report.out_dir.display());
        }
        Command::Compare {
            scenario,
            frames,
            out,
        } => {
            let overrides = Overrides {
                frames,
                log_base,
                kkt_tol: cli.kkt_tol,
            };
            let report = cmd_compare(&scenario, out, overrides)?;
            for warning in &report.warnings {
                eprintln!("warning: {warning}");
            }
            println!("{:<14} {:>20}", "policy", "total log-utility");
            for (label, total) in &report.rows {
                println!("{label:<14} {total:>20.6}");
            }
            println!("artifacts written to {}", report.out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
