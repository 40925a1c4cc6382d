//! `jkoflow` command-line driver.
//!
//! Exit codes: 0 when every check passes, 2 when a diagnostic or audit
//! fails, 3 on configuration or input errors, 4 when a solver fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jkoflow::config::RunConfig;
use jkoflow::driver::{diagnose, execute_compare, execute_run, Outcome, RunReport};
use jkoflow::io::{read_config, read_trajectory, IoError};
use jkoflow::model::audit::{audit_model, AuditSettings};

/// Environment variable overriding the directory that relative output paths resolve against.
const OUTPUT_ROOT_VAR: &str = "JKOFLOW_OUTPUT_ROOT";

const EXIT_DIAGNOSTIC: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_SOLVER: u8 = 4;

#[derive(Parser)]
#[command(name = "jkoflow", version, about = "JKO scheme for two-species cross-diffusion systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scheme, write the series and evaluate the diagnostics.
    Run {
        config: PathBuf,
        /// Output directory, overriding the configuration.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Audit the model assumptions only.
    Audit { config: PathBuf },
    /// Run the JKO and finite-volume solvers and compare them.
    Compare {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Re-evaluate the diagnostics of a finished run directory.
    Diagnose { dir: PathBuf },
}

fn output_dir(config: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    let dir = flag.unwrap_or_else(|| PathBuf::from(&config.output.dir));
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if dir.is_relative() => Path::new(&root).join(dir),
        _ => dir,
    }
}

fn io_exit(e: &IoError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        IoError::Config { .. } | IoError::Format { .. } | IoError::Csv { .. } => ExitCode::from(EXIT_CONFIG),
        IoError::Core(_) => ExitCode::from(EXIT_SOLVER),
        IoError::Io { .. } | IoError::Json { .. } => ExitCode::from(EXIT_CONFIG),
    }
}

fn outcome_exit(outcome: Outcome) -> ExitCode {
    match outcome {
        Outcome::Passed => ExitCode::SUCCESS,
        Outcome::DiagnosticFailure => ExitCode::from(EXIT_DIAGNOSTIC),
        Outcome::SolverFailure => ExitCode::from(EXIT_SOLVER),
    }
}

fn print_report(report: &RunReport) {
    for e in report.audit.diffusion.entries.iter().chain(report.audit.kernels.iter().flat_map(|k| &k.entries)) {
        if !e.passed {
            println!("audit FAIL {}: value {:e}, bound {:e}, witness {:?}", e.check, e.value, e.bound, e.witness);
        }
    }
    for c in &report.diagnostics.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<24} worst slack {:+.3e} witness {:?}", c.name, c.worst_slack, c.witness);
    }
}

fn run(config_path: &Path, output: Option<PathBuf>) -> ExitCode {
    let config = match read_config(config_path) {
        Ok(c) => c,
        Err(e) => return io_exit(&e),
    };
    let dir = output_dir(&config, output);
    match execute_run(&config, &dir) {
        Ok(summary) => {
            println!("wrote {} snapshots to {}", summary.trajectory.snapshots.len(), dir.display());
            if let Some(r) = &summary.report {
                print_report(r);
            }
            if let Some(e) = &summary.error {
                eprintln!("solver stopped: {e}");
            }
            outcome_exit(summary.outcome)
        }
        Err(e) => io_exit(&e),
    }
}

fn audit(config_path: &Path) -> ExitCode {
    let config = match read_config(config_path) {
        Ok(c) => c,
        Err(e) => return io_exit(&e),
    };
    let model = match config.build_model() {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let audit = audit_model(&model, &AuditSettings::default());
    println!("{}", serde_json::to_string_pretty(&audit).expect("audit serializes"));
    if audit.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_DIAGNOSTIC)
    }
}

fn compare(config_path: &Path, output: Option<PathBuf>) -> ExitCode {
    let config = match read_config(config_path) {
        Ok(c) => c,
        Err(e) => return io_exit(&e),
    };
    let dir = output_dir(&config, output);
    match execute_compare(&config, &dir) {
        Ok((outcome, cmp, err)) => {
            if let Some(c) = cmp {
                println!("{}", serde_json::to_string_pretty(&c).expect("comparison serializes"));
            }
            if let Some(e) = err {
                eprintln!("solver stopped: {e}");
            }
            outcome_exit(outcome)
        }
        Err(e) => io_exit(&e),
    }
}

fn diagnose_dir(dir: &Path) -> ExitCode {
    let (config, traj) = match read_trajectory(dir) {
        Ok(r) => r,
        Err(e) => return io_exit(&e),
    };
    match diagnose(&traj, &config, &traj.model) {
        Ok(report) => {
            print_report(&report);
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_DIAGNOSTIC)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output } => run(&config, output),
        Command::Audit { config } => audit(&config),
        Command::Compare { config, output } => compare(&config, output),
        Command::Diagnose { dir } => diagnose_dir(&dir),
    }
}
