//! Configuration-driven experiment runner for the extinction laboratory.
//!
//! Each subcommand runs one study from a TOML configuration and emits a
//! canonical config copy, a plain-text verdict, and the study's data
//! files (CSV norm series, snapshot tables) into the output directory.
//! The exit code is 0 exactly when the study's documented criterion
//! passes.

// Validation deliberately writes `!(x > 0.0)` so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod studies;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::StudyKind;

#[derive(Parser)]
#[command(
    name = "extinction",
    about = "Numerical studies of finite-time extinction for the singular \
             p-Laplacian equation with gradient absorption",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for verdict and data files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Exponent algebra and identity residual report.
    Exponents(RunArgs),
    /// Feasible super/subsolution parameters with residual scan certificates.
    BarrierCheck(RunArgs),
    /// Paired fast/slow-tail runs: extinction vs. eternal positivity.
    TailDichotomy(RunArgs),
    /// Extinction-rate fits against the theoretical exponents.
    RateStudy(RunArgs),
    /// Functional-inequality lemma verification on synthetic and run data.
    LemmaCheck(RunArgs),
}

fn expected_kind(cmd: &Command) -> (StudyKind, &RunArgs) {
    match cmd {
        Command::Exponents(a) => (StudyKind::Exponents, a),
        Command::BarrierCheck(a) => (StudyKind::BarrierCheck, a),
        Command::TailDichotomy(a) => (StudyKind::TailDichotomy, a),
        Command::RateStudy(a) => (StudyKind::RateStudy, a),
        Command::LemmaCheck(a) => (StudyKind::LemmaCheck, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = expected_kind(&cli.command);

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match config::parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cfg.study != kind {
        eprintln!(
            "error: configuration declares study \"{}\" but the \"{}\" subcommand was invoked",
            cfg.study.as_str(),
            kind.as_str()
        );
        return ExitCode::from(2);
    }

    match studies::run_study(&cfg, &args.out) {
        Ok(verdict) => {
            // Writes may hit a closed pipe (e.g. piped into `head`);
            // the verdict files are already on disk by now.
            use std::io::Write;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            let _ = writeln!(
                out,
                "study {}: {} (config {})",
                verdict.study,
                if verdict.pass { "PASS" } else { "FAIL" },
                &verdict.config_hash[..16]
            );
            for (k, v) in &verdict.metrics {
                let _ = writeln!(out, "  {k} = {v}");
            }
            if verdict.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
