use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rwppt::config::ExperimentConfig;
use rwppt::runner;
use rwppt::Error;

/// Weight-preserving parallel tempering: spacing theory, ladder
/// construction, and finite-dimension Monte Carlo validation.
#[derive(Parser)]
#[command(name = "rwppt", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Experiment configuration file (TOML).
    #[arg(long, global = true, default_value = "experiment.toml")]
    config: PathBuf,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Override the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo subcommands.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the limiting efficiency curve E(ell) and acceptance a(ell).
    TheoryCurve,
    /// Maximize E(ell); emit ell_hat, a_hat and the sigma matrix as JSON.
    Optimize,
    /// Build an inverse-temperature ladder with predicted pair acceptances.
    Ladder,
    /// Run the tempering chain and report per-pair swap diagnostics.
    Simulate,
    /// Estimate a(ell, d) across dimensions against the limiting rate.
    Convergence,
    /// Emit the curve 2 Phi(-m) - m phi(m) whose root pins the 0.234 rate.
    Figure,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::OptimizerConfig(_) => 3,
        _ => 1,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Config(_) => "config",
        Error::OptimizerConfig(_) => "optimizer_config",
        Error::Argument(_) => "argument",
        Error::Domain(_) => "domain",
        Error::Model(_) => "model",
        Error::ModelMismatch(_) => "model_mismatch",
        Error::QuadratureNonConvergence { .. } => "quadrature",
        Error::StateCorruption(_) => "state_corruption",
        Error::Io(_) => "io",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.cmd {
        Cmd::TheoryCurve => runner::Subcommand::TheoryCurve,
        Cmd::Optimize => runner::Subcommand::Optimize,
        Cmd::Ladder => runner::Subcommand::Ladder,
        Cmd::Simulate => runner::Subcommand::Simulate,
        Cmd::Convergence => runner::Subcommand::Convergence,
        Cmd::Figure => runner::Subcommand::Figure,
    };
    let threads = cli.threads.max(1);

    let result = ExperimentConfig::from_path(&cli.config).and_then(|mut cfg| {
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        runner::run_subcommand(cmd, &cfg, &cli.out, threads)
    });

    match result {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!(
                "{}",
                serde_json::json!({
                    "error": error_kind(&err),
                    "message": err.to_string(),
                })
            );
            ExitCode::from(exit_code_for(&err))
        }
    }
}
