//! `vkrr`: experiment harness for vector-valued kernel ridge regression.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 configuration or
//! IO error.

use clap::{Parser, Subcommand};
use vkrr_cli::{commands, config};

#[derive(Parser)]
#[command(name = "vkrr", version, about = "Kernel ridge regression rate experiments")]
struct Cli {
    /// Path to a flat key = value configuration file (defaults apply if omitted).
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override.
    #[arg(long, global = true)]
    output_dir: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a learning-rate experiment and compare the slope to theory.
    RunRates,
    /// Sweep the λ grid and verify the exact bias bound.
    BiasCheck,
    /// Tabulate the effective dimension and certify its λ^p bound.
    Edim,
    /// Reduction-inequality trials and the KL analytic-vs-Monte-Carlo table.
    LowerBoundDemo,
    /// Matérn/Sobolev rate demo with Nyström spectrum estimation.
    SobolevDemo,
}

fn load_config(cli: &Cli) -> Result<config::ExperimentConfig, String> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| format!("reading {}: {e}", path.display()))?,
        None => String::new(),
    };
    let mut cfg = config::parse_config(&text)?;
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("{msg}");
            std::process::exit(2);
        }
    };
    let outcome = match cli.command {
        Command::RunRates => commands::cmd_run_rates(&cfg),
        Command::BiasCheck => commands::cmd_bias_check(&cfg),
        Command::Edim => commands::cmd_edim(&cfg),
        Command::LowerBoundDemo => commands::cmd_lower_bound_demo(&cfg),
        Command::SobolevDemo => commands::cmd_sobolev_demo(&cfg),
    };
    match outcome {
        Ok(true) => std::process::exit(0),
        Ok(false) => std::process::exit(1),
        Err(msg) => {
            eprintln!("{msg}");
            std::process::exit(2);
        }
    }
}
