//! `fracprop`: runs Mittag-Leffler evaluations, counting-function fits,
//! decay studies and verification batteries, writing CSV.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{MlArgs, Outcome};
use config::{ExperimentConfig, ModelConfig, Overrides};

#[derive(Parser)]
#[command(name = "fracprop", version, about = "Fractional heat/wave propagators and their decay")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV output; without it the main table goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate E_{alpha,delta}(z) at a list of z <= 0.
    MlEval {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Comma-separated, e.g. --z=-1,-10,-100
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Vec<f64>,
    },
    /// Tabulate the spectral counting function N(s) and fit its exponent.
    Spectrum {
        /// e.g. torus:2, euclidean:1, cyclic:8, dihedral:5, s4, engel, cartan, heisenberg:1, power:3
        #[arg(long)]
        model: Option<ModelConfig>,
    },
    /// Evolve data and fit the log-log decay slope of its L^q norm.
    Decay {
        #[arg(long)]
        model: Option<ModelConfig>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
    },
    /// Run the identity, transform, residual and bound checks.
    Verify {
        #[arg(long)]
        model: Option<ModelConfig>,
    },
}

fn run(cli: Cli) -> Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let base = cli
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut overrides = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        ..Default::default()
    };
    match &cli.command {
        Command::Spectrum { model } | Command::Verify { model } => {
            overrides.model.clone_from(model);
        }
        Command::Decay { model, beta, p, q } => {
            overrides.model.clone_from(model);
            (overrides.beta, overrides.p, overrides.q) = (*beta, *p, *q);
        }
        Command::MlEval { .. } => {}
    }
    cfg.apply(&overrides);

    let outcome = match cli.command {
        Command::MlEval { alpha, delta, z } => commands::ml_eval_cmd(&cfg, &MlArgs { alpha, delta, z })?,
        Command::Spectrum { .. } => commands::spectrum_cmd(&cfg, &base)?,
        Command::Decay { .. } => commands::decay_cmd(&cfg, &base)?,
        Command::Verify { .. } => commands::verify_cmd(&cfg, &base)?,
    };
    match &cfg.output_dir {
        Some(dir) => {
            for path in output::write_dir(dir, &outcome.tables)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => output::write_streams(&outcome.tables)?,
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) if outcome.passed => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
