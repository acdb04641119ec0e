//! decseq: decentralized sequential testing toolkit.
//!
//! Subcommands: `info` (K-L numbers of a quantizer), `optimize` (quantizer
//! searches), `simulate` (Monte Carlo batches from a TOML config).
//! Replications run in parallel; set RAYON_NUM_THREADS to pin the thread
//! count. Exit codes: 0 success, 1 usage/config error, 2 runtime error.

use clap::{Parser, Subcommand};
use decseq::cli::{cmd_info, cmd_optimize, cmd_simulate, CliError, InfoModel, OptimizeTarget};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "decseq", version, about = "Decentralized sequential tests for a normal mean")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report K-L information numbers for a quantizer.
    Info {
        /// Quantizer spec: threshold:<l>[:ge|lt], interval:<lo>:<hi>, abs:<l>.
        #[arg(long)]
        quantizer: String,
        /// Model: three-state or invariant.
        #[arg(long, default_value = "three-state")]
        model: InfoModel,
    },
    /// Search for an optimal quantizer.
    Optimize {
        /// Target: f, g1, g2 or invariant.
        #[arg(long)]
        target: OptimizeTarget,
        /// Folded priors "pf,pg" for the invariant target.
        #[arg(long)]
        priors: Option<String>,
    },
    /// Run the simulation batches described by a TOML config.
    Simulate {
        /// Path to the experiment config.
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_priors(s: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    let [a, b] = parts.as_slice() else {
        return Err(CliError::Usage(format!("expected two comma-separated priors, got `{s}`")));
    };
    let pf = a
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::Usage(format!("bad prior `{a}`")))?;
    let pg = b
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::Usage(format!("bad prior `{b}`")))?;
    Ok((pf, pg))
}

fn run(args: Args) -> Result<(), CliError> {
    match args.command {
        Command::Info { quantizer, model } => {
            print!("{}", cmd_info(&quantizer, model)?);
        }
        Command::Optimize { target, priors } => {
            let priors = priors.as_deref().map(parse_priors).transpose()?;
            print!("{}", cmd_optimize(target, priors)?);
        }
        Command::Simulate { config } => {
            let (csv, json) = cmd_simulate(&config)?;
            println!("wrote {}", csv.display());
            println!("wrote {}", json.display());
        }
    }
    Ok(())
}

fn main() {
    let args = Args::parse();
    if let Err(e) = run(args) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
