mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::{resolve, Command, ExtraArgs, SharedArgs};

/// Semiclassical Wigner functions for the stationary 1D quantum Vlasov equation.
///
/// Exit codes: 0 success, 1 configuration error, 2 computation error,
/// 3 verification failure.
#[derive(Parser, Debug)]
#[command(name = "bgk-wigner", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Build the series and write series.json plus a readable listing.
    Expand {
        #[command(flatten)]
        shared: SharedArgs,
    },
    /// Sample the Wigner function on a grid (field.csv and field.json).
    Evaluate {
        #[command(flatten)]
        shared: SharedArgs,
        /// Keep the raw field instead of normalizing to unit integral.
        #[arg(long)]
        no_normalize: bool,
    },
    /// Marginals, purity functional and negativity; a Q sweep with --hbar-list.
    Diagnose {
        #[command(flatten)]
        shared: SharedArgs,
        /// Negativity threshold relative to the maximum.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Check the residual order of a built or loaded series.
    Verify {
        #[command(flatten)]
        shared: SharedArgs,
        /// auto, symbolic or numeric.
        #[arg(long)]
        mode: Option<String>,
        /// Highest j kept in the truncated operator (numeric mode).
        #[arg(long)]
        j_max: Option<usize>,
        /// Number of random (x, p) samples (numeric mode).
        #[arg(long)]
        samples: Option<usize>,
        /// Seed of the sample generator (numeric mode).
        #[arg(long)]
        rng_seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, shared, extra) = match cli.command {
        Sub::Expand { shared } => (Command::Expand, shared, ExtraArgs::default()),
        Sub::Evaluate { shared, no_normalize } => (
            Command::Evaluate,
            shared,
            ExtraArgs {
                normalize: no_normalize.then_some(false),
                ..Default::default()
            },
        ),
        Sub::Diagnose { shared, eps } => (
            Command::Diagnose,
            shared,
            ExtraArgs {
                eps,
                ..Default::default()
            },
        ),
        Sub::Verify {
            shared,
            mode,
            j_max,
            samples,
            rng_seed,
        } => (
            Command::Verify,
            shared,
            ExtraArgs {
                mode,
                j_max,
                samples,
                rng_seed,
                ..Default::default()
            },
        ),
    };
    let cfg = resolve(command, &shared, &extra).map_err(CliError::Config)?;
    match command {
        Command::Expand => commands::expand(cfg),
        Command::Evaluate => commands::evaluate(cfg),
        Command::Diagnose => commands::diagnose_cmd(cfg),
        Command::Verify => commands::verify(cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
