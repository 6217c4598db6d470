use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use supbound::run::{run_all, run_bound, run_simulate, run_verify, MethodChoice};

#[derive(Parser)]
#[command(
    name = "supbound",
    version,
    about = "Entropy tail bounds for suprema of dispersive random waves, \
             with Monte Carlo verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    /// Closed form when the phi/Z signature admits one, generic otherwise.
    Auto,
    /// Quadrature-backed pipeline for any admissible pair.
    Generic,
    /// Closed form only; error if no signature matches.
    Closed,
}

impl From<MethodArg> for MethodChoice {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => MethodChoice::Auto,
            MethodArg::Generic => MethodChoice::Generic,
            MethodArg::Closed => MethodChoice::Closed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute optimized tail bounds over the configured u grid.
    Bound {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Output directory (defaults to the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample field realizations and record grid suprema.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the seed recorded in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the modulus oracle and bound-versus-empirical dominance.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Scale on C_Z for the modulus check; below 1 is the negative
        /// control and should fail.
        #[arg(long, default_value_t = 1.0)]
        cz_scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bound, simulate and verify in sequence.
    All {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1.0)]
        cz_scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bound {
            config,
            method,
            out,
        } => run_bound(&config, method.into(), out.as_deref()).map(|_| ()),
        Command::Simulate { config, seed, out } => {
            run_simulate(&config, seed, out.as_deref()).map(|_| ())
        }
        Command::Verify {
            config,
            cz_scale,
            out,
        } => run_verify(&config, cz_scale, out.as_deref()).map(|_| ()),
        Command::All {
            config,
            method,
            seed,
            cz_scale,
            out,
        } => run_all(&config, method.into(), seed, cz_scale, out.as_deref()).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
