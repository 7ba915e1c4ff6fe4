use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ptlab::commands;
use ptlab::{CliError, Command, ExperimentConfig, Overrides};

/// PT-symmetric dNLS lattice laboratory.
#[derive(Debug, Parser)]
#[command(name = "ptlab", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,

    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Parent directory for the run directory.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,

    #[arg(long = "e-freq", allow_negative_numbers = true)]
    e_freq: Option<f64>,

    #[arg(long = "n-half")]
    n_half: Option<usize>,

    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,

    #[arg(long = "t-end", allow_negative_numbers = true)]
    t_end: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,

    /// Stored profile for `spectrum`, `evolve` and `check`.
    #[arg(long)]
    profile: Option<PathBuf>,
}

fn run(args: Args) -> Result<PathBuf, CliError> {
    let over = Overrides {
        omega: args.omega,
        gamma: args.gamma,
        epsilon: args.epsilon,
        e_freq: args.e_freq,
        n_half: args.n_half,
        dt: args.dt,
        t_end: args.t_end,
        tol: args.tol,
        seed: args.seed,
        out: args.out,
        profile: args.profile,
    };
    let cfg = ExperimentConfig::resolve(args.command, args.config.as_deref(), &over)?;
    commands::run(&cfg)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Validation(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(args) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
