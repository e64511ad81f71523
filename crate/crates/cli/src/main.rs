use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cloudchamber_cli::commands::{cmd_info, cmd_run, cmd_sweep, cmd_validate};
use cloudchamber_cli::config::{Boundary, Method, Overrides};

#[derive(Parser)]
#[command(
    name = "cloudchamber",
    version,
    about = "Particle track formation in a chain of spin detectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write timeseries.csv, channels_final.csv and summary.json.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Run every (N, rho) point of a sweep configuration and write sweep.csv.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Concurrent points; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the structural and oracle checks.
    Validate {
        /// Build the reference with the other coupling factor (the suite must fail).
        #[arg(long)]
        perturb_kappa: bool,
    },
    /// Print the resolved parameters without running.
    Info {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct OverrideArgs {
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    num_spins: Option<usize>,
    #[arg(long)]
    kappa: Option<u8>,
    #[arg(long, value_enum)]
    boundary_mode: Option<Boundary>,
    #[arg(long, value_enum)]
    solver: Option<Method>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            rho: a.rho,
            num_spins: a.num_spins,
            kappa: a.kappa,
            boundary_mode: a.boundary_mode,
            solver: a.solver,
            out_dir: a.out_dir,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run { config, overrides } => cmd_run(&config, &overrides.into()).map(drop),
        Command::Sweep {
            config,
            out_dir,
            jobs,
        } => cmd_sweep(&config, out_dir, jobs).map(drop),
        Command::Validate { perturb_kappa } => cmd_validate(perturb_kappa).map(drop),
        Command::Info {
            config,
            overrides,
            json,
        } => cmd_info(&config, &overrides.into(), json).map(drop),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
