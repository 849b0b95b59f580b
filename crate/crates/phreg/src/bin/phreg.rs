//! Command-line front end: parse arguments, dispatch to the library,
//! print the report, map errors to exit codes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phreg::commands::{
    cmd_reproduce_beam, cmd_simulate, cmd_sweep, cmd_synth, cmd_validate, exit_code, CommandReport,
    ReproduceOptions,
};
use phreg::config::ScenarioConfig;

#[derive(Parser)]
#[command(
    name = "phreg",
    about = "Boundary-controlled port-Hamiltonian systems: certificates, controller synthesis, closed-loop verification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// JSON scenario file
    #[arg(long)]
    config: PathBuf,
    /// Output directory for result files
    #[arg(long, default_value = "phreg-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check model invariants, passivity class, and stability certificates
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Accepted for interface uniformity; validation writes no files
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize the robust regulation controller and write controller.json
    Synth(ScenarioArgs),
    /// Simulate the closed loop; writes trajectory.csv, metrics.json, error.svg
    Simulate(ScenarioArgs),
    /// Scan the tuning parameter; writes sweep.csv
    Sweep(ScenarioArgs),
    /// Run the built-in beam scenario and check it against the bundled thresholds
    ReproduceBeam {
        #[arg(long, default_value = "phreg-out")]
        out: PathBuf,
        /// Scale the mass density of the built-in model
        #[arg(long)]
        rho_scale: Option<f64>,
        /// Scale the bending stiffness of the built-in model
        #[arg(long)]
        ei_scale: Option<f64>,
        /// Detune the first controller frequency to demonstrate failure flagging
        #[arg(long)]
        break_frequency: bool,
    },
}

fn run() -> phreg::Result<CommandReport> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config, out: _ } => cmd_validate(&ScenarioConfig::load(&config)?),
        Command::Synth(args) => cmd_synth(&ScenarioConfig::load(&args.config)?, &args.out),
        Command::Simulate(args) => cmd_simulate(&ScenarioConfig::load(&args.config)?, &args.out),
        Command::Sweep(args) => cmd_sweep(&ScenarioConfig::load(&args.config)?, &args.out),
        Command::ReproduceBeam {
            out,
            rho_scale,
            ei_scale,
            break_frequency,
        } => cmd_reproduce_beam(
            &out,
            ReproduceOptions {
                rho_scale,
                ei_scale,
                break_frequency,
            },
        ),
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("PHREG_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    match run() {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
