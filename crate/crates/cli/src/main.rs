//! `plasma-lab`: simulate, scan linear modes, trace drift orbits and sweep
//! the temperature gradient.
//!
//! Exit status: 0 on success, 1 on runtime failure, 2 on bad configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plasma_lab::drifts::ParticleState;

mod config;
mod error;
mod modes;
mod simulate;
mod sweep;
mod trace;

#[derive(Parser)]
#[command(
    name = "plasma-lab",
    version,
    about = "Bi-temperature drift-fluid slab experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tabulate linear modes around an equilibrium.
    #[command(allow_negative_numbers = true)]
    Modes {
        #[arg(long)]
        tplus: f64,
        #[arg(long)]
        tminus: f64,
        #[arg(long = "box")]
        box_len: f64,
        /// good or bad
        #[arg(long)]
        side: String,
        #[arg(long)]
        kmax: usize,
        /// Directory for modes.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Integrate one drift orbit.
    #[command(allow_negative_numbers = true)]
    Trace {
        #[arg(long)]
        x1: f64,
        #[arg(long)]
        x2: f64,
        #[arg(long)]
        v1: f64,
        #[arg(long)]
        v2: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        steps: usize,
        /// Keep every n-th step (the last step is always kept).
        #[arg(long, default_value_t = 1)]
        decimate: usize,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat a simulation across temperature gradients.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated gradients (T+ - T-)/L.
        #[arg(long, allow_hyphen_values = true)]
        gradients: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config } => simulate::cmd_simulate(&config),
        Command::Modes {
            tplus,
            tminus,
            box_len,
            side,
            kmax,
            out,
        } => modes::cmd_modes(tplus, tminus, box_len, &side, kmax, &out),
        Command::Trace {
            x1,
            x2,
            v1,
            v2,
            dt,
            steps,
            decimate,
            out,
        } => trace::cmd_trace(
            ParticleState::new(x1, x2, v1, v2),
            dt,
            steps,
            decimate,
            out.as_deref(),
        ),
        Command::Sweep { config, gradients } => sweep::cmd_sweep(&config, &gradients),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plasma-lab: {e}");
            e.exit_code()
        }
    }
}
