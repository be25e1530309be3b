//! `surrogate`: generate, reduce, simulate and fit surrogate models from the command line.
//!
//! Exit codes: 0 on success, 2 for invalid input (arguments, files, specs),
//! 3 for numerical or model failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod svg;

#[derive(Parser)]
#[command(name = "surrogate", version, about = "Reduced-order and lumped-parameter surrogate models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a finite-element rod model and write its Matrix Market quadruple.
    HfmGen {
        /// JSON spec with a "kind" of rod, thermal_rod or thermoelastic_rod.
        spec: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Reduce a system with CURE and write the bound ledger.
    Reduce {
        /// Directory holding E.mtx, A.mtx, B.mtx, C.mtx.
        system: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        max_order: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Step response of a system by trapezoidal integration.
    Simulate {
        system: PathBuf,
        /// Step magnitudes, comma separated (one per input).
        #[arg(long, default_value = "1")]
        step: String,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        t_end: f64,
        /// CSV destination; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Fit the parameters of a lumped network to step-response data.
    LpmFit {
        topology: PathBuf,
        /// CSV with header t,y1.
        data: PathBuf,
        #[arg(long, default_value = "1")]
        step: String,
        /// Inner simulation step; defaults to the data spacing.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 1)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// HFM → CURE ROM → training data → network fit → total bound.
    Hybrid {
        spec: PathBuf,
        topology: PathBuf,
        #[arg(long, default_value_t = 0.0035)]
        tol: f64,
        #[arg(long, default_value_t = 60)]
        max_order: usize,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 20.0)]
        t_end: f64,
        #[arg(long, default_value = "1")]
        step: String,
        #[arg(long, default_value_t = 1)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::HfmGen { spec, out } => commands::hfm_gen(&spec, &out),
        Command::Reduce {
            system,
            tol,
            max_order,
            out,
        } => commands::reduce(&system, tol, max_order, &out),
        Command::Simulate {
            system,
            step,
            dt,
            t_end,
            out,
        } => commands::simulate(&system, &step, dt, t_end, out.as_deref()),
        Command::LpmFit {
            topology,
            data,
            step,
            dt,
            starts,
            seed,
            out,
        } => commands::lpm_fit(&topology, &data, &step, dt, starts, seed, &out),
        Command::Hybrid {
            spec,
            topology,
            tol,
            max_order,
            dt,
            t_end,
            step,
            starts,
            seed,
            out,
        } => commands::hybrid(&commands::HybridArgs {
            spec,
            topology,
            tol,
            max_order,
            dt,
            t_end,
            step,
            starts,
            seed,
            out,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_input_error() { 2 } else { 3 })
        }
    }
}
