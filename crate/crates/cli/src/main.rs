//! `horizon`: analysis of polynomial vector fields at infinity.

mod commands;
mod output;
mod source;

use clap::{Args, Parser, Subcommand};
use horizon_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "horizon",
    version,
    about = "Dynamics at infinity and blow-up analysis for polynomial ODEs"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct GlobalArgs {
    /// Compactification coefficients a (comma separated, aᵢ ≥ 1).
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub scheme_a: Option<Vec<f64>>,
    /// Relative integration tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol_rel: f64,
    /// Absolute integration tolerance.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol_abs: f64,
    /// Limit on the desingularized time.
    #[arg(long, global = true)]
    pub tau_max: Option<f64>,
    /// Worker threads for portrait sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory for reports, CSV and SVG files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct SourceArgs {
    /// Built-in scenario (see `scenario list`).
    #[arg(long, conflicts_with = "model")]
    pub scenario: Option<String>,
    /// JSON model document.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Liénard order.
    #[arg(long)]
    pub n: Option<u32>,
    /// Two-fluid lighter density.
    #[arg(long)]
    pub rho1: Option<f64>,
    /// Two-fluid heavier density.
    #[arg(long)]
    pub rho2: Option<f64>,
    /// Two-fluid left state as chart point `β,1/v`.
    #[arg(long = "uL", value_delimiter = ',')]
    pub u_left: Option<Vec<f64>>,
    /// Two-fluid right state as chart point `β,1/v`.
    #[arg(long = "uR", value_delimiter = ',')]
    pub u_right: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Signatures, scheme, C¹ certificate and equilibria at infinity.
    Analyze {
        #[command(flatten)]
        source: SourceArgs,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Integrate one orbit, estimate its blow-up time and rate.
    Blowup {
        #[command(flatten)]
        source: SourceArgs,
        /// Initial point (original coordinates unless --compact).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x0: Vec<f64>,
        /// Interpret --x0 in compactified coordinates.
        #[arg(long)]
        compact: bool,
        /// Integrate in backward time.
        #[arg(long)]
        backward: bool,
        /// Integration chart: global, quasi-polar, directional:<i>:<+|->.
        #[arg(long)]
        chart: Option<String>,
    },
    /// Sweep a seed grid forward and backward and tag limit sets.
    Portrait {
        #[command(flatten)]
        source: SourceArgs,
        /// Approximate number of seeds.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Tagging radius around registered limit sets.
        #[arg(long, default_value_t = 1e-2)]
        radius: f64,
        /// Also render an SVG of the portrait.
        #[arg(long)]
        svg: bool,
    },
    /// Render a trajectory CSV as SVG.
    Plot {
        /// Trajectory CSV.
        csv: PathBuf,
        /// Column on the horizontal axis (default: first coordinate).
        #[arg(long)]
        x: Option<String>,
        /// Column on the vertical axis (default: second coordinate).
        #[arg(long)]
        y: Option<String>,
        /// Output SVG (default: stdout).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Built-in scenarios.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    /// List registered scenarios.
    List,
}

/// Exit status of a finished command.
pub enum Outcome {
    Success,
    Unclassified,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Invalid(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Analyze { source, json } => commands::analyze(&cli.global, &source, json),
        Command::Blowup {
            source,
            x0,
            compact,
            backward,
            chart,
        } => commands::blowup(
            &cli.global,
            &source,
            &x0,
            compact,
            backward,
            chart.as_deref(),
        ),
        Command::Portrait {
            source,
            grid,
            radius,
            svg,
        } => commands::portrait(&cli.global, &source, grid, radius, svg),
        Command::Plot { csv, x, y, svg } => {
            commands::plot(&csv, x.as_deref(), y.as_deref(), svg.as_deref())
        }
        Command::Scenario {
            action: ScenarioAction::List,
        } => commands::scenario_list(),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Unclassified) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
