//! Command-line workbench for Lagrangian mechanics: conserved-integral
//! verification, Noether maps, Poisson-bracket tables, symmetry flows,
//! piecewise-conservation monitoring, and local action-angle
//! construction.
//!
//! Exit codes: 0 all checks passed, 1 a mathematical check failed,
//! 2 input error.

mod commands;
mod report;
mod system;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use noether_core::sample::NumericEq;

#[derive(Parser)]
#[command(name = "noether", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for every randomized check (identical seed => identical report).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative tolerance of numeric identity checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Sample count per numeric identity check.
    #[arg(long, global = true, default_value_t = 64)]
    trials: u32,
    /// Write the JSON report here.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    /// Conserved quantity -> symmetry generator.
    ToSymmetry,
    /// Symmetry generator -> conserved quantity.
    ToIntegral,
}

#[derive(Subcommand)]
enum Command {
    /// Verify every declared conserved quantity and generator.
    Check { file: PathBuf },
    /// Map between conserved quantities and symmetry generators.
    Noether {
        file: PathBuf,
        #[arg(long, value_enum)]
        direction: Direction,
        /// Declared name of the quantity (to-symmetry) or generator
        /// (to-integral).
        #[arg(long)]
        name: String,
        /// Reconstruction base point as `t,q1..qN,qd1..qdN`.
        #[arg(long)]
        base: Option<String>,
    },
    /// Pairwise Poisson-bracket table with closure annotations.
    Bracket {
        file: PathBuf,
        /// Conserved-quantity names (default: all declared).
        #[arg(long, value_delimiter = ',')]
        names: Option<Vec<String>>,
        /// Verify the pair-action and commutator identities for all pairs.
        #[arg(long)]
        theorems: bool,
    },
    /// Transport states along a symmetry flow.
    Flow {
        file: PathBuf,
        #[arg(long)]
        generator: String,
        /// Group parameter (default: the file's flow block).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Gauge function expression for the extended flow.
        #[arg(long)]
        gauge: Option<String>,
        /// Also evaluate the nested-bracket series at this order.
        #[arg(long)]
        series: Option<usize>,
        /// Export the transported states as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the local action-angle pipeline on the declared family.
    Liouville { file: PathBuf },
    /// Integrate declared trajectories and classify each integral as
    /// globally/locally conserved.
    Monitor {
        file: PathBuf,
        /// Export trajectories (and integral values) as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let checker = NumericEq::with_seed(cli.seed)
        .tol(cli.tol)
        .trials(cli.trials);

    let result = match &cli.command {
        Command::Check { file } => commands::check(file, &checker),
        Command::Noether { file, direction, name, base } => commands::noether(
            file,
            &checker,
            *direction == Direction::ToSymmetry,
            name,
            base.as_deref(),
        ),
        Command::Bracket { file, names, theorems } => {
            commands::bracket(file, &checker, names.as_deref(), *theorems)
        }
        Command::Flow { file, generator, epsilon, gauge, series, csv } => commands::flow(
            file,
            &checker,
            generator,
            *epsilon,
            gauge.as_deref(),
            *series,
            csv.as_deref(),
        ),
        Command::Liouville { file } => commands::liouville(file, &checker),
        Command::Monitor { file, csv } => commands::monitor(file, &checker, csv.as_deref()),
    };

    match result {
        Ok(report) => {
            report.print();
            if let Some(path) = &cli.json {
                if let Err(e) = report.write_json(path) {
                    eprintln!("error: writing {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
