//! Command-line harness for the orbit bosonization library.

mod commands;
mod config;
mod exit;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use orbit_bosonizer::verify::Suite;

use commands::{MethodArg, OrderingArg, Quantity, Status, SweepParam, SweepSpec};
use config::{ConfigArgs, RunConfig};
use exit::Failure;

#[derive(Parser)]
#[command(name = "orbit-bosonizer", version, about = "Schwarzian correlators and invariant checks on Virasoro coadjoint orbits")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an invariant suite: charts, symplectic, lemma1, gaussian, correlators or all.
    Verify {
        suite: Suite,
        /// Items per random corpus.
        #[arg(long, default_value_t = 100)]
        corpus: usize,
        /// Leave suite wall times out of the report, making it byte-reproducible.
        #[arg(long)]
        no_timing: bool,
    },
    /// Evaluate one correlator; angles in radians.
    Correlate {
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        points: Vec<f64>,
        #[arg(long, value_enum, default_value_t = OrderingArg::To)]
        ordering: OrderingArg,
        #[arg(long, value_enum, default_value_t = MethodArg::Closed)]
        method: MethodArg,
    },
    /// Tabulate quantities over a parameter range.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "z")]
        quantities: Vec<Quantity>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        points: Vec<f64>,
    },
    /// Fit the short-distance expansion of the integrated bilocal.
    Expand {
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Partition function and its assembly from regularized pieces.
    Z,
}

fn run(cli: Cli) -> Result<Status, Failure> {
    let cfg = RunConfig::from_args(&cli.config)?;
    match cli.command {
        Command::Verify { suite, corpus, no_timing } => commands::verify(&cfg, suite, corpus, !no_timing),
        Command::Correlate { points, ordering, method } => commands::correlate(&cfg, &points, ordering, method),
        Command::Sweep { param, from, to, steps, quantities, points } => {
            commands::sweep(&cfg, &SweepSpec { param, from, to, steps, quantities, points })
        }
        Command::Expand { eps } => commands::expand(&cfg, eps),
        Command::Z => commands::z(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            e.code()
        }
    }
}
