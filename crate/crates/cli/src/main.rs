//! `condstop`: command-line front end for conditional optimal stopping.

mod battery;
mod commands;
mod load;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use condstop::{Exact, Float, Scalar};

use crate::report::{CliError, Report};

#[derive(Parser, Debug)]
#[command(
    name = "condstop",
    version,
    about = "Conditional optimal stopping on trees and Markov chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Equilibrium with early stopping preference by backward recursion.
    Solve(Common),
    /// Precommitted optimal stopping time of the time-0 agent.
    Precommit(Common),
    /// One or more rounds of the best-response map.
    Phi {
        #[command(flatten)]
        common: Common,
        /// Policy file.
        #[arg(long)]
        policy: PathBuf,
        /// Number of rounds.
        #[arg(long, default_value_t = 1)]
        iterate: usize,
    },
    /// All equilibria on a finite tree or all periodic Markov equilibria.
    Enumerate(Common),
    /// Checks a Snell pair or an equilibrium policy.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Snell pair file with `V` and `S` per atom.
        #[arg(long, conflicts_with = "policy")]
        pair: Option<PathBuf>,
        /// Policy file.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Runs the full battery on a built-in model.
    Example {
        /// binomial, two-state or minnie-donald.
        name: String,
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        output: Output,
    },
    /// Finite-horizon truncations of an infinite-horizon chain.
    Truncate {
        #[command(flatten)]
        common: Common,
        /// Largest horizon solved.
        #[arg(long, default_value_t = 40)]
        max_horizon: usize,
        /// Number of horizons that must agree.
        #[arg(long, default_value_t = 3)]
        window: usize,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Model file, `builtin:NAME`, a built-in name, `random:SEED` or
    /// `random-markov:SEED`.
    #[arg(long)]
    model: String,
    /// Finite horizon; unrolls a Markov chain to this depth.
    #[arg(long)]
    horizon: Option<usize>,
    /// Period of Markov policies; selects the infinite-horizon operations.
    #[arg(long)]
    period: Option<usize>,
    /// Tie-breaking filter for enumerate (default all).
    #[arg(long, value_enum)]
    preference: Option<Preference>,
    #[command(flatten)]
    params: Params,
    #[command(flatten)]
    output: Output,
}

/// Overrides for the built-in chains.
#[derive(Args, Debug, Clone, Default)]
pub struct Params {
    /// Discount factor, a rational such as 9/10.
    #[arg(long)]
    pub discount: Option<String>,
    /// Payoff parameter `a`.
    #[arg(long = "a")]
    pub a: Option<String>,
    /// Payoff parameter `b` of the five-state chain.
    #[arg(long = "b")]
    pub b: Option<String>,
    /// Transition row of state 2 in the two-state chain, `p20,p21,p22`.
    #[arg(long)]
    pub row2: Option<String>,
    /// Initial state of the five-state chain, 1 or 2.
    #[arg(long)]
    pub initial: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// Use f64 arithmetic instead of exact rationals.
    #[arg(long)]
    float: bool,
    /// Relative comparison tolerance in float mode (default 1e-9).
    #[arg(long, requires = "float")]
    eps: Option<f64>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preference {
    Early,
    Late,
    All,
}

impl Command {
    fn output(&self) -> &Output {
        match self {
            Command::Solve(c) | Command::Precommit(c) | Command::Enumerate(c) => &c.output,
            Command::Phi { common, .. }
            | Command::Verify { common, .. }
            | Command::Truncate { common, .. } => &common.output,
            Command::Example { output, .. } => output,
        }
    }
}

fn run<S: Scalar>(command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Solve(c) => {
            let ctx = load::Context::<S>::new(&c.model, &c.params, c.horizon)?;
            commands::solve(&ctx)
        }
        Command::Precommit(c) => {
            let ctx = load::Context::<S>::new(&c.model, &c.params, c.horizon)?;
            commands::precommit(&ctx)
        }
        Command::Phi {
            common: c,
            policy,
            iterate,
        } => {
            let ctx = load::Context::<S>::new(&c.model, &c.params, c.horizon)?;
            commands::phi(&ctx, policy, c.period, *iterate)
        }
        Command::Enumerate(c) => {
            let ctx = load::Context::<S>::new(&c.model, &c.params, c.horizon)?;
            commands::enumerate(&ctx, c.period, c.preference.unwrap_or(Preference::All))
        }
        Command::Verify {
            common: c,
            pair,
            policy,
        } => {
            let ctx = load::Context::<S>::new(&c.model, &c.params, c.horizon)?;
            commands::verify(&ctx, pair.as_deref(), policy.as_deref(), c.period)
        }
        Command::Example { name, params, .. } => battery::example::<S>(name, params),
        Command::Truncate {
            common: c,
            max_horizon,
            window,
        } => {
            let ctx = load::Context::<S>::new(&c.model, &c.params, c.horizon)?;
            commands::truncate(&ctx, *max_horizon, *window)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = cli.command.output().clone();
    if let Some(eps) = output.eps {
        if !(eps.is_finite() && eps >= 0.0) {
            eprintln!("error: --eps must be a finite nonnegative number");
            return ExitCode::from(2);
        }
        Float::set_epsilon(eps);
    }
    let start = Instant::now();
    let result = if output.float {
        run::<Float>(&cli.command)
    } else {
        run::<Exact>(&cli.command)
    };
    match result {
        Ok(mut report) => {
            report.command = std::env::args().skip(1).collect();
            report.scalar = if output.float {
                format!("float (eps {:e})", Float::epsilon())
            } else {
                "exact".into()
            };
            report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
            if output.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                );
            } else {
                print!("{}", report.render());
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
