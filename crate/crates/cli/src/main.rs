use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pubweight_cli::{dispatch, Command, InclusionOverrides, Overrides, Verb};

#[derive(Parser)]
#[command(
    name = "pubweight",
    version,
    about = "Weighted coauthorship model: simulate, solve, compare"
)]
struct Cli {
    #[command(subcommand)]
    verb: VerbArg,
}

#[derive(Subcommand)]
enum VerbArg {
    /// Run the engine and write snapshot tables.
    Simulate(Common),
    /// Solve the limiting pmf of integer weights.
    SolveDiscrete(Common),
    /// Solve the limiting tail function of continuous weights.
    SolveContinuous(Common),
    /// Simulate and solve, then compare the two.
    Compare(Common),
    /// Monte Carlo inclusion frequencies against the exact probabilities.
    InclusionCheck(InclusionArgs),
    /// Check the model assumptions.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "pubweight-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "n-steps")]
    n_steps: Option<u64>,
    #[arg(long)]
    replicas: Option<u32>,
    #[arg(long = "J")]
    j: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long = "tail-fraction")]
    tail_fraction: Option<f64>,
}

#[derive(Args)]
struct InclusionArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated integer weights.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<u64>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    draws: Option<u64>,
}

fn command(verb: Verb, c: Common, inclusion: InclusionOverrides) -> Command {
    Command {
        verb,
        config_path: c.config,
        out_dir: c.out,
        overrides: Overrides {
            seed: c.seed,
            n_steps: c.n_steps,
            replicas: c.replicas,
            j_max: c.j,
            h: c.h,
            t_max: c.t_max,
            tail_fraction: c.tail_fraction,
        },
        inclusion,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let none = InclusionOverrides::default;
    let cmd = match cli.verb {
        VerbArg::Simulate(c) => command(Verb::Simulate, c, none()),
        VerbArg::SolveDiscrete(c) => command(Verb::SolveDiscrete, c, none()),
        VerbArg::SolveContinuous(c) => command(Verb::SolveContinuous, c, none()),
        VerbArg::Compare(c) => command(Verb::Compare, c, none()),
        VerbArg::Validate(c) => command(Verb::Validate, c, none()),
        VerbArg::InclusionCheck(a) => command(
            Verb::InclusionCheck,
            a.common,
            InclusionOverrides {
                weights: a.weights,
                k: a.k,
                draws: a.draws,
            },
        ),
    };
    match dispatch(&cmd) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
