//! Command-line front end over the estimation library: synthetic data
//! generation, effect-curve estimation, benchmark studies and stability
//! ranking. Every command is deterministic given its full flag set,
//! including --seed; only wall-clock columns in benchmark tables vary.

mod benchmark;
mod effect;
mod rank;
mod simulate;
mod util;

use clap::{Parser, Subcommand};
use smint::Error;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "smint", version, about = "Intervention-effect estimation from observational data")]
struct Cli {
    /// Worker threads for replicated computations; 0 or absent uses all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset from a preset or random structural model.
    Simulate(simulate::SimulateArgs),
    /// Estimate an effect curve E[Y | do(X = x)] from a dataset.
    Effect(effect::EffectArgs),
    /// Run a benchmark experiment and write its result tables.
    Benchmark(benchmark::BenchmarkArgs),
    /// Stability-selected ranking of pairwise intervention effects.
    Rank(rank::RankArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests succeed; everything else is usage.
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure {jobs} worker thread(s): {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Effect(a) => effect::run(a),
        Command::Benchmark(a) => benchmark::run(a),
        Command::Rank(a) => rank::run(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 usage error, 2 data/format error, 3 numeric failure.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ZeroKernelWeight { .. }
        | Error::SingularFit { .. }
        | Error::InvalidBandwidth(_)
        | Error::NumericGuard(_)
        | Error::NonFinite(_) => 3,
        Error::Io(_)
        | Error::Csv(_)
        | Error::DataFormat(_)
        | Error::UnknownColumn(_)
        | Error::ShapeMismatch(_)
        | Error::MechanismMismatch { .. } => 2,
        _ => 1,
    }
}
