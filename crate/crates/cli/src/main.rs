//! `aip`: dataset generation, training, counterfactual search, benchmarks and the two
//! downstream applications from one binary.

mod commands;
mod config;
mod error;

use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{AugmentOpts, BenchOpts, ExplainOpts, FileConfig, GenDataOpts, RankOpts, SweepOpts, TrainOpts};
use error::{CliError, Status};

#[derive(Debug, Parser)]
#[command(name = "aip", version, about = "Attribute-informed counterfactual toolkit")]
struct Cli {
    /// TOML file with a section per subcommand; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-query work. Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic attributed dataset.
    GenData(GenDataOpts),
    /// Train target, discriminator and generative model; write checkpoints and a manifest.
    Train(TrainOpts),
    /// Search a counterfactual for one query.
    Explain(ExplainOpts),
    /// Compare counterfactual methods on test queries.
    Bench(BenchOpts),
    /// Flipping ratio and latent perturbation against the closeness weight.
    Sweep(SweepOpts),
    /// Rank attributes by how much a counterfactual changed them.
    Rank(RankOpts),
    /// Add counterfactuals to the training split and compare retrained classifiers.
    Augment(AugmentOpts),
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let jobs = cli.jobs.or(file.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(CliError::user("--jobs must be at least 1"));
    }
    match cli.command {
        Command::GenData(o) => commands::gen_data(o.or(file.gen_data)),
        Command::Train(o) => commands::train(o.or(file.train)),
        Command::Explain(o) => {
            let mut o = o.or(file.explain);
            o.search = o.search.or(file.search);
            commands::explain(o)
        }
        Command::Bench(o) => {
            let mut o = o.or(file.bench);
            o.search = o.search.or(file.search);
            commands::bench(o, jobs)
        }
        Command::Sweep(o) => {
            let mut o = o.or(file.sweep);
            o.search = o.search.or(file.search);
            commands::sweep(o, jobs)
        }
        Command::Rank(o) => commands::rank(o.or(file.rank)),
        Command::Augment(o) => {
            let mut o = o.or(file.augment);
            o.search = o.search.or(file.search);
            commands::augment(o)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("error: invalid arguments"));
            return ExitCode::from(Status::User as u8);
        }
    };
    panic::set_hook(Box::new(|info| {
        let msg = info
            .payload()
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| info.payload().downcast_ref::<String>().cloned())
            .unwrap_or_default();
        let at = info.location().map(|l| format!(" at {}:{}", l.file(), l.line())).unwrap_or_default();
        eprintln!("error: internal failure{at}: {msg}");
    }));
    let status = match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(status)) => status,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.status
        }
        Err(_) => Status::Internal,
    };
    ExitCode::from(status as u8)
}
