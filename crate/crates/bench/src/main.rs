use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smba_bench::config::schema_json;
use smba_bench::exit_code;
use smba_bench::generate::{cmd_generate, GenerateArgs};
use smba_bench::rates::{cmd_rates, RatesArgs};
use smba_bench::solve::{cmd_solve, SolveArgs};
use smba_bench::svm::{cmd_svm, SvmArgs};

/// Stochastic moving-ball solver benchmarks.
#[derive(Debug, Parser)]
#[command(name = "smba", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random QCQP instance.
    Generate(GenerateArgs),
    /// Run the solver as described by a config file.
    Solve(SolveArgs),
    /// Fit log-log convergence slopes to averaged-iterate traces.
    Rates(RatesArgs),
    /// Train and evaluate the multiple-kernel SVM.
    Svm(SvmArgs),
    /// Print the JSON Schema of `solve` config files.
    Schema {
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a).map(drop),
        Command::Rates(a) => cmd_rates(&a).map(drop),
        Command::Svm(a) => cmd_svm(&a).map(drop),
        Command::Schema { out: Some(path) } => Ok(std::fs::write(path, schema_json())?),
        Command::Schema { out: None } => {
            print!("{}", schema_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
