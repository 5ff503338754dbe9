//! Command-line front end: simulate, analyze, ground and report.

mod analyze;
mod error;
mod ground;
mod manifest;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Stub,
    Llm,
}

#[derive(Debug, Parser)]
#[command(name = "traitsim", version, about = "Generative-agent social media simulation")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation and write its artifacts.
    Simulate(simulate::SimulateArgs),
    /// Compute the CSV bundle for a finished run.
    Analyze(analyze::AnalyzeArgs),
    /// Build an agent population from platform data.
    Ground(ground::GroundArgs),
    /// Print the text summary of a run without writing files.
    Report {
        run: PathBuf,
        /// Second run to compare chain lengths against.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn report(run: PathBuf, compare: Option<PathBuf>, seed: u64) -> CliResult<()> {
    let data = analyze::load(&run)?;
    let other = compare.as_deref().map(analyze::load).transpose()?;
    let a = analyze::analyze(&data, analyze::Which::All, other.as_ref(), (2, 10), seed)?;
    print!("{}", analyze::summary(&data, &a));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Ground(a) => ground::run(a),
        Command::Report { run, compare, seed } => report(run, compare, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.category.exit_code())
        }
    }
}
