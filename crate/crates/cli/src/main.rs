use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use hubroute_core::config::Config;
use hubroute_core::experiments::{run_experiment, write_outputs, ExperimentKind};
use hubroute_core::mechanism::{run_auction, verify_budget_balance, MatchProblem};
use hubroute_core::simnet::{dump_workload, generate_workload};

#[derive(Debug, Parser)]
#[command(name = "hubroute", version, about = "Incentive-aware request routing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write metrics.csv, summary.txt and manifest.txt.
    Run {
        #[arg(long, value_parser = parse_kind)]
        experiment: ExperimentKind,
        /// TOML config; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a config file and report the first invalid field.
    ValidateConfig { path: PathBuf },
    /// Write the seeded synthetic workload as JSON lines.
    GenWorkload {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one matching problem and print the allocation and payments.
    Solve { path: PathBuf },
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse()
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    Config::from_toml_str(&text).with_context(|| format!("config {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { experiment, config, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            let output = run_experiment(experiment, &cfg, seed)?;
            write_outputs(&out, &output, &cfg)?;
            print!("{}", output.summary.render());
            println!("outputs written to {}", out.display());
        }
        Command::ValidateConfig { path } => {
            load_config(Some(&path))?;
            println!("{}: ok", path.display());
        }
        Command::GenWorkload { config, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            let text = dump_workload(&generate_workload(seed, &cfg.workload));
            match out {
                Some(path) => fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?,
                None => io::stdout().lock().write_all(text.as_bytes()).context("cannot write workload to stdout")?,
            }
        }
        Command::Solve { path } => {
            let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
            let problem = MatchProblem::parse(&text).with_context(|| format!("problem {}", path.display()))?;
            let (alloc, payments) = run_auction(&problem)?;
            print!("{}", alloc.dump(&problem));
            print!("{}", payments.dump(&problem));
            let (balanced, surplus) = verify_budget_balance(&payments, &alloc);
            if !balanced {
                bail!("payments run a deficit of {surplus}");
            }
            println!("budget_surplus={surplus}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
