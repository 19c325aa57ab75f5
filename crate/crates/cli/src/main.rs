//! `betajacobi`: command-line driver for the ensemble experiments and checks.
//!
//! Exit status is 0 when every check passes, 1 when a check fails or a
//! computation errors, and 2 on a usage error.

mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use commands::{
    CltArgs, DualityArgs, LimitMomentsArgs, LowTempArgs, OrthoArgs, ProcessArgs, SampleArgs, SigmaArgs,
};
use output::CommandOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "betajacobi", version, about = "Beta Jacobi ensembles at high temperature")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Root seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// JSON file of defaults; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Moments u_k of the limiting measure.
    LimitMoments(LimitMomentsArgs),
    /// Eigenvalues and weights of one sampled matrix.
    SampleEnsemble(SampleArgs),
    /// Monte Carlo checks of the limit theorems.
    Clt(CltArgs),
    /// Simulate the particle system and check stationarity and decay.
    Process(ProcessArgs),
    /// Exact duality of mean moments.
    Duality(DualityArgs),
    /// Eigen-relation of the transform on the orthogonal polynomials.
    OrthoCheck(OrthoArgs),
    /// Identities of the low-temperature matrices.
    LowTempCheck(LowTempArgs),
    /// Limiting covariance matrix of the moments.
    Sigma(SigmaArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl From<betajacobi::Error> for CliError {
    fn from(e: betajacobi::Error) -> Self {
        match e {
            betajacobi::Error::Parameter { .. } | betajacobi::Error::Pole(_) => CliError::Usage(e.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}

/// Options that every subcommand shares, after merging with the config file.
#[derive(Debug, Clone)]
pub struct Common {
    pub seed: u64,
    pub format: Format,
    pub output: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut file_config = match &cli.config {
        Some(path) => config::load(path)?,
        None => serde_json::Map::new(),
    };
    let common = config::common(&cli, &mut file_config)?;
    let out = match cli.command {
        Command::LimitMoments(a) => commands::limit_moments(config::merge(&a, file_config)?),
        Command::SampleEnsemble(a) => commands::sample_ensemble(config::merge(&a, file_config)?, &common),
        Command::Clt(a) => commands::clt(config::merge(&a, file_config)?, &common),
        Command::Process(a) => commands::process(config::merge(&a, file_config)?, &common),
        Command::Duality(a) => commands::duality(config::merge(&a, file_config)?),
        Command::OrthoCheck(a) => commands::ortho_check(config::merge(&a, file_config)?),
        Command::LowTempCheck(a) => commands::low_temp_check(config::merge(&a, file_config)?),
        Command::Sigma(a) => commands::sigma(config::merge(&a, file_config)?),
    }?;
    emit(&out, &common)?;
    Ok(out.passed)
}

fn emit(out: &CommandOutput, common: &Common) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Failure(format!("writing output: {e}"));
    let mut sink: Box<dyn Write> = match &common.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_err)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match common.format {
        Format::Csv => {
            out.table.write_csv(&mut sink).map_err(|e| CliError::Failure(format!("writing csv: {e}")))?;
            if let Some(d) = &out.diagnostics {
                let text = serde_json::to_string_pretty(d).expect("json value");
                eprintln!("{text}");
            }
        }
        Format::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert("summary".into(), out.summary.clone());
            if let Some(d) = &out.diagnostics {
                doc.insert("diagnostics".into(), d.clone());
            }
            doc.insert("rows".into(), out.table.json_rows());
            serde_json::to_writer_pretty(&mut sink, &doc).map_err(|e| CliError::Failure(e.to_string()))?;
            writeln!(sink).map_err(io_err)?;
        }
    }
    sink.flush().map_err(io_err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
