//! Library side of the `pdf` command line tool.

pub mod commands;
pub mod config;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::ConfigError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "pdf", version, about = "Learnable graph matrix representations: train, ablate, verify, inspect, bench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model; writes history.csv, summary.json and best.ckpt.
    Train { config: PathBuf },
    /// Train every cell of the ablation grid; writes ablation.csv.
    Ablate { config: PathBuf },
    /// Run the verification suite and print a pass/fail table.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Trials per randomized check (defaults per check when omitted).
        #[arg(long)]
        trials: Option<usize>,
        /// Multiplies every tolerance; a negative value forces failure.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true, hide = true)]
        tolerance_scale: f64,
    },
    /// Print a JSON spectral report for one graph.
    Inspect {
        graph: PathBuf,
        /// Preset name or a JSON list of [eps, k] pairs, optionally `@hop_masked(h)`.
        #[arg(long, default_value = "laplacian", allow_hyphen_values = true)]
        family: String,
        /// Comma-separated polynomial coefficients, constant term first.
        #[arg(long, allow_hyphen_values = true)]
        filter: Option<String>,
        /// Graph index when the file holds a dataset.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time training and evaluation epochs per variant; writes bench.txt.
    Bench {
        config: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
    },
}

/// Status 2 for invalid configuration or input, 1 for everything else.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    match err.downcast_ref::<pdf_core::Error>() {
        Some(
            pdf_core::Error::Config(_)
            | pdf_core::Error::InvalidSpec(_)
            | pdf_core::Error::Unknown { .. }
            | pdf_core::Error::Parse { .. }
            | pdf_core::Error::Structure(_),
        ) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

pub fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Train { config } => {
            let summary = commands::train::cmd_train(&config)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Ablate { config } => {
            let (_, csv) = commands::ablate::cmd_ablate(&config)?;
            print!("{csv}");
        }
        Command::Verify {
            seed,
            trials,
            tolerance_scale,
        } => {
            let report = commands::verify::cmd_verify(seed, trials, tolerance_scale);
            print!("{}", report.to_table());
            if !report.all_pass() {
                return Ok(EXIT_FAILURE);
            }
        }
        Command::Inspect {
            graph,
            family,
            filter,
            index,
            out,
        } => {
            let g = commands::inspect::load_graph(&graph, index)?;
            let ops = commands::inspect::parse_family(&family)?;
            let filter = filter.as_deref().map(commands::inspect::parse_filter).transpose()?;
            let report = commands::inspect::cmd_inspect(&g, &ops, filter.as_ref())?;
            let text = serde_json::to_string_pretty(&report)?;
            if let Some(path) = out {
                fs::write(path, &text)?;
            }
            println!("{text}");
        }
        Command::Bench { config, epochs } => {
            let (_, table) = commands::bench::cmd_bench(&config, epochs)?;
            print!("{table}");
        }
    }
    Ok(EXIT_OK)
}
