//! Scenario runner and report generator for seamless-redundant Wi-Fi link
//! simulations.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use redlink::report::{analyze, compare, run_scenario, with_duration_ms};
use redlink::scenario::Scenario;

#[derive(Parser)]
#[command(name = "redlink", version, about = "Seamless-redundant Wi-Fi link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario config and write traces, summary and manifest.
    Run {
        /// Scenario config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for traces and reports.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's duration, in milliseconds.
        #[arg(long)]
        duration: Option<u64>,
    },
    /// Analyze trace files into summary tables, distribution curves and an
    /// independence report.
    Analyze {
        /// Channel trace CSVs.
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Redundant-link trace CSV.
        #[arg(long)]
        redundant: Option<PathBuf>,
        /// Output directory for report files.
        #[arg(long)]
        out: PathBuf,
        /// Joint-tail threshold in milliseconds.
        #[arg(long, default_value_t = 5.0)]
        tau_ms: f64,
    },
    /// Compare two channel traces side by side.
    Compare {
        trace_a: PathBuf,
        trace_b: PathBuf,
        /// Also write the delta table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            duration,
        } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let sc = Scenario::from_toml_str(&text)?;
            let sc = with_duration_ms(sc, duration, seed);
            let artifacts = run_scenario(&sc, &out)?;
            println!("scenario '{}' complete", sc.name);
            for (ch, path) in &artifacts.channel_traces {
                println!("  channel {ch}: {}", path.display());
            }
            if let Some(p) = &artifacts.redundant_trace {
                println!("  redundant: {}", p.display());
            }
            println!("  summary:   {}", artifacts.summary.display());
            println!("  manifest:  {}", artifacts.manifest.display());
            Ok(())
        }
        Command::Analyze {
            traces,
            redundant,
            out,
            tau_ms,
        } => {
            let tau_ns = (tau_ms * 1e6) as u64;
            let artifacts = analyze(&traces, redundant.as_deref(), &out, tau_ns)?;
            println!("{}", fs::read_to_string(&artifacts.summary)?);
            println!("report files in {}", out.display());
            Ok(())
        }
        Command::Compare { trace_a, trace_b, out } => {
            let table = compare(&trace_a, &trace_b)?;
            print!("{table}");
            if let Some(path) = out {
                fs::write(&path, table)?;
            }
            Ok(())
        }
    }
}
