use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sflow_cli::config::Format;
use sflow_cli::{run_flow_compare, run_property_suite, table, ExperimentConfig, Suite};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sflow", version, about = "Spectral flow engines and property suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; SFLOW_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured engines and compare them.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a property suite and write its JSON report.
    Suite {
        #[arg(value_enum)]
        name: Suite,
    },
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("SFLOW_THREADS") {
        Ok(v) => Ok(Some(v.trim().parse().with_context(|| format!("SFLOW_THREADS={v:?} is not a thread count"))?)),
        Err(_) => Ok(flag),
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Ok(true) on success, Ok(false) on a tolerance or invariant failure.
fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = threads(cli.common.threads)? {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let c = &cli.common;
    match cli.command {
        Command::Compare { config } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            let format = c.format.unwrap_or(cfg.output.format);
            let out = c.out.clone().or_else(|| cfg.output.path.clone());
            let cmp = run_flow_compare(&cfg)?;
            emit(&table::render(&cmp.rows, format)?, &out)?;
            if c.verbose {
                for (w, s) in &cmp.spread {
                    eprintln!("w = {w}: spread {s:e} (tolerance {:e})", cmp.tolerance);
                }
            }
            if !cmp.passed {
                eprintln!("engines disagree beyond tolerance {}", cmp.tolerance);
            }
            Ok(cmp.passed)
        }
        Command::Suite { name } => {
            let report = run_property_suite(name, c.seed.unwrap_or(42))?;
            emit(&(serde_json::to_string_pretty(&report)? + "\n"), &c.out)?;
            for ch in report.checks.iter().filter(|ch| c.verbose || !ch.passed) {
                eprintln!("{} {}: {:e} (tolerance {:e})", if ch.passed { "ok  " } else { "FAIL" }, ch.name, ch.value, ch.tolerance);
            }
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
