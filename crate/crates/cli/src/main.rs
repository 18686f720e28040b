//! `uavnet` experiment driver.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use uavnet::experiment::SweepVar;
use uavnet::{ExperimentSpec, Scheme, SimConfig};

#[derive(Parser)]
#[command(name = "uavnet", version, about = "UAV-assisted vehicular clustering simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme (the config's `scheme` unless --scheme is given).
    Run(RunArgs),
    /// Run every scheme on shared seeds and compare them.
    Compare(RunArgs),
    /// Repeat a comparison over a list of values of one parameter.
    Sweep(SweepArgs),
    /// Re-aggregate the traces of an existing output directory.
    Metrics(MetricsArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Base configuration file (flat `key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scheme names, comma separated.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<Scheme>,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Seed base; defaults to the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    vehicles: Option<usize>,
    /// Simulated time in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Extra overrides, `key=value`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; must not exist or be empty.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Swept parameter: vehicles | duration.
    #[arg(long)]
    var: SweepVar,
    /// Strictly increasing values, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Directory written by `run`, `compare` or `sweep`.
    dir: PathBuf,
}

fn base_config(a: &RunArgs) -> Result<SimConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            SimConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => SimConfig::default(),
    };
    for kv in &a.overrides {
        let Some((k, v)) = kv.split_once('=') else { bail!("--set expects KEY=VALUE, got `{kv}`") };
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(n) = a.vehicles {
        cfg.num_vehicles = n;
    }
    if let Some(d) = a.duration {
        cfg.duration = d;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn spec(a: &RunArgs, default_schemes: Vec<Scheme>, sweep: SweepVar, values: Vec<String>) -> Result<ExperimentSpec> {
    let base = base_config(a)?;
    base.validate()?;
    let schemes = if a.scheme.is_empty() { default_schemes } else { a.scheme.clone() };
    let mut unique = schemes.clone();
    unique.sort();
    unique.dedup();
    if unique.len() != schemes.len() {
        bail!("--scheme lists a scheme twice");
    }
    let spec = ExperimentSpec { seed_base: base.seed, base, schemes, sweep, values, runs: a.runs, workers: a.workers };
    spec.check()?;
    Ok(spec)
}

fn execute(command: Command) -> Result<PathBuf> {
    match command {
        Command::Run(a) => {
            let default = vec![base_config(&a)?.scheme];
            let s = spec(&a, default, SweepVar::None, Vec::new())?;
            output::write_experiment(&a.out, &s)?;
            Ok(a.out)
        }
        Command::Compare(a) => {
            let s = spec(&a, Scheme::ALL.to_vec(), SweepVar::None, Vec::new())?;
            output::write_experiment(&a.out, &s)?;
            Ok(a.out)
        }
        Command::Sweep(a) => {
            if a.var == SweepVar::None {
                bail!("--var must be vehicles or duration");
            }
            let s = spec(&a.run, Scheme::ALL.to_vec(), a.var, a.values)?;
            output::write_experiment(&a.run.out, &s)?;
            Ok(a.run.out)
        }
        Command::Metrics(m) => {
            output::reaggregate(&m.dir)?;
            Ok(m.dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(dir) => {
            println!("wrote {}", display(&dir));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
