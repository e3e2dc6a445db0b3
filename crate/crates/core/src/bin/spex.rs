//! Command-line front end: each subcommand reads one JSON configuration and
//! writes its outputs plus a manifest into the output directory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spex::commands::{cmd_bench_accept, cmd_depmap, cmd_fit, cmd_oracle, cmd_simulate, cmd_transform, RunContext};
use spex::io::Manifest;

#[derive(Parser)]
#[command(name = "spex", version, about = "Simulation and fitting of max-stable and r-Pareto spatial extremes")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate max-stable or r-Pareto replicates.
    Simulate(Common),
    /// Fit a model to threshold exceedances.
    Fit(Common),
    /// Pairwise extremal-coefficient maps against reference sites.
    Depmap(Common),
    /// Acceptance rates of the r-Pareto rejection samplers.
    BenchAccept(Common),
    /// Empirical transform of raw data to Pareto or Fréchet margins.
    Transform(Common),
    /// Brute-force reference values for debugging.
    #[command(hide = true)]
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> spex::Result<Manifest> {
    let (common, cmd): (&Common, fn(&RunContext) -> spex::Result<Manifest>) = match &cli.command {
        Cmd::Simulate(c) => (c, cmd_simulate),
        Cmd::Fit(c) => (c, cmd_fit),
        Cmd::Depmap(c) => (c, cmd_depmap),
        Cmd::BenchAccept(c) => (c, cmd_bench_accept),
        Cmd::Transform(c) => (c, cmd_transform),
        Cmd::Oracle(c) => (c, cmd_oracle),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(spex::Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| spex::Error::Config(format!("thread pool: {e}")))?;
    }
    let ctx = RunContext::load(&common.config, common.seed, common.out.clone())?;
    cmd(&ctx)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(m) => {
            println!("{}: wrote {} and manifest.json", m.command, m.outputs.join(", "));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
