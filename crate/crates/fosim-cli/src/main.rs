//! Command-line front end: validate scenario files, execute single runs,
//! and sweep (Q₀, α) parameter grids.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use fosim::report::{run_scenario, run_sweep};
use fosim::scenario::Scenario;

#[derive(Parser)]
#[command(
    name = "fosim",
    version,
    about = "Deterministic simulator of load-aware routing and priority-swap fast failover \
             on a dual-band (wired + wireless mesh) network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; writes events.log, metrics.csv and metrics.json.
    Run {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Output directory (default: $FOSIM_OUT, then ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a (q0, alpha) grid over one base scenario; writes grid.csv plus
    /// per-cell artifacts in subdirectories.
    Sweep {
        /// Base scenario JSON file; its weights are replaced per cell.
        scenario: PathBuf,
        /// Comma-separated Q0 values, e.g. --q0 0.1,0.3,0.5
        #[arg(long, value_delimiter = ',', required = true)]
        q0: Vec<f64>,
        /// Comma-separated alpha values, e.g. --alpha 10,20,30
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        /// Output directory (default: $FOSIM_OUT, then ./out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a scenario file without running it.
    Validate {
        /// Scenario JSON file.
        scenario: PathBuf,
    },
}

/// Output directory precedence: `--out`, then `$FOSIM_OUT`, then `./out`.
fn resolve_out(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("FOSIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load(path: &PathBuf) -> anyhow::Result<Scenario> {
    Scenario::from_path(path).with_context(|| format!("loading {}", path.display()))
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { scenario, out, seed } => {
            let s = load(&scenario)?;
            let dir = resolve_out(out);
            let row = run_scenario(&s, &dir, seed)?;
            println!(
                "scenario={} satisfied={} max_load={:.6} recoveries={}",
                row.scenario,
                row.satisfied,
                row.max_load,
                row.recovery_ms.len()
            );
            for (i, rd) in row.recovery_ms.iter().enumerate() {
                println!("recovery[{i}] rd_ms={rd:.6}");
            }
            println!("artifacts: {}", dir.display());
        }
        Command::Sweep {
            scenario,
            q0,
            alpha,
            out,
        } => {
            let s = load(&scenario)?;
            let dir = resolve_out(out);
            let sweep = run_sweep(&s, &q0, &alpha, &dir)?;
            print!("{}", sweep.grid_csv);
            println!("artifacts: {}", dir.display());
        }
        Command::Validate { scenario } => {
            let s = load(&scenario)?;
            println!(
                "ok: {} (nodes={} links={} events={})",
                s.name,
                s.topology.nodes.len(),
                s.topology.links.len(),
                s.events.len()
            );
        }
    }
    Ok(())
}
