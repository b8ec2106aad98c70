//! Run execution with file artifacts, and (Q₀, α) grid sweeps.
//!
//! A run writes three files into its output directory: `events.log` (the
//! engine's line log), `metrics.csv` (the per-flow table, one schema
//! forever), and `metrics.json` (everything, pretty-printed). A sweep runs
//! each parameter cell in its own thread and own subdirectory — cells share
//! nothing — then assembles `grid.csv` with one row per Q₀ and one column
//! per α, each cell the satisfied-demand count. All numeric output is fixed
//! six-decimal, so identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::metrics::Metrics;
use crate::scenario::{Scenario, ScenarioError, WeightsSpec};

/// One run's summary: what a sweep table or a CLI invocation reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub scenario: String,
    pub q0: f64,
    pub alpha: f64,
    /// Flows whose full rate fit the residual capacity at admission.
    pub satisfied: usize,
    /// Peak of the load-distribution index over the run.
    pub max_load: f64,
    /// Recovery delay of each handled failure, in order.
    pub recovery_ms: Vec<f64>,
    /// Loss percentage per flow, ascending flow id.
    pub flow_loss_pct: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// What `metrics.json` contains.
#[derive(Serialize)]
struct MetricsDocument<'a> {
    scenario: &'a str,
    seed: u64,
    metrics: &'a Metrics,
}

/// Runs one scenario and writes `events.log`, `metrics.csv` and
/// `metrics.json` into `out_dir` (created if missing).
pub fn run_scenario(
    scenario: &Scenario,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<ReportRow, ReportError> {
    let sim = scenario.build_simulation(seed_override)?;
    let output = sim.run();
    fs::create_dir_all(out_dir).map_err(|source| ReportError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    write_file(out_dir, "events.log", &output.event_log)?;
    write_file(out_dir, "metrics.csv", &metrics_csv(&output.metrics))?;
    let doc = MetricsDocument {
        scenario: &scenario.name,
        seed: seed_override.unwrap_or(scenario.seed),
        metrics: &output.metrics,
    };
    let json = serde_json::to_string_pretty(&doc).expect("metrics serialization cannot fail");
    write_file(out_dir, "metrics.json", &(json + "\n"))?;
    Ok(summarize(scenario, &output.metrics))
}

/// Result of a grid sweep: every cell's outcome plus the assembled grid.
#[derive(Debug)]
pub struct SweepResult {
    /// One entry per (q0, alpha) cell, in row-major order; errors keep the
    /// sweep going and surface here as messages.
    pub cells: Vec<(f64, f64, Result<ReportRow, String>)>,
    /// The `grid.csv` contents: satisfied-demand counts, q0 rows × α columns.
    pub grid_csv: String,
}

/// Runs the base scenario once per (q0, α) pair, each cell concurrently in
/// its own subdirectory of `out_dir`, and writes `grid.csv` at the top.
pub fn run_sweep(
    base: &Scenario,
    q0_list: &[f64],
    alpha_list: &[f64],
    out_dir: &Path,
) -> Result<SweepResult, ReportError> {
    if q0_list.is_empty() || alpha_list.is_empty() {
        return Err(ScenarioError::Invalid(
            "sweep requires at least one q0 and one alpha".to_string(),
        )
        .into());
    }
    fs::create_dir_all(out_dir).map_err(|source| ReportError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let cells: Vec<(f64, f64)> = q0_list
        .iter()
        .flat_map(|q0| alpha_list.iter().map(move |alpha| (*q0, *alpha)))
        .collect();
    let mut results: Vec<Option<Result<ReportRow, String>>> = vec![None; cells.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = cells
            .iter()
            .enumerate()
            .map(|(i, &(q0, alpha))| {
                scope.spawn(move || {
                    let mut cell = base.clone();
                    cell.name = format!("{}-q0_{q0}-alpha_{alpha}", base.name);
                    cell.weights = WeightsSpec { q0, alpha };
                    let cell_dir = out_dir.join(format!("q0_{q0}-alpha_{alpha}"));
                    (i, run_scenario(&cell, &cell_dir, None).map_err(|e| e.to_string()))
                })
            })
            .collect();
        for handle in handles {
            let (i, result) = handle.join().expect("sweep cell thread cannot panic");
            results[i] = Some(result);
        }
    });
    let results: Vec<Result<ReportRow, String>> = results
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect();

    let mut grid = String::from("q0/alpha");
    for alpha in alpha_list {
        write!(grid, ",{alpha}").unwrap();
    }
    grid.push('\n');
    for (row, q0) in q0_list.iter().enumerate() {
        write!(grid, "{q0}").unwrap();
        for col in 0..alpha_list.len() {
            match &results[row * alpha_list.len() + col] {
                Ok(r) => write!(grid, ",{}", r.satisfied).unwrap(),
                Err(_) => grid.push_str(",error"),
            }
        }
        grid.push('\n');
    }
    write_file(out_dir, "grid.csv", &grid)?;

    let cells_out = cells
        .into_iter()
        .zip(results)
        .map(|((q0, alpha), r)| (q0, alpha, r))
        .collect();
    Ok(SweepResult {
        cells: cells_out,
        grid_csv: grid,
    })
}

fn summarize(scenario: &Scenario, m: &Metrics) -> ReportRow {
    ReportRow {
        scenario: scenario.name.clone(),
        q0: scenario.weights.q0,
        alpha: scenario.weights.alpha,
        satisfied: m.flows.iter().filter(|f| f.satisfied).count(),
        max_load: m
            .load_series
            .iter()
            .map(|s| s.load)
            .fold(0.0, f64::max),
        recovery_ms: m.recoveries.iter().map(|r| r.rd_ms).collect(),
        flow_loss_pct: m.flows.iter().map(|f| f.loss_pct).collect(),
    }
}

/// The fixed per-flow table. The header never changes; numbers are
/// six-decimal; a blackholed flow shows `-` as its final path.
fn metrics_csv(m: &Metrics) -> String {
    let mut out = String::from(
        "flow,src,dst,rate_mbps,satisfied,final_path,delivered_mb,dropped_mb,offered_mb,loss_pct\n",
    );
    for f in &m.flows {
        let path = f
            .final_path
            .as_ref()
            .map(|p| p.to_string())
            .unwrap_or_else(|| "-".to_string());
        writeln!(
            out,
            "{},{},{},{:.6},{},{},{:.6},{:.6},{:.6},{:.6}",
            f.flow, f.src, f.dst, f.rate_mbps, f.satisfied, path, f.delivered_mb, f.dropped_mb,
            f.offered_mb, f.loss_pct
        )
        .unwrap();
    }
    out
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), ReportError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| ReportError::Io { path, source })
}
