//! Report and trace output. Every file is written to a temporary sibling
//! and renamed into place.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use sdopt::metrics::EvaluationReport;
use sdopt::solver::{IterateTrace, Solution};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub command: String,
    pub problem: String,
    pub order: u8,
    pub created_unix_secs: f64,
    pub runs: Vec<SeedReport>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverResult>,
    pub baselines: BaselineResults,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub solution: Solution,
    pub evaluation: EvaluationReport,
    pub summary: MetricSummary,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineResults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub greedy: Option<BaselineResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdlp: Option<BaselineResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub z: Vec<f64>,
    pub evaluation: EvaluationReport,
    pub summary: MetricSummary,
    pub wall_clock_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp: Option<LpDetails>,
}

/// How the LP baseline reached its allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpDetails {
    pub samples: usize,
    pub status: String,
    /// Sample-average objective on the build scenarios.
    pub build_objective: f64,
    pub feasible_on_build: bool,
    pub shift: f64,
    pub anchor_blend: f64,
    pub pivots: usize,
}

/// Scalar metrics of one allocation; CVIs are averaged over constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub objective: f64,
    pub cvi1: f64,
    pub cvi2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obj_ratio: Option<f64>,
}

impl MetricSummary {
    pub fn from_evaluation(e: &EvaluationReport) -> Self {
        let n = e.constraints.len().max(1) as f64;
        Self {
            objective: e.objective,
            cvi1: e.constraints.iter().map(|c| c.cvi1).sum::<f64>() / n,
            cvi2: e.constraints.iter().map(|c| c.cvi2).sum::<f64>() / n,
            obj_ratio: e.obj_ratio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub objective: Stat,
    pub cvi1: Stat,
    pub cvi2: Stat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obj_ratio: Option<Stat>,
    pub wall_clock_secs: Stat,
}

impl MetricAggregate {
    fn of(entries: &[(MetricSummary, f64)]) -> Option<Self> {
        if entries.is_empty() {
            return None;
        }
        let pick = |f: fn(&MetricSummary) -> f64| Stat::of(&entries.iter().map(|(s, _)| f(s)).collect::<Vec<_>>());
        let ratios: Option<Vec<f64>> = entries.iter().map(|(s, _)| s.obj_ratio).collect();
        Some(Self {
            objective: pick(|s| s.objective),
            cvi1: pick(|s| s.cvi1),
            cvi2: pick(|s| s.cvi2),
            obj_ratio: ratios.map(|r| Stat::of(&r)),
            wall_clock_secs: Stat::of(&entries.iter().map(|(_, w)| *w).collect::<Vec<_>>()),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<MetricAggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub greedy: Option<MetricAggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdlp: Option<MetricAggregate>,
}

impl Aggregate {
    pub fn from_runs(runs: &[SeedReport]) -> Self {
        let solver: Vec<_> = runs
            .iter()
            .filter_map(|r| r.solver.as_ref().map(|s| (s.summary, s.solution.wall_clock_secs)))
            .collect();
        let baseline = |f: fn(&BaselineResults) -> Option<&BaselineResult>| {
            let v: Vec<_> = runs
                .iter()
                .filter_map(|r| f(&r.baselines).map(|b| (b.summary, b.wall_clock_secs)))
                .collect();
            MetricAggregate::of(&v)
        };
        Self {
            solver: MetricAggregate::of(&solver),
            greedy: baseline(|b| b.greedy.as_ref()),
            sdlp: baseline(|b| b.sdlp.as_ref()),
        }
    }
}

/// Output of the `evaluate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutput {
    pub format_version: u32,
    pub created_unix_secs: f64,
    pub z: Vec<f64>,
    pub evaluation: EvaluationReport,
    pub summary: MetricSummary,
}

pub fn now_unix_secs() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Runtime(format!("writing {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Trace as CSV: `t, gamma, objective_estimate, mu_size_<j>...`, then
/// `z_<i>...` when iterates were recorded.
pub fn trace_csv(trace: &IterateTrace, constraints: usize, dim: usize) -> Result<Vec<u8>, CliError> {
    let with_z = trace.rows.iter().any(|r| r.z.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string(), "gamma".into(), "objective_estimate".into()];
    header.extend((0..constraints).map(|j| format!("mu_size_{j}")));
    if with_z {
        header.extend((0..dim).map(|i| format!("z_{i}")));
    }
    let csv_err = |e: csv::Error| CliError::Runtime(format!("trace: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for row in &trace.rows {
        let mut rec = vec![row.t.to_string(), row.gamma.to_string(), row.objective_estimate.to_string()];
        rec.extend(row.mu_sizes.iter().map(|m| m.to_string()));
        if let Some(z) = &row.z {
            rec.extend(z.iter().map(|v| v.to_string()));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(format!("trace: {e}")))
}
