use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Deserialize;

use sdopt::baseline_lp::{greedy_portfolio, greedy_transport, solve_sdlp, SdlpOptions};
use sdopt::metrics::{evaluate, EvaluationOptions, EvaluationReport};
use sdopt::problems::ReferenceCoupling;
use sdopt::scenario::{
    load_scenarios_csv, sample_batch, write_scenarios_csv, RandomSeed, ScenarioBatch, STREAM_EVALUATION,
    STREAM_EVALUATION_REFERENCE, STREAM_GENERATE, STREAM_REFERENCE, STREAM_SCENARIOS,
};
use sdopt::solver::{solve, Sources};

use crate::config::{GenerateTarget, ProblemKind, Resolved};
use crate::report::{
    now_unix_secs, trace_csv, write_atomic, write_json, Aggregate, BaselineResult, BaselineResults, EvaluationOutput,
    LpDetails, MetricSummary, RunReport, SeedReport, SolverResult, FORMAT_VERSION,
};
use crate::CliError;

pub struct RunOptions {
    pub out: PathBuf,
    pub seeds: Option<Vec<u64>>,
    pub quiet: bool,
}

impl RunOptions {
    fn seeds(&self, r: &Resolved) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| r.config.seeds.clone())
    }

    pub fn progress(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn runtime(seed: u64, what: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("seed {seed}: {what}: {e}"))
}

/// Held-out scenarios and, when the problem needs them, reference samples.
fn holdout(r: &Resolved, seed: u64) -> Result<(ScenarioBatch, Option<ScenarioBatch>), CliError> {
    let n = r.config.evaluation.samples;
    let rs = RandomSeed(seed);
    let batch =
        sample_batch(&r.eval_scenarios, n, &mut rs.stream(STREAM_EVALUATION)).map_err(|e| runtime(seed, "holdout", e))?;
    let reference = match &r.eval_reference {
        Some(src) => Some(
            sample_batch(src, n, &mut rs.stream(STREAM_EVALUATION_REFERENCE)).map_err(|e| runtime(seed, "holdout", e))?,
        ),
        None => None,
    };
    Ok((batch, reference))
}

fn evaluation_options(r: &Resolved, optimum: Option<f64>) -> EvaluationOptions {
    EvaluationOptions {
        grid_points: r.config.evaluation.grid_points,
        interval: r.interval,
        optimum,
        ..EvaluationOptions::default()
    }
}

fn evaluate_on(
    r: &Resolved,
    z: &[f64],
    data: &(ScenarioBatch, Option<ScenarioBatch>),
    optimum: Option<f64>,
    seed: u64,
    what: &str,
) -> Result<EvaluationReport, CliError> {
    evaluate(r.problem.as_ref(), z, &data.0, data.1.as_ref(), &evaluation_options(r, optimum))
        .map_err(|e| runtime(seed, what, e))
}

fn run_baselines(
    r: &Resolved,
    seed: u64,
    data: &(ScenarioBatch, Option<ScenarioBatch>),
    opts: &RunOptions,
) -> Result<BaselineResults, CliError> {
    let mut out = BaselineResults::default();
    let rs = RandomSeed(seed);
    let build = |n: usize| -> Result<(ScenarioBatch, Option<ScenarioBatch>), CliError> {
        let batch = sample_batch(&r.scenarios, n, &mut rs.stream(STREAM_SCENARIOS)).map_err(|e| runtime(seed, "build", e))?;
        let reference = match &r.reference {
            Some(src) => {
                Some(sample_batch(src, n, &mut rs.stream(STREAM_REFERENCE)).map_err(|e| runtime(seed, "build", e))?)
            }
            None => None,
        };
        Ok((batch, reference))
    };

    if let Some(cfg) = &r.config.baselines.sdlp {
        opts.progress(format!("seed {seed}: sdlp with {} samples", cfg.samples));
        let started = Instant::now();
        let (batch, reference) = build(cfg.samples)?;
        let y = r
            .problem
            .reference_samples(0, &batch, reference.as_ref())
            .map_err(|e| runtime(seed, "sdlp", e))?;
        let anchor = match &r.kind {
            ProblemKind::Portfolio(spec) if r.problem.constraints()[0].reference == ReferenceCoupling::Coupled => {
                Some(spec.reference_weights().to_vec())
            }
            _ => None,
        };
        let sol = solve_sdlp(&batch, &y, &SdlpOptions { anchor, ..SdlpOptions::default() })
            .map_err(|e| runtime(seed, "sdlp", e))?;
        let (Some(z), Some(build_objective)) = (sol.z.clone(), sol.objective) else {
            return Err(runtime(seed, "sdlp", format!("LP status {:?}", sol.status)));
        };
        let wall = started.elapsed().as_secs_f64();
        let evaluation = evaluate_on(r, &z, data, None, seed, "sdlp evaluation")?;
        out.sdlp = Some(BaselineResult {
            z,
            summary: MetricSummary::from_evaluation(&evaluation),
            evaluation,
            wall_clock_secs: wall,
            lp: Some(LpDetails {
                samples: cfg.samples,
                status: format!("{:?}", sol.status).to_lowercase(),
                build_objective,
                feasible_on_build: sol.feasible_on_build,
                shift: sol.shift,
                anchor_blend: sol.anchor_blend,
                pivots: sol.pivots,
            }),
        });
    }

    if r.config.baselines.greedy {
        let started = Instant::now();
        let z = match &r.kind {
            ProblemKind::Portfolio(_) => greedy_portfolio(&build(r.config.baselines.greedy_samples)?.0),
            ProblemKind::Transport(spec) => greedy_transport(spec),
        };
        let wall = started.elapsed().as_secs_f64();
        let optimum = out.sdlp.as_ref().map(|s| s.summary.objective);
        let evaluation = evaluate_on(r, &z, data, optimum, seed, "greedy evaluation")?;
        out.greedy = Some(BaselineResult {
            z,
            summary: MetricSummary::from_evaluation(&evaluation),
            evaluation,
            wall_clock_secs: wall,
            lp: None,
        });
    }
    Ok(out)
}

fn trace_path(out: &Path, prefix: &str, seed: u64) -> PathBuf {
    out.join(format!("{prefix}_seed{seed}.csv"))
}

fn finish_report(r: &Resolved, command: &str, runs: Vec<SeedReport>) -> RunReport {
    RunReport {
        format_version: FORMAT_VERSION,
        command: command.into(),
        problem: r.kind.name().into(),
        order: r.config.constraint.order.as_u8(),
        created_unix_secs: now_unix_secs(),
        aggregate: Aggregate::from_runs(&runs),
        runs,
    }
}

pub fn cmd_solve(r: &Resolved, opts: &RunOptions) -> Result<RunReport, CliError> {
    let base = r
        .config
        .solver
        .clone()
        .ok_or_else(|| CliError::Config("at /solver: solve needs a solver block".into()))?;
    let mut runs = Vec::new();
    for seed in opts.seeds(r) {
        let started = Instant::now();
        let data = holdout(r, seed)?;
        let baselines = run_baselines(r, seed, &data, opts)?;

        opts.progress(format!("seed {seed}: solving for {} iterations", base.iterations));
        let mut config = base.clone();
        config.seed = seed;
        let sources = match &r.reference {
            Some(reference) => Sources::with_reference(&r.scenarios, reference),
            None => Sources::new(&r.scenarios),
        };
        let (solution, trace) = solve(r.problem.as_ref(), &config, &sources).map_err(|e| runtime(seed, "solve", e))?;
        if solution.truncated {
            opts.progress(format!("seed {seed}: time limit reached after {} iterations", solution.iterations));
        }
        let optimum = baselines.sdlp.as_ref().map(|s| s.summary.objective);
        let evaluation = evaluate_on(r, &solution.z_averaged, &data, optimum, seed, "evaluation")?;
        let csv = trace_csv(&trace, r.problem.constraints().len(), r.problem.decision_dim())?;
        write_atomic(&trace_path(&opts.out, &r.config.output.trace, seed), &csv)?;
        runs.push(SeedReport {
            seed,
            solver: Some(SolverResult {
                summary: MetricSummary::from_evaluation(&evaluation),
                solution,
                evaluation,
            }),
            baselines,
            wall_clock_secs: started.elapsed().as_secs_f64(),
        });
    }
    let report = finish_report(r, "solve", runs);
    write_json(&opts.out.join(&r.config.output.report), &report)?;
    Ok(report)
}

pub fn cmd_baseline(r: &Resolved, opts: &RunOptions) -> Result<RunReport, CliError> {
    if r.config.baselines.sdlp.is_none() && !r.config.baselines.greedy {
        return Err(CliError::Config("at /baselines: no baseline enabled".into()));
    }
    let mut runs = Vec::new();
    for seed in opts.seeds(r) {
        let started = Instant::now();
        let data = holdout(r, seed)?;
        let baselines = run_baselines(r, seed, &data, opts)?;
        runs.push(SeedReport {
            seed,
            solver: None,
            baselines,
            wall_clock_secs: started.elapsed().as_secs_f64(),
        });
    }
    let report = finish_report(r, "baseline", runs);
    write_json(&opts.out.join(&r.config.output.baseline_report), &report)?;
    Ok(report)
}

/// Writes the configured number of samples to `out`, or to
/// `out/scenarios.csv` when `out` is a directory.
pub fn cmd_generate(r: &Resolved, opts: &RunOptions) -> Result<PathBuf, CliError> {
    let g = r
        .config
        .generate
        .as_ref()
        .ok_or_else(|| CliError::Config("at /generate: generate needs a generate block".into()))?;
    let seed = opts.seeds(r)[0];
    let source = match g.source {
        GenerateTarget::Scenarios => &r.scenarios,
        GenerateTarget::Reference => r.reference.as_ref().expect("checked by validation"),
    };
    let batch = sample_batch(source, g.samples, &mut RandomSeed(seed).stream(STREAM_GENERATE))
        .map_err(|e| runtime(seed, "generate", e))?;
    let mut bytes = Vec::new();
    write_scenarios_csv(&batch, &mut bytes).map_err(|e| CliError::Runtime(e.to_string()))?;
    let path = if opts.out.is_dir() { opts.out.join("scenarios.csv") } else { opts.out.clone() };
    write_atomic(&path, &bytes)?;
    Ok(path)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SolutionFile {
    Vector(Vec<f64>),
    Object { z: Vec<f64> },
}

pub struct EvaluateInputs {
    pub solution: PathBuf,
    pub scenarios: PathBuf,
    pub reference: Option<PathBuf>,
}

pub fn cmd_evaluate(r: &Resolved, inputs: &EvaluateInputs, opts: &RunOptions) -> Result<EvaluationOutput, CliError> {
    let text = fs::read_to_string(&inputs.solution)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", inputs.solution.display())))?;
    let z = match serde_json::from_str::<SolutionFile>(&text)
        .map_err(|e| CliError::Runtime(format!("{}: expected a JSON array or {{\"z\": [...]}}: {e}", inputs.solution.display())))?
    {
        SolutionFile::Vector(z) | SolutionFile::Object { z } => z,
    };
    if z.len() != r.problem.decision_dim() {
        return Err(CliError::Runtime(format!(
            "solution has {} entries, problem expects {}",
            z.len(),
            r.problem.decision_dim()
        )));
    }
    r.problem
        .check_feasible(&z, EvaluationOptions::default().feasibility_tol)
        .map_err(|e| CliError::Runtime(format!("solution rejected: {e}")))?;
    let batch = load_scenarios_csv(&inputs.scenarios).map_err(|e| CliError::Runtime(e.to_string()))?;
    if batch.dim() != r.scenarios.dim() {
        return Err(CliError::Runtime(format!(
            "{} has {} columns, problem expects {}",
            inputs.scenarios.display(),
            batch.dim(),
            r.scenarios.dim()
        )));
    }
    let reference = match (&inputs.reference, &r.eval_reference) {
        (Some(path), _) => Some(load_scenarios_csv(path).map_err(|e| CliError::Runtime(e.to_string()))?),
        (None, Some(src)) => {
            let seed = opts.seeds(r)[0];
            Some(
                sample_batch(src, batch.len(), &mut RandomSeed(seed).stream(STREAM_EVALUATION_REFERENCE))
                    .map_err(|e| runtime(seed, "reference", e))?,
            )
        }
        (None, None) => None,
    };
    let evaluation = evaluate(r.problem.as_ref(), &z, &batch, reference.as_ref(), &evaluation_options(r, None))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let output = EvaluationOutput {
        format_version: FORMAT_VERSION,
        created_unix_secs: now_unix_secs(),
        summary: MetricSummary::from_evaluation(&evaluation),
        z,
        evaluation,
    };
    write_json(&opts.out.join(&r.config.output.evaluation), &output)?;
    Ok(output)
}
