//! Projected stochastic ascent on the sampled Lagrangian.
//!
//! Each iteration draws a batch, finds the violation thresholds of every
//! dominance constraint, builds the averaged dual over them and steps along
//! `∇f + λ Σ_j sign_j (1/N) Σ_i u_j'(g_j(z, ξ_i)) ∇_z g_j(z, ξ_i)`, followed by
//! a Euclidean projection back onto the feasible set.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dual::{default_temperature, support_interval, violation_thresholds, DualError, DualFunction, Order};
use crate::problems::{Problem, ProblemError, ReferenceCoupling};
use crate::scenario::{
    sample_batch, RandomSeed, ScenarioBatch, ScenarioError, ScenarioSource, STREAM_INIT, STREAM_REFERENCE,
    STREAM_SCENARIOS,
};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver config: {0}")]
    Config(String),
    #[error("invalid sources: {0}")]
    Sources(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error("non-finite gradient at iteration {iteration} in {}", part_name(*.constraint))]
    NonFiniteGradient { iteration: usize, constraint: Option<usize> },
    #[error("cannot average an empty iterate sequence")]
    EmptyTrace,
}

fn part_name(constraint: Option<usize>) -> String {
    match constraint {
        Some(j) => format!("constraint {j}"),
        None => "the objective".to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    /// `γ₀/√T` at every iteration.
    ConstantOverSqrtT,
    /// `γ₀/√t`.
    InverseSqrtT,
}

/// Order-1 smoothing temperature. Serialized as `"auto"` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TemperatureRepr", into = "TemperatureRepr")]
pub enum Temperature {
    /// Recomputed per iteration from the batch support interval.
    Auto,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TemperatureRepr {
    Fixed(f64),
    Name(String),
}

impl TryFrom<TemperatureRepr> for Temperature {
    type Error = String;

    fn try_from(r: TemperatureRepr) -> Result<Self, String> {
        match r {
            TemperatureRepr::Fixed(t) => Ok(Temperature::Fixed(t)),
            TemperatureRepr::Name(s) if s == "auto" => Ok(Temperature::Auto),
            TemperatureRepr::Name(s) => Err(format!("expected \"auto\" or a number, got {s:?}")),
        }
    }
}

impl From<Temperature> for TemperatureRepr {
    fn from(t: Temperature) -> Self {
        match t {
            Temperature::Auto => TemperatureRepr::Name("auto".into()),
            Temperature::Fixed(v) => TemperatureRepr::Fixed(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Total iterations `T`.
    pub iterations: usize,
    /// Scenarios per iteration `N`.
    pub batch_size: usize,
    /// Base step size `γ₀`.
    pub step_size: f64,
    #[serde(default = "default_schedule")]
    pub schedule: StepSchedule,
    #[serde(default = "default_temperature_setting")]
    pub temperature: Temperature,
    /// Weight `λ` on the constraint terms.
    #[serde(default = "default_penalty")]
    pub penalty_weight: f64,
    #[serde(default)]
    pub seed: u64,
    /// Iterations between trace rows; the last iteration is always recorded.
    #[serde(default = "default_trace_every")]
    pub trace_every: usize,
    #[serde(default)]
    pub record_iterates: bool,
    /// Half-width of the uniform jitter added to the uniform starting point.
    #[serde(default)]
    pub init_jitter: f64,
    /// Wall-clock cap in seconds; the run stops early and is flagged as truncated.
    #[serde(default)]
    pub time_limit_secs: Option<f64>,
}

fn default_schedule() -> StepSchedule {
    StepSchedule::ConstantOverSqrtT
}

fn default_temperature_setting() -> Temperature {
    Temperature::Auto
}

fn default_penalty() -> f64 {
    1.0
}

fn default_trace_every() -> usize {
    1
}

impl SolverConfig {
    pub fn new(iterations: usize, batch_size: usize, step_size: f64) -> Self {
        Self {
            iterations,
            batch_size,
            step_size,
            schedule: default_schedule(),
            temperature: Temperature::Auto,
            penalty_weight: 1.0,
            seed: 0,
            trace_every: 1,
            record_iterates: false,
            init_jitter: 0.0,
            time_limit_secs: None,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::Config(m.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        // γ₀ = 0 is accepted as a degenerate no-movement run.
        if !(self.step_size.is_finite() && self.step_size >= 0.0) {
            return bad("step_size must be finite and non-negative");
        }
        if !(self.penalty_weight.is_finite() && self.penalty_weight >= 0.0) {
            return bad("penalty_weight must be finite and non-negative");
        }
        if let Temperature::Fixed(t) = self.temperature {
            if !(t.is_finite() && t > 0.0) {
                return bad("temperature must be \"auto\" or a positive number");
            }
        }
        if self.trace_every == 0 {
            return bad("trace_every must be at least 1");
        }
        if !(self.init_jitter.is_finite() && self.init_jitter >= 0.0) {
            return bad("init_jitter must be finite and non-negative");
        }
        if let Some(s) = self.time_limit_secs {
            if !(s.is_finite() && s > 0.0) {
                return bad("time_limit_secs must be positive");
            }
        }
        Ok(())
    }
}

/// Step size at iteration `t` (1-based).
pub fn step_size(t: usize, config: &SolverConfig) -> f64 {
    match config.schedule {
        StepSchedule::ConstantOverSqrtT => config.step_size / (config.iterations as f64).sqrt(),
        StepSchedule::InverseSqrtT => config.step_size / (t.max(1) as f64).sqrt(),
    }
}

/// `Σγ_t z_t / Σγ_t`; the plain mean when every weight is zero.
pub fn averaged_iterate(entries: &[(f64, Vec<f64>)]) -> Result<Vec<f64>, SolverError> {
    let (_, first) = entries.first().ok_or(SolverError::EmptyTrace)?;
    let mut avg = Averager::new(first.len());
    for (gamma, z) in entries {
        avg.push(*gamma, z);
    }
    Ok(avg.finish())
}

struct Averager {
    weighted: Vec<f64>,
    plain: Vec<f64>,
    weight: f64,
    count: usize,
}

impl Averager {
    fn new(dim: usize) -> Self {
        Self {
            weighted: vec![0.0; dim],
            plain: vec![0.0; dim],
            weight: 0.0,
            count: 0,
        }
    }

    fn push(&mut self, gamma: f64, z: &[f64]) {
        for ((w, p), x) in self.weighted.iter_mut().zip(&mut self.plain).zip(z) {
            *w += gamma * x;
            *p += x;
        }
        self.weight += gamma;
        self.count += 1;
    }

    fn finish(self) -> Vec<f64> {
        if self.weight > 0.0 {
            self.weighted.iter().map(|w| w / self.weight).collect()
        } else {
            self.plain.iter().map(|p| p / self.count as f64).collect()
        }
    }
}

/// Where the solver draws scenarios and, for independent references, reference samples.
#[derive(Debug, Clone, Copy)]
pub struct Sources<'a> {
    pub scenarios: &'a ScenarioSource,
    pub reference: Option<&'a ScenarioSource>,
}

impl<'a> Sources<'a> {
    pub fn new(scenarios: &'a ScenarioSource) -> Self {
        Self {
            scenarios,
            reference: None,
        }
    }

    pub fn with_reference(scenarios: &'a ScenarioSource, reference: &'a ScenarioSource) -> Self {
        Self {
            scenarios,
            reference: Some(reference),
        }
    }
}

/// Checks that `sources` fit `problem`, returning whether a reference batch is needed.
pub fn check_sources(problem: &dyn Problem, sources: &Sources<'_>) -> Result<bool, SolverError> {
    if sources.scenarios.dim() != problem.scenario_dim() {
        return Err(SolverError::Sources(format!(
            "scenario source has {} columns, problem expects {}",
            sources.scenarios.dim(),
            problem.scenario_dim()
        )));
    }
    let needs = problem
        .constraints()
        .iter()
        .any(|c| c.reference == ReferenceCoupling::Independent);
    if needs {
        let r = sources
            .reference
            .ok_or_else(|| SolverError::Sources("independent reference requires a reference source".into()))?;
        let want = problem.reference_dim().unwrap_or(0);
        if r.dim() != want && r.dim() != 1 {
            return Err(SolverError::Sources(format!(
                "reference source has {} columns, expected {want}",
                r.dim()
            )));
        }
    }
    Ok(needs)
}

/// Dual of every constraint at `z` on this batch.
pub fn build_duals(
    problem: &dyn Problem,
    z: &[f64],
    batch: &ScenarioBatch,
    reference: Option<&ScenarioBatch>,
    temperature: Temperature,
) -> Result<Vec<DualFunction>, SolverError> {
    let mut duals = Vec::with_capacity(problem.constraints().len());
    for (j, c) in problem.constraints().iter().enumerate() {
        let g = problem.outcomes(j, z, batch)?;
        let y = problem.reference_samples(j, batch, reference)?;
        let (dominant, dominated) = c.orientation.sides(&g, &y);
        let set = violation_thresholds(c.order, dominant, dominated);
        let dual = match c.order {
            Order::Second => DualFunction::second_order(set),
            Order::First => {
                let tau = match temperature {
                    Temperature::Fixed(t) => t,
                    Temperature::Auto => default_temperature(&support_interval(g.iter().chain(&y), 0.0)?),
                };
                DualFunction::new(set, tau)?
            }
        };
        duals.push(dual);
    }
    Ok(duals)
}

/// `λ Σ_j sign_j (1/N) Σ_i u_j'(g_j(z, ξ_i)) ∇_z g_j(z, ξ_i)` with the duals held fixed.
///
/// Returns one term per constraint so the caller can attribute non-finite values.
pub fn constraint_gradients(
    problem: &dyn Problem,
    z: &[f64],
    batch: &ScenarioBatch,
    duals: &[DualFunction],
    penalty_weight: f64,
) -> Result<Vec<Vec<f64>>, SolverError> {
    let mut terms = Vec::with_capacity(duals.len());
    for (j, (c, dual)) in problem.constraints().iter().zip(duals).enumerate() {
        let mut term = vec![0.0; problem.decision_dim()];
        if !dual.thresholds().is_empty() {
            let g = problem.outcomes(j, z, batch)?;
            for (row, gi) in batch.rows().zip(&g) {
                let d = dual.derivative(*gi);
                if d != 0.0 {
                    problem.add_outcome_gradient(j, z, row, d, &mut term);
                }
            }
            let scale = c.orientation.sign() * penalty_weight / batch.len() as f64;
            term.iter_mut().for_each(|v| *v *= scale);
        }
        terms.push(term);
    }
    Ok(terms)
}

/// `λ Σ_j sign_j (1/N) Σ_i u_j(g_j(z, ξ_i))`: the scalar whose gradient
/// [`constraint_gradients`] sums to, with the duals frozen.
pub fn constraint_surrogate(
    problem: &dyn Problem,
    z: &[f64],
    batch: &ScenarioBatch,
    duals: &[DualFunction],
    penalty_weight: f64,
) -> Result<f64, SolverError> {
    let mut total = 0.0;
    for (j, (c, dual)) in problem.constraints().iter().zip(duals).enumerate() {
        let g = problem.outcomes(j, z, batch)?;
        let s: f64 = g.iter().map(|x| dual.value(*x)).sum();
        total += c.orientation.sign() * penalty_weight * s / batch.len() as f64;
    }
    Ok(total)
}

/// One assembled ascent direction.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentDirection {
    pub direction: Vec<f64>,
    pub mu_sizes: Vec<usize>,
    pub objective_estimate: f64,
}

/// Objective gradient plus all constraint terms at `z`. `iteration` only labels errors.
pub fn assemble_gradient(
    problem: &dyn Problem,
    z: &[f64],
    batch: &ScenarioBatch,
    reference: Option<&ScenarioBatch>,
    config: &SolverConfig,
    iteration: usize,
) -> Result<AscentDirection, SolverError> {
    let mut direction = problem.objective_gradient(z, batch)?;
    if direction.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFiniteGradient {
            iteration,
            constraint: None,
        });
    }
    let duals = build_duals(problem, z, batch, reference, config.temperature)?;
    let terms = constraint_gradients(problem, z, batch, &duals, config.penalty_weight)?;
    for (j, term) in terms.iter().enumerate() {
        if term.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFiniteGradient {
                iteration,
                constraint: Some(j),
            });
        }
        if !duals[j].thresholds().is_empty() {
            direction.iter_mut().zip(term).for_each(|(d, t)| *d += t);
        }
    }
    Ok(AscentDirection {
        direction,
        mu_sizes: duals.iter().map(|d| d.thresholds().len()).collect(),
        objective_estimate: problem.objective_value(z, batch)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub gamma: f64,
    /// Objective at `z_t` on the iteration's batch, in natural units.
    pub objective_estimate: f64,
    pub mu_sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace {
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Iterate after the last update.
    pub z_final: Vec<f64>,
    /// `γ`-weighted average of the iterates the gradient was evaluated at.
    pub z_averaged: Vec<f64>,
    pub iterations: usize,
    pub wall_clock_secs: f64,
    /// Set when the time limit stopped the run before `T` iterations.
    pub truncated: bool,
}

/// Starting point: the problem's uniform point, optionally jittered and re-projected.
pub fn initial_iterate(problem: &dyn Problem, config: &SolverConfig) -> Vec<f64> {
    let z = problem.initial_point();
    if config.init_jitter == 0.0 {
        return z;
    }
    let mut stream = RandomSeed(config.seed).stream(STREAM_INIT);
    let jittered: Vec<f64> = z
        .iter()
        .map(|v| v + config.init_jitter * stream.rng().random_range(-1.0..=1.0))
        .collect();
    problem.project(&jittered)
}

/// Runs the full loop for `config.iterations` iterations (fewer only on time-out).
pub fn solve(
    problem: &dyn Problem,
    config: &SolverConfig,
    sources: &Sources<'_>,
) -> Result<(Solution, IterateTrace), SolverError> {
    config.validate()?;
    let needs_reference = check_sources(problem, sources)?;
    let started = Instant::now();
    let seed = RandomSeed(config.seed);
    let mut scenario_stream = seed.stream(STREAM_SCENARIOS);
    let mut reference_stream = seed.stream(STREAM_REFERENCE);

    let mut z = initial_iterate(problem, config);
    let mut avg = Averager::new(z.len());
    let mut trace = IterateTrace::default();
    let mut iterations = 0;
    let mut truncated = false;

    for t in 1..=config.iterations {
        if let Some(limit) = config.time_limit_secs {
            if t > 1 && started.elapsed().as_secs_f64() >= limit {
                truncated = true;
                break;
            }
        }
        let gamma = step_size(t, config);
        let batch = sample_batch(sources.scenarios, config.batch_size, &mut scenario_stream)?;
        let reference = match (needs_reference, sources.reference) {
            (true, Some(src)) => Some(sample_batch(src, config.batch_size, &mut reference_stream)?),
            _ => None,
        };
        let step = assemble_gradient(problem, &z, &batch, reference.as_ref(), config, t)?;
        avg.push(gamma, &z);
        if (t - 1) % config.trace_every == 0 || t == config.iterations {
            trace.rows.push(TraceRow {
                t,
                gamma,
                objective_estimate: step.objective_estimate,
                mu_sizes: step.mu_sizes,
                z: config.record_iterates.then(|| z.clone()),
            });
        }
        let moved: Vec<f64> = z.iter().zip(&step.direction).map(|(a, g)| a + gamma * g).collect();
        z = problem.project(&moved);
        iterations = t;
    }

    let solution = Solution {
        z_averaged: avg.finish(),
        z_final: z,
        iterations,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        truncated,
    };
    Ok((solution, trace))
}
