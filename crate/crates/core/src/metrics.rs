//! Solution quality: empirical distribution functions, constraint violation
//! indices (CVI@k), objective estimates and objective ratios.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dual::{support_interval, DualError, Order, SortedSamples, SupportInterval};
use crate::problems::{Problem, ProblemError};
use crate::scenario::ScenarioBatch;

/// Default number of grid points for [`cvi`].
pub const DEFAULT_GRID_POINTS: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("sample set is empty")]
    EmptySamples,
    #[error("interval [{0}, {1}] has zero width")]
    DegenerateInterval(f64, f64),
    #[error("grid needs at least 2 points, got {0}")]
    Grid(usize),
    #[error("reference optimum is zero")]
    ZeroOptimum,
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Dual(#[from] DualError),
}

/// `F_k(X; η)`: the empirical CDF (`x ≤ η`) for order 1, the mean of `(η − x)₊` for order 2.
pub fn empirical_fk(samples: &[f64], eta: f64, order: Order) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    let n = samples.len() as f64;
    Ok(match order {
        Order::First => samples.iter().filter(|&&x| x <= eta).count() as f64 / n,
        Order::Second => samples.iter().map(|&x| (eta - x).max(0.0)).sum::<f64>() / n,
    })
}

/// Compares `F_k(X; η) > F_k(Y; η)` without dividing when the sizes differ.
struct Comparator {
    x: SortedSamples,
    y: SortedSamples,
    /// Pooled sample values, sorted and deduplicated.
    knots: Vec<f64>,
}

impl Comparator {
    fn new(x: &[f64], y: &[f64]) -> Result<Self, MetricsError> {
        if x.is_empty() || y.is_empty() {
            return Err(MetricsError::EmptySamples);
        }
        let mut knots: Vec<f64> = x.iter().chain(y).copied().collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        Ok(Self {
            x: SortedSamples::new(x),
            y: SortedSamples::new(y),
            knots,
        })
    }

    /// [`Self::k2_gap`] interpolated from the neighbouring sample points.
    ///
    /// The gap is linear between samples, zero below them and constant above,
    /// so this is exact in real arithmetic. Evaluating only at sample points
    /// keeps rounding from turning an identically zero gap positive.
    fn k2_gap_from_knots(&self, eta: f64) -> f64 {
        let k = &self.knots;
        let i = k.partition_point(|&v| v <= eta);
        if i == 0 {
            return 0.0;
        }
        let (p, gp) = (k[i - 1], self.k2_gap(k[i - 1]));
        if i == k.len() || eta == p {
            return gp;
        }
        let (q, gq) = (k[i], self.k2_gap(k[i]));
        gp + (gq - gp) * ((eta - p) / (q - p))
    }

    /// `n_y · Σ(η−x)₊ − n_x · Σ(η−y)₊`, or the plain difference for equal sizes.
    fn k2_gap(&self, eta: f64) -> f64 {
        let (hx, hy) = (self.x.hinge_sum(eta), self.y.hinge_sum(eta));
        if self.x.len() == self.y.len() {
            hx - hy
        } else {
            hx * self.y.len() as f64 - hy * self.x.len() as f64
        }
    }

    fn violated(&self, order: Order, eta: f64) -> bool {
        match order {
            Order::First => self.x.count_le(eta) * self.y.len() > self.y.count_le(eta) * self.x.len(),
            Order::Second => self.k2_gap_from_knots(eta) > 0.0,
        }
    }
}

fn check_interval(interval: &SupportInterval) -> Result<(), MetricsError> {
    if interval.width() <= 0.0 {
        return Err(MetricsError::DegenerateInterval(interval.lower(), interval.upper()));
    }
    Ok(())
}

/// Fraction of `m` evenly spaced `η ∈ [a, b]` (both ends included) where
/// `F_k(X; η) > F_k(Y; η)`, i.e. where `X ⪰_k Y` fails.
pub fn cvi(order: Order, x: &[f64], y: &[f64], interval: &SupportInterval, m: usize) -> Result<f64, MetricsError> {
    if m < 2 {
        return Err(MetricsError::Grid(m));
    }
    check_interval(interval)?;
    let cmp = Comparator::new(x, y)?;
    let (a, b) = (interval.lower(), interval.upper());
    let step = (b - a) / (m - 1) as f64;
    let violations = (0..m)
        .filter(|&i| {
            let eta = if i == m - 1 { b } else { a + step * i as f64 };
            cmp.violated(order, eta)
        })
        .count();
    Ok(violations as f64 / m as f64)
}

/// Exact order-2 violation measure with the boundary count of the violation set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactViolation {
    /// Measure of `{η ∈ [a,b] : F₂(X;η) > F₂(Y;η)}` over `b − a`.
    pub fraction: f64,
    /// Boundary points of the violation set strictly inside `(a, b)`.
    pub crossings: usize,
}

/// [`cvi_exact_k2`] together with the number of sign changes of the gap.
pub fn cvi_exact_k2_detail(x: &[f64], y: &[f64], interval: &SupportInterval) -> Result<ExactViolation, MetricsError> {
    check_interval(interval)?;
    let cmp = Comparator::new(x, y)?;
    let (a, b) = (interval.lower(), interval.upper());

    // Both curves are linear between consecutive sample points.
    let mut knots: Vec<f64> = x.iter().chain(y).copied().filter(|&v| v > a && v < b).collect();
    knots.push(a);
    knots.push(b);
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let mut spans: Vec<(f64, f64)> = Vec::new();
    let mut push = |lo: f64, hi: f64| {
        if hi <= lo {
            return;
        }
        match spans.last_mut() {
            Some(last) if last.1 >= lo => last.1 = hi,
            _ => spans.push((lo, hi)),
        }
    };
    let mut gp = cmp.k2_gap_from_knots(a);
    for w in knots.windows(2) {
        let (p, q) = (w[0], w[1]);
        let gq = cmp.k2_gap_from_knots(q);
        match (gp > 0.0, gq > 0.0) {
            (true, true) => push(p, q),
            (true, false) => push(p, (p + (q - p) * gp / (gp - gq)).min(q)),
            (false, true) => push((p + (q - p) * gp / (gp - gq)).max(p), q),
            (false, false) => {}
        }
        gp = gq;
    }

    let measure = spans.iter().fold(0.0, |acc, (lo, hi)| acc + (hi - lo));
    let crossings = spans
        .iter()
        .map(|&(lo, hi)| usize::from(lo > a) + usize::from(hi < b))
        .sum();
    Ok(ExactViolation {
        fraction: (measure / (b - a)).clamp(0.0, 1.0),
        crossings,
    })
}

/// Lebesgue measure of `{η ∈ [a,b] : F₂(X;η) > F₂(Y;η)}` divided by `b − a`.
pub fn cvi_exact_k2(x: &[f64], y: &[f64], interval: &SupportInterval) -> Result<f64, MetricsError> {
    Ok(cvi_exact_k2_detail(x, y, interval)?.fraction)
}

/// `|objective − optimum| / |optimum|`.
pub fn obj_ratio(objective: f64, optimum: f64) -> Result<f64, MetricsError> {
    if optimum == 0.0 {
        return Err(MetricsError::ZeroOptimum);
    }
    Ok((objective - optimum).abs() / optimum.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintEvaluation {
    pub cvi1: f64,
    pub cvi2: f64,
    /// `[a, b]` the grid was laid over.
    pub interval: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Mean objective over the evaluation batch, in natural units.
    pub objective: f64,
    pub constraints: Vec<ConstraintEvaluation>,
    pub grid_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obj_ratio: Option<f64>,
}

/// Options for [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationOptions {
    pub grid_points: usize,
    /// Replaces the per-constraint interval spanned by the evaluation samples.
    pub interval: Option<SupportInterval>,
    /// Reference optimum for the objective ratio.
    pub optimum: Option<f64>,
    /// Feasibility tolerance checked before anything is evaluated.
    pub feasibility_tol: f64,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
            interval: None,
            optimum: None,
            feasibility_tol: 1e-8,
        }
    }
}

/// Objective and per-constraint CVI@1/CVI@2 of `z` on held-out data.
///
/// Without an override, each constraint's interval spans the minimum and
/// maximum of its outcomes and reference samples. When those coincide both
/// sides are the same point mass and the CVIs are 0.
pub fn evaluate(
    problem: &dyn Problem,
    z: &[f64],
    batch: &ScenarioBatch,
    reference: Option<&ScenarioBatch>,
    options: &EvaluationOptions,
) -> Result<EvaluationReport, MetricsError> {
    problem.check_feasible(z, options.feasibility_tol)?;
    let objective = problem.objective_value(z, batch)?;
    let mut constraints = Vec::with_capacity(problem.constraints().len());
    for (j, c) in problem.constraints().iter().enumerate() {
        let g = problem.outcomes(j, z, batch)?;
        let y = problem.reference_samples(j, batch, reference)?;
        let (dominant, dominated) = c.orientation.sides(&g, &y);
        let interval = match options.interval {
            Some(i) => i,
            None => support_interval(g.iter().chain(&y), 0.0)?,
        };
        let (cvi1, cvi2) = if interval.width() > 0.0 {
            (
                cvi(Order::First, dominant, dominated, &interval, options.grid_points)?,
                cvi(Order::Second, dominant, dominated, &interval, options.grid_points)?,
            )
        } else {
            (0.0, 0.0)
        };
        constraints.push(ConstraintEvaluation {
            cvi1,
            cvi2,
            interval: [interval.lower(), interval.upper()],
        });
    }
    let obj_ratio = options.optimum.map(|o| obj_ratio(objective, o)).transpose()?;
    Ok(EvaluationReport {
        objective,
        constraints,
        grid_points: options.grid_points,
        obj_ratio,
    })
}
