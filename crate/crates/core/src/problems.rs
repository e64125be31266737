//! Benchmark problem families behind the [`Problem`] trait consumed by the solver.
//!
//! Decisions are flat `Vec<f64>`s. Transport plans are stored row-major
//! (`z[i * warehouses + j]` is the share of region `i` served by warehouse `j`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dual::Order;
use crate::scenario::ScenarioBatch;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid reference weights: {0}")]
    ReferenceWeights(String),
    #[error("invalid cost matrix: {0}")]
    Costs(String),
    #[error("constraint {constraint} needs an independent reference batch")]
    MissingReference { constraint: usize },
    #[error("decision is infeasible: {0}")]
    Infeasible(String),
}

/// Which side of a dominance constraint the decision outcome sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `g(z, ξ) ⪰_k Y`
    DecisionDominates,
    /// `Y ⪰_k g(z, ξ)`
    ReferenceDominates,
}

impl Orientation {
    /// Sign of the dual term's contribution to the ascent direction.
    pub fn sign(self) -> f64 {
        match self {
            Orientation::DecisionDominates => 1.0,
            Orientation::ReferenceDominates => -1.0,
        }
    }

    /// Orders `(outcomes, references)` as `(dominant, dominated)`.
    pub fn sides<'a>(self, outcomes: &'a [f64], references: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        match self {
            Orientation::DecisionDominates => (outcomes, references),
            Orientation::ReferenceDominates => (references, outcomes),
        }
    }
}

/// How reference samples `Y` are produced for a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceCoupling {
    /// A map of the same scenario row the outcome uses.
    Coupled,
    /// Drawn from a separate reference source.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominanceConstraint {
    pub order: Order,
    pub orientation: Orientation,
    pub reference: ReferenceCoupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveSense {
    Maximize,
    Minimize,
}

/// A dominance-constrained stochastic program `max_{z∈Ω} f(z)` s.t. `g_j(z, ξ) ⪰ Y_j`.
pub trait Problem {
    fn decision_dim(&self) -> usize;

    /// Width of a scenario row `ξ`.
    fn scenario_dim(&self) -> usize;

    fn constraints(&self) -> &[DominanceConstraint];

    /// Natural direction of [`Problem::objective_value`].
    fn sense(&self) -> ObjectiveSense;

    /// The uniform feasible point (equal weights, or uniform routing rows).
    fn initial_point(&self) -> Vec<f64>;

    /// Euclidean projection onto the feasible set.
    fn project(&self, z: &[f64]) -> Vec<f64>;

    fn check_feasible(&self, z: &[f64], tol: f64) -> Result<(), ProblemError>;

    /// Sample-average objective in natural units (return, or transport cost).
    fn objective_value(&self, z: &[f64], batch: &ScenarioBatch) -> Result<f64, ProblemError>;

    /// Gradient of the sample-average objective in maximization form.
    fn objective_gradient(&self, z: &[f64], batch: &ScenarioBatch) -> Result<Vec<f64>, ProblemError>;

    /// Per-row outcome `g_j(z, ξ_i)` of constraint `j`.
    fn outcomes(&self, constraint: usize, z: &[f64], batch: &ScenarioBatch) -> Result<Vec<f64>, ProblemError>;

    /// `grad += weight · ∇_z g_j(z, row)`.
    fn add_outcome_gradient(&self, constraint: usize, z: &[f64], row: &[f64], weight: f64, grad: &mut [f64]);

    /// Reference samples `Y_j` for the batch.
    fn reference_samples(
        &self,
        constraint: usize,
        batch: &ScenarioBatch,
        reference: Option<&ScenarioBatch>,
    ) -> Result<Vec<f64>, ProblemError>;

    /// Width a reference batch must have, when one is needed.
    fn reference_dim(&self) -> Option<usize>;
}

fn check_batch_dim(batch: &ScenarioBatch, expected: usize) -> Result<(), ProblemError> {
    if batch.dim() != expected {
        return Err(ProblemError::Dimension(format!(
            "scenario rows have {} columns, expected {expected}",
            batch.dim()
        )));
    }
    Ok(())
}

fn check_len(what: &str, got: usize, expected: usize) -> Result<(), ProblemError> {
    if got != expected {
        return Err(ProblemError::Dimension(format!("{what} has {got} entries, expected {expected}")));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean projection onto `{x ≥ 0, Σx = 1}` by sort-and-threshold.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// [`project_simplex`] applied to each row of a row-major `rows × cols` matrix.
pub fn project_rows(z: &[f64], cols: usize) -> Vec<f64> {
    z.chunks(cols).flat_map(project_simplex).collect()
}

fn check_simplex(z: &[f64], tol: f64) -> Result<(), ProblemError> {
    if let Some(bad) = z.iter().find(|v| !v.is_finite() || **v < -tol) {
        return Err(ProblemError::Infeasible(format!("entry {bad} is negative or not finite")));
    }
    let s: f64 = z.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(ProblemError::Infeasible(format!("weights sum to {s}, not 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSpec {
    assets: usize,
    reference_weights: Vec<f64>,
}

impl PortfolioSpec {
    /// Equal-weight reference portfolio.
    pub fn new(assets: usize) -> Result<Self, ProblemError> {
        if assets == 0 {
            return Err(ProblemError::Dimension("portfolio needs at least one asset".into()));
        }
        Ok(Self {
            assets,
            reference_weights: vec![1.0 / assets as f64; assets],
        })
    }

    pub fn with_reference(assets: usize, reference_weights: Vec<f64>) -> Result<Self, ProblemError> {
        check_len("reference weights", reference_weights.len(), assets)?;
        check_simplex(&reference_weights, 1e-9).map_err(|e| ProblemError::ReferenceWeights(e.to_string()))?;
        Ok(Self {
            assets,
            reference_weights,
        })
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    pub fn reference_weights(&self) -> &[f64] {
        &self.reference_weights
    }
}

/// Column means of the batch: the gradient of the sample-average return.
pub fn portfolio_objective_grad(spec: &PortfolioSpec, batch: &ScenarioBatch) -> Result<Vec<f64>, ProblemError> {
    check_batch_dim(batch, spec.assets)?;
    Ok(batch.column_means())
}

/// Per-row portfolio returns `ξ_iᵀ z`. The per-row gradient is the row itself.
pub fn portfolio_outcomes(spec: &PortfolioSpec, z: &[f64], batch: &ScenarioBatch) -> Result<Vec<f64>, ProblemError> {
    check_batch_dim(batch, spec.assets)?;
    check_len("decision", z.len(), spec.assets)?;
    Ok(batch.rows().map(|r| dot(r, z)).collect())
}

/// Return maximization with one dominance constraint against a reference portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    spec: PortfolioSpec,
    constraints: [DominanceConstraint; 1],
}

impl Portfolio {
    /// With `ReferenceCoupling::Independent`, reference batches are either
    /// `assets` wide (reference weights applied) or one column of reference returns.
    pub fn new(spec: PortfolioSpec, order: Order, reference: ReferenceCoupling) -> Self {
        Self {
            spec,
            constraints: [DominanceConstraint {
                order,
                orientation: Orientation::DecisionDominates,
                reference,
            }],
        }
    }

    pub fn spec(&self) -> &PortfolioSpec {
        &self.spec
    }
}

impl Problem for Portfolio {
    fn decision_dim(&self) -> usize {
        self.spec.assets
    }

    fn scenario_dim(&self) -> usize {
        self.spec.assets
    }

    fn constraints(&self) -> &[DominanceConstraint] {
        &self.constraints
    }

    fn sense(&self) -> ObjectiveSense {
        ObjectiveSense::Maximize
    }

    fn initial_point(&self) -> Vec<f64> {
        vec![1.0 / self.spec.assets as f64; self.spec.assets]
    }

    fn project(&self, z: &[f64]) -> Vec<f64> {
        project_simplex(z)
    }

    fn check_feasible(&self, z: &[f64], tol: f64) -> Result<(), ProblemError> {
        check_len("decision", z.len(), self.spec.assets)?;
        check_simplex(z, tol)
    }

    fn objective_value(&self, z: &[f64], batch: &ScenarioBatch) -> Result<f64, ProblemError> {
        let w = portfolio_outcomes(&self.spec, z, batch)?;
        Ok(w.iter().sum::<f64>() / w.len() as f64)
    }

    fn objective_gradient(&self, _z: &[f64], batch: &ScenarioBatch) -> Result<Vec<f64>, ProblemError> {
        portfolio_objective_grad(&self.spec, batch)
    }

    fn outcomes(&self, _constraint: usize, z: &[f64], batch: &ScenarioBatch) -> Result<Vec<f64>, ProblemError> {
        portfolio_outcomes(&self.spec, z, batch)
    }

    fn add_outcome_gradient(&self, _constraint: usize, _z: &[f64], row: &[f64], weight: f64, grad: &mut [f64]) {
        for (g, x) in grad.iter_mut().zip(row) {
            *g += weight * x;
        }
    }

    fn reference_samples(
        &self,
        constraint: usize,
        batch: &ScenarioBatch,
        reference: Option<&ScenarioBatch>,
    ) -> Result<Vec<f64>, ProblemError> {
        let zref = &self.spec.reference_weights;
        match self.constraints[0].reference {
            ReferenceCoupling::Coupled => portfolio_outcomes(&self.spec, zref, batch),
            ReferenceCoupling::Independent => {
                let r = reference.ok_or(ProblemError::MissingReference { constraint })?;
                if r.dim() == 1 {
                    Ok(r.column(0))
                } else {
                    portfolio_outcomes(&self.spec, zref, r)
                }
            }
        }
    }

    fn reference_dim(&self) -> Option<usize> {
        match self.constraints[0].reference {
            ReferenceCoupling::Coupled => None,
            ReferenceCoupling::Independent => Some(self.spec.assets),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportSpec {
    regions: usize,
    warehouses: usize,
    /// Row-major `regions × warehouses` cost per unit of demand.
    costs: Vec<f64>,
}

impl TransportSpec {
    pub fn new(regions: usize, warehouses: usize, costs: Vec<f64>) -> Result<Self, ProblemError> {
        if regions == 0 || warehouses == 0 {
            return Err(ProblemError::Dimension("transport needs regions and warehouses".into()));
        }
        if costs.len() != regions * warehouses {
            return Err(ProblemError::Costs(format!(
                "{} entries for a {regions}×{warehouses} matrix",
                costs.len()
            )));
        }
        if let Some(c) = costs.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(ProblemError::Costs(format!("entry {c} is negative or not finite")));
        }
        Ok(Self {
            regions,
            warehouses,
            costs,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ProblemError> {
        let n = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != n) {
            return Err(ProblemError::Costs("ragged cost matrix".into()));
        }
        Self::new(rows.len(), n, rows.concat())
    }

    pub fn regions(&self) -> usize {
        self.regions
    }

    pub fn warehouses(&self) -> usize {
        self.warehouses
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.warehouses + j]
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }
}

/// `−h_ij · mean(ξ_i)`: ascent direction of the negated expected cost.
pub fn transport_objective_grad(spec: &TransportSpec, batch: &ScenarioBatch) -> Result<Vec<f64>, ProblemError> {
    check_batch_dim(batch, spec.regions)?;
    let means = batch.column_means();
    let n = spec.warehouses;
    Ok((0..spec.regions * n).map(|k| -spec.costs[k] * means[k / n]).collect())
}

/// Demand assigned to each warehouse, `D_j = Σ_i ξ_i z_ij`, one vector per warehouse.
pub fn transport_outcomes(spec: &TransportSpec, z: &[f64], batch: &ScenarioBatch) -> Result<Vec<Vec<f64>>, ProblemError> {
    check_batch_dim(batch, spec.regions)?;
    check_len("transport plan", z.len(), spec.regions * spec.warehouses)?;
    let n = spec.warehouses;
    let mut out = vec![Vec::with_capacity(batch.len()); n];
    for row in batch.rows() {
        for (j, d) in out.iter_mut().enumerate() {
            d.push(row.iter().enumerate().map(|(i, xi)| xi * z[i * n + j]).sum());
        }
    }
    Ok(out)
}

/// Cost minimization where each warehouse's supply must dominate its assigned demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transport {
    spec: TransportSpec,
    constraints: Vec<DominanceConstraint>,
}

impl Transport {
    pub fn new(spec: TransportSpec, order: Order) -> Self {
        let c = DominanceConstraint {
            order,
            orientation: Orientation::ReferenceDominates,
            reference: ReferenceCoupling::Independent,
        };
        Self {
            constraints: vec![c; spec.warehouses],
            spec,
        }
    }

    pub fn spec(&self) -> &TransportSpec {
        &self.spec
    }
}

impl Problem for Transport {
    fn decision_dim(&self) -> usize {
        self.spec.regions * self.spec.warehouses
    }

    fn scenario_dim(&self) -> usize {
        self.spec.regions
    }

    fn constraints(&self) -> &[DominanceConstraint] {
        &self.constraints
    }

    fn sense(&self) -> ObjectiveSense {
        ObjectiveSense::Minimize
    }

    fn initial_point(&self) -> Vec<f64> {
        vec![1.0 / self.spec.warehouses as f64; self.decision_dim()]
    }

    fn project(&self, z: &[f64]) -> Vec<f64> {
        project_rows(z, self.spec.warehouses)
    }

    fn check_feasible(&self, z: &[f64], tol: f64) -> Result<(), ProblemError> {
        check_len("transport plan", z.len(), self.decision_dim())?;
        for (i, row) in z.chunks(self.spec.warehouses).enumerate() {
            check_simplex(row, tol).map_err(|e| ProblemError::Infeasible(format!("region {i}: {e}")))?;
        }
        Ok(())
    }

    fn objective_value(&self, z: &[f64], batch: &ScenarioBatch) -> Result<f64, ProblemError> {
        let g = transport_objective_grad(&self.spec, batch)?;
        check_len("transport plan", z.len(), g.len())?;
        Ok(-dot(&g, z))
    }

    fn objective_gradient(&self, _z: &[f64], batch: &ScenarioBatch) -> Result<Vec<f64>, ProblemError> {
        transport_objective_grad(&self.spec, batch)
    }

    fn outcomes(&self, constraint: usize, z: &[f64], batch: &ScenarioBatch) -> Result<Vec<f64>, ProblemError> {
        check_batch_dim(batch, self.spec.regions)?;
        check_len("transport plan", z.len(), self.decision_dim())?;
        let n = self.spec.warehouses;
        Ok(batch
            .rows()
            .map(|row| row.iter().enumerate().map(|(i, xi)| xi * z[i * n + constraint]).sum())
            .collect())
    }

    fn add_outcome_gradient(&self, constraint: usize, _z: &[f64], row: &[f64], weight: f64, grad: &mut [f64]) {
        let n = self.spec.warehouses;
        for (i, xi) in row.iter().enumerate() {
            grad[i * n + constraint] += weight * xi;
        }
    }

    fn reference_samples(
        &self,
        constraint: usize,
        _batch: &ScenarioBatch,
        reference: Option<&ScenarioBatch>,
    ) -> Result<Vec<f64>, ProblemError> {
        let r = reference.ok_or(ProblemError::MissingReference { constraint })?;
        check_batch_dim(r, self.spec.warehouses)?;
        Ok(r.column(constraint))
    }

    fn reference_dim(&self) -> Option<usize> {
        Some(self.spec.warehouses)
    }
}
