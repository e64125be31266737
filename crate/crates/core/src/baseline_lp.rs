//! Exact baselines: a dense two-phase simplex solver, the linear reformulation
//! of second-order dominance constraints over finite scenario sets, and the
//! greedy unconstrained policies.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dual::{violation_thresholds, Order};
use crate::problems::{portfolio_outcomes, PortfolioSpec, TransportSpec};
use crate::scenario::ScenarioBatch;

/// Feasibility and optimality tolerance of the simplex solver.
pub const LP_TOLERANCE: f64 = 1e-8;
/// Default pivot cap for [`simplex_solve`].
pub const DEFAULT_MAX_PIVOTS: usize = 1_000_000;
/// Tableaus above this many bytes are refused rather than allocated.
pub const MAX_TABLEAU_BYTES: usize = 2 << 30;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("coefficient {0} is not finite")]
    NonFinite(f64),
    #[error("invalid probabilities: {0}")]
    Probabilities(String),
    #[error("dense tableau of {rows}×{cols} exceeds the memory cap")]
    TooLarge { rows: usize, cols: usize },
}

/// Sparse constraint row `Σ coeffs · x (≤ | =) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Row {
    pub fn dense(coeffs: &[f64], rhs: f64) -> Self {
        Self {
            coeffs: coeffs.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect(),
            rhs,
        }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, v)| v * x[j]).sum()
    }
}

/// `max cᵀx` subject to `≤` rows, `=` rows and `x ≥ 0` except for free variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub inequalities: Vec<Row>,
    pub equalities: Vec<Row>,
    pub free: Vec<bool>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            inequalities: Vec::new(),
            equalities: Vec::new(),
            free: vec![false; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_le(&mut self, row: Row) {
        self.inequalities.push(row);
    }

    pub fn add_eq(&mut self, row: Row) {
        self.equalities.push(row);
    }

    pub fn set_free(&mut self, j: usize) {
        self.free[j] = true;
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.free.len() != n {
            return Err(LpError::Dimension(format!("{} free flags for {n} variables", self.free.len())));
        }
        let finite = |v: f64| if v.is_finite() { Ok(()) } else { Err(LpError::NonFinite(v)) };
        for &c in &self.objective {
            finite(c)?;
        }
        for row in self.inequalities.iter().chain(&self.equalities) {
            finite(row.rhs)?;
            for &(j, v) in &row.coeffs {
                if j >= n {
                    return Err(LpError::Dimension(format!("row references variable {j} of {n}")));
                }
                finite(v)?;
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or sign bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.inequalities.iter().map(|r| (r.dot(x) - r.rhs).max(0.0));
        let eqs = self.equalities.iter().map(|r| (r.dot(x) - r.rhs).abs());
        let signs = x.iter().zip(&self.free).map(|(v, f)| if *f { 0.0 } else { (-v).max(0.0) });
        rows.chain(eqs).chain(signs).fold(0.0, f64::max)
    }

    /// Plain-text dump: `max` line, then `le`/`eq` rows as `index:coef` pairs, then `free` indices.
    pub fn to_text(&self) -> String {
        let mut out = String::from("max");
        for c in &self.objective {
            let _ = write!(out, " {c:?}");
        }
        out.push('\n');
        for (tag, rows) in [("le", &self.inequalities), ("eq", &self.equalities)] {
            for row in rows {
                out.push_str(tag);
                for (j, v) in &row.coeffs {
                    let _ = write!(out, " {j}:{v:?}");
                }
                let _ = writeln!(out, " rhs {:?}", row.rhs);
            }
        }
        let free: Vec<String> = (0..self.num_vars()).filter(|&j| self.free[j]).map(|j| j.to_string()).collect();
        if !free.is_empty() {
            let _ = writeln!(out, "free {}", free.join(" "));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpResult {
    pub status: LpStatus,
    /// Primal solution; present only when optimal.
    pub x: Option<Vec<f64>>,
    pub value: Option<f64>,
    pub pivots: usize,
}

/// Entering-variable rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PricingRule {
    /// Lowest-index improving column and lowest-index leaving row on ties.
    Bland,
    /// Largest reduced cost, switching to Bland during runs of degenerate pivots.
    DantzigWithBlandFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimplexOptions {
    pub max_pivots: usize,
    pub rule: PricingRule,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_pivots: DEFAULT_MAX_PIVOTS,
            rule: PricingRule::Bland,
        }
    }
}

/// Degenerate pivots tolerated under Dantzig pricing before falling back to Bland.
const DEGENERATE_RUN: usize = 50;
/// Entries this small after an update are flushed to zero.
const DROP_TOL: f64 = 1e-13;

/// Two-phase dense simplex with Bland's rule.
pub fn simplex_solve(lp: &LinearProgram, max_pivots: usize) -> Result<LpResult, LpError> {
    simplex_solve_with(
        lp,
        &SimplexOptions {
            max_pivots,
            rule: PricingRule::Bland,
        },
    )
}

pub fn simplex_solve_with(lp: &LinearProgram, options: &SimplexOptions) -> Result<LpResult, LpError> {
    lp.validate()?;
    let mut t = Tableau::build(lp)?;
    let status = t.run(options);
    let pivots = t.pivots;
    if status != LpStatus::Optimal {
        return Ok(LpResult {
            status,
            x: None,
            value: None,
            pivots,
        });
    }
    let x = t.primal(lp);
    Ok(LpResult {
        status,
        value: Some(lp.objective_value(&x)),
        x: Some(x),
        pivots,
    })
}

/// Standard-form tableau. Columns: structural (free variables split into ±),
/// then one slack per inequality. Artificial columns are never stored: each
/// row that needs one starts with an artificial basic variable, which can
/// only leave the basis.
struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows × (cols + 1)`, right-hand side last.
    data: Vec<f64>,
    /// Reduced costs `d_j` of the current phase (enter when `d_j > 0`), value last.
    cost: Vec<f64>,
    /// Basic column per row; `None` for an artificial.
    basis: Vec<Option<usize>>,
    /// Structural column `(original var, sign)`.
    origin: Vec<(usize, f64)>,
    /// Maximization costs of every column.
    c: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Self, LpError> {
        let mut origin = Vec::new();
        let mut column_of = vec![(0usize, None::<usize>); lp.num_vars()];
        for j in 0..lp.num_vars() {
            column_of[j].0 = origin.len();
            origin.push((j, 1.0));
            if lp.free[j] {
                column_of[j].1 = Some(origin.len());
                origin.push((j, -1.0));
            }
        }
        let structural = origin.len();
        let rows = lp.inequalities.len() + lp.equalities.len();
        let cols = structural + lp.inequalities.len();
        let width = cols + 1;
        let bytes = rows.saturating_mul(width).saturating_mul(8);
        if bytes > MAX_TABLEAU_BYTES {
            return Err(LpError::TooLarge { rows, cols });
        }
        let mut data = vec![0.0; rows * width];
        let mut basis = Vec::with_capacity(rows);
        let all_rows = lp.inequalities.iter().map(|r| (r, true)).chain(lp.equalities.iter().map(|r| (r, false)));
        for (r, (row, is_le)) in all_rows.enumerate() {
            let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            let line = &mut data[r * width..(r + 1) * width];
            for &(j, v) in &row.coeffs {
                let (pos, neg) = column_of[j];
                line[pos] += sign * v;
                if let Some(neg) = neg {
                    line[neg] -= sign * v;
                }
            }
            line[cols] = sign * row.rhs;
            if is_le {
                let slack = structural + r;
                line[slack] = sign;
                basis.push((sign > 0.0).then_some(slack));
            } else {
                basis.push(None);
            }
        }
        let mut c = vec![0.0; cols];
        for (k, &(j, s)) in origin.iter().enumerate() {
            c[k] = s * lp.objective[j];
        }
        Ok(Self {
            rows,
            cols,
            data,
            cost: vec![0.0; width],
            basis,
            origin,
            c,
            pivots: 0,
        })
    }

    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, k: usize) -> f64 {
        self.data[r * self.width() + k]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn run(&mut self, options: &SimplexOptions) -> LpStatus {
        if self.basis.iter().any(Option::is_none) {
            self.crash();
            self.phase_one_costs();
            match self.iterate(options, true) {
                LpStatus::Optimal => {}
                other => return other,
            }
            let scale = (0..self.rows).map(|r| self.rhs(r).abs()).fold(1.0, f64::max);
            // `cost[cols]` holds minus the phase-one objective, i.e. the artificial sum.
            if self.cost[self.cols] > LP_TOLERANCE * scale {
                return LpStatus::Infeasible;
            }
            self.drive_out_artificials();
        }
        self.phase_two_costs();
        self.iterate(options, false)
    }

    /// Replaces artificials with structural columns where that is free:
    /// a column positive in the artificial's row whose other nonzeros all sit
    /// in rows still covered by their own slack. Slack rows driven negative
    /// by these pivots are negated and handed an artificial instead.
    fn crash(&mut self) {
        let width = self.width();
        let structural = self.origin.len();
        let slack_of = |r: usize| structural + r;
        let own_slack = |t: &Self, r: usize| t.basis[r] == Some(slack_of(r));
        for r in 0..self.rows {
            if self.basis[r].is_some() {
                continue;
            }
            let candidate = (0..structural).find(|&k| {
                self.at(r, k) > 1e-9
                    && !self.basis.contains(&Some(k))
                    && (0..self.rows).all(|q| q == r || self.at(q, k) == 0.0 || own_slack(self, q))
            });
            if let Some(k) = candidate {
                self.pivot(r, k);
            }
        }
        for r in 0..self.rows {
            if own_slack(self, r) && self.rhs(r) < 0.0 {
                self.data[r * width..(r + 1) * width].iter_mut().for_each(|v| *v = -*v);
                self.basis[r] = None;
            }
        }
    }

    /// Maximize `−Σ artificials`: reduced costs are the sums of the artificial rows.
    fn phase_one_costs(&mut self) {
        let width = self.width();
        self.cost.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.rows {
            if self.basis[r].is_none() {
                for k in 0..width {
                    self.cost[k] += self.data[r * width + k];
                }
            }
        }
    }

    fn phase_two_costs(&mut self) {
        let width = self.width();
        self.cost[..self.cols].copy_from_slice(&self.c);
        self.cost[self.cols] = 0.0;
        for r in 0..self.rows {
            if let Some(b) = self.basis[r] {
                let cb = self.c[b];
                if cb != 0.0 {
                    for k in 0..width {
                        self.cost[k] -= cb * self.data[r * width + k];
                    }
                }
            }
        }
        for r in 0..self.rows {
            if let Some(b) = self.basis[r] {
                self.cost[b] = 0.0;
            }
        }
    }

    /// Pivots zero-level artificials out where a nonzero entry exists; rows
    /// without one are redundant and keep their artificial at zero.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.rows {
            if self.basis[r].is_some() {
                continue;
            }
            let width = self.width();
            let line = &self.data[r * width..r * width + self.cols];
            if let Some(k) = (0..self.cols).find(|&k| line[k].abs() > 1e-9) {
                self.pivot(r, k);
            }
        }
    }

    fn basis_rank(&self, r: usize) -> usize {
        // Artificials rank after every stored column for Bland tie-breaking.
        self.basis[r].unwrap_or(self.cols + r)
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let d = &self.cost[..self.cols];
        if bland {
            d.iter().position(|&v| v > LP_TOLERANCE)
        } else {
            let (k, &best) = d.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
            (best > LP_TOLERANCE).then_some(k)
        }
    }

    fn leaving(&self, k: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, k);
            if a <= 1e-9 {
                continue;
            }
            let ratio = self.rhs(r).max(0.0) / a;
            best = match best {
                None => Some((r, ratio)),
                Some((br, bv)) => {
                    if ratio < bv - 1e-12 * bv.abs().max(1.0)
                        || (ratio <= bv + 1e-12 * bv.abs().max(1.0) && self.basis_rank(r) < self.basis_rank(br))
                    {
                        Some((r, ratio))
                    } else {
                        Some((br, bv))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    fn iterate(&mut self, options: &SimplexOptions, phase_one: bool) -> LpStatus {
        let mut degenerate = 0;
        loop {
            let bland = match options.rule {
                PricingRule::Bland => true,
                PricingRule::DantzigWithBlandFallback => degenerate >= DEGENERATE_RUN,
            };
            let Some(k) = self.entering(bland) else {
                return LpStatus::Optimal;
            };
            let Some(r) = self.leaving(k) else {
                // Phase one is bounded by construction; treat as numerical breakdown.
                return if phase_one { LpStatus::Infeasible } else { LpStatus::Unbounded };
            };
            if self.pivots >= options.max_pivots {
                return LpStatus::IterationLimit;
            }
            if self.rhs(r) <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, k);
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let width = self.width();
        let start = pr * width;
        let inv = 1.0 / self.data[start + pc];
        let mut nz = Vec::new();
        for k in 0..width {
            let v = &mut self.data[start + k];
            if *v != 0.0 {
                *v *= inv;
                if v.abs() < DROP_TOL {
                    *v = 0.0;
                } else {
                    nz.push(k);
                }
            }
        }
        self.data[start + pc] = 1.0;
        let pivot_row: Vec<(usize, f64)> = nz.iter().map(|&k| (k, self.data[start + k])).collect();

        let eliminate = |line: &mut [f64]| {
            let f = line[pc];
            if f == 0.0 {
                return;
            }
            for &(k, v) in &pivot_row {
                let x = line[k] - f * v;
                line[k] = if x.abs() < DROP_TOL { 0.0 } else { x };
            }
            line[pc] = 0.0;
        };
        for (r, line) in self.data.chunks_exact_mut(width).enumerate() {
            if r != pr {
                eliminate(line);
            }
        }
        eliminate(&mut self.cost);
        self.basis[pr] = Some(pc);
        self.pivots += 1;
    }

    fn primal(&self, lp: &LinearProgram) -> Vec<f64> {
        let mut x = vec![0.0; lp.num_vars()];
        for r in 0..self.rows {
            if let Some(b) = self.basis[r] {
                if b < self.origin.len() {
                    let (j, s) = self.origin[b];
                    x[j] += s * self.rhs(r).max(0.0);
                }
            }
        }
        x
    }
}

/// Second-order dominance LP over a finite scenario set.
///
/// Variables are `(z, s)` with `s_ik` at index `d + i·K + k`. Maximizes
/// `Σ_i p_i ξ_iᵀz` subject to `Σ_i p_i s_ik ≤ Σ_j q_j (y_k − y_j)₊` for each `k`,
/// `s_ik + ξ_iᵀz ≥ y_k` for each `(i, k)`, `Σz = 1`, `z, s ≥ 0`.
/// Uniform `p` and `q` are used when not supplied.
pub fn build_sdlp(
    scenarios: &ScenarioBatch,
    reference: &[f64],
    p: Option<&[f64]>,
    q: Option<&[f64]>,
) -> Result<LinearProgram, LpError> {
    build_sdlp_shifted(scenarios, reference, p, q, 0.0)
}

fn probabilities(given: Option<&[f64]>, n: usize, what: &str) -> Result<Vec<f64>, LpError> {
    match given {
        None => Ok(vec![1.0 / n as f64; n]),
        Some(v) => {
            if v.len() != n {
                return Err(LpError::Dimension(format!("{what} has {} entries, expected {n}", v.len())));
            }
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (v.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(LpError::Probabilities(format!("{what} must be non-negative and sum to 1")));
            }
            Ok(v.to_vec())
        }
    }
}

/// [`build_sdlp`] demanding dominance over the reference shifted up by `shift`.
fn build_sdlp_shifted(
    scenarios: &ScenarioBatch,
    reference: &[f64],
    p: Option<&[f64]>,
    q: Option<&[f64]>,
    shift: f64,
) -> Result<LinearProgram, LpError> {
    let (m, d, kk) = (scenarios.len(), scenarios.dim(), reference.len());
    if m == 0 || kk == 0 {
        return Err(LpError::Dimension("need at least one scenario and one reference atom".into()));
    }
    let p = probabilities(p, m, "scenario probabilities")?;
    let q = probabilities(q, kk, "reference probabilities")?;
    let s = |i: usize, k: usize| d + i * kk + k;

    let mut objective = vec![0.0; d + m * kk];
    for (row, pi) in scenarios.rows().zip(&p) {
        for (c, x) in objective.iter_mut().zip(row) {
            *c += pi * x;
        }
    }
    let mut lp = LinearProgram::new(objective);
    for (k, yk) in reference.iter().enumerate() {
        let bound: f64 = reference.iter().zip(&q).map(|(yj, qj)| qj * (yk - yj).max(0.0)).sum();
        lp.add_le(Row {
            coeffs: (0..m).map(|i| (s(i, k), p[i])).collect(),
            rhs: bound,
        });
    }
    for (i, row) in scenarios.rows().enumerate() {
        for (k, yk) in reference.iter().enumerate() {
            let mut coeffs: Vec<(usize, f64)> = row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, -v)).collect();
            coeffs.push((s(i, k), -1.0));
            lp.add_le(Row {
                coeffs,
                rhs: -(yk + shift),
            });
        }
    }
    lp.add_eq(Row {
        coeffs: (0..d).map(|j| (j, 1.0)).collect(),
        rhs: 1.0,
    });
    lp.validate()?;
    Ok(lp)
}

/// Outcome of [`solve_sdlp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdlpSolution {
    pub status: LpStatus,
    /// Allocation after clean-up; present when some solve succeeded.
    pub z: Option<Vec<f64>>,
    /// Sample-average return `Σ p_i ξ_iᵀz` of the returned allocation.
    pub objective: Option<f64>,
    /// Reference shift the returned allocation was solved with.
    pub shift: f64,
    /// Weight placed on the anchor allocation to restore exact feasibility.
    pub anchor_blend: f64,
    /// Whether the returned allocation has an empty violation set on the build scenarios.
    pub feasible_on_build: bool,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdlpOptions {
    pub simplex: SimplexOptions,
    /// Allocation known to satisfy the constraint exactly, e.g. the reference weights.
    pub anchor: Option<Vec<f64>>,
}

impl Default for SdlpOptions {
    fn default() -> Self {
        Self {
            simplex: SimplexOptions {
                max_pivots: DEFAULT_MAX_PIVOTS,
                rule: PricingRule::DantzigWithBlandFallback,
            },
            anchor: None,
        }
    }
}

fn clean_simplex(z: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = clamped.iter().sum();
    clamped.iter().map(|v| v / s).collect()
}

/// Solves the dominance LP with uniform probabilities and returns an
/// allocation whose sample outcomes dominate `reference` exactly in floating
/// point.
///
/// The LP is first solved against the reference shifted up by a small margin,
/// so rounding in the solver cannot leave touching points violated. If that
/// is infeasible the unshifted LP is used, and if its rounded solution still
/// shows violations the allocation is blended toward `options.anchor`.
pub fn solve_sdlp(scenarios: &ScenarioBatch, reference: &[f64], options: &SdlpOptions) -> Result<SdlpSolution, LpError> {
    let d = scenarios.dim();
    let spec = PortfolioSpec::new(d).map_err(|e| LpError::Dimension(e.to_string()))?;
    let lo = reference.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = reference.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = (hi - lo).max(lo.abs()).max(hi.abs()).max(1e-12);
    let holds = |z: &[f64]| {
        let w = portfolio_outcomes(&spec, z, scenarios).expect("dimensions checked");
        violation_thresholds(Order::Second, &w, reference).is_empty()
    };

    let mut pivots = 0;
    let mut last: Option<(Vec<f64>, f64, LpStatus)> = None;
    for shift in [1e-7 * scale, 0.0] {
        let lp = build_sdlp_shifted(scenarios, reference, None, None, shift)?;
        let res = simplex_solve_with(&lp, &options.simplex)?;
        pivots += res.pivots;
        match res.x {
            Some(x) => {
                let z = clean_simplex(&x[..d]);
                if holds(&z) {
                    return Ok(finish(&spec, scenarios, z, res.status, shift, 0.0, true, pivots));
                }
                last = Some((z, shift, res.status));
            }
            None if last.is_none() && shift == 0.0 => {
                return Ok(SdlpSolution {
                    status: res.status,
                    z: None,
                    objective: None,
                    shift,
                    anchor_blend: 0.0,
                    feasible_on_build: false,
                    pivots,
                });
            }
            None => {}
        }
    }
    let (z, shift, status) = last.expect("an optimal solve reached this point");
    if let Some(anchor) = &options.anchor {
        for blend in [1e-9, 1e-6, 1e-3, 0.01, 0.1, 0.5, 1.0] {
            let mixed: Vec<f64> = if blend == 1.0 {
                anchor.clone()
            } else {
                z.iter().zip(anchor).map(|(a, b)| (1.0 - blend) * a + blend * b).collect()
            };
            if holds(&mixed) {
                return Ok(finish(&spec, scenarios, mixed, status, shift, blend, true, pivots));
            }
        }
    }
    Ok(finish(&spec, scenarios, z, status, shift, 0.0, false, pivots))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    spec: &PortfolioSpec,
    scenarios: &ScenarioBatch,
    z: Vec<f64>,
    status: LpStatus,
    shift: f64,
    anchor_blend: f64,
    feasible_on_build: bool,
    pivots: usize,
) -> SdlpSolution {
    let w = portfolio_outcomes(spec, &z, scenarios).expect("dimensions checked");
    SdlpSolution {
        status,
        objective: Some(w.iter().sum::<f64>() / w.len() as f64),
        z: Some(z),
        shift,
        anchor_blend,
        feasible_on_build,
        pivots,
    }
}

/// All weight on the asset with the largest sample mean; ties go to the lowest index.
pub fn greedy_portfolio(batch: &ScenarioBatch) -> Vec<f64> {
    let means = batch.column_means();
    let mut best = 0;
    for (j, m) in means.iter().enumerate() {
        if *m > means[best] {
            best = j;
        }
    }
    let mut z = vec![0.0; means.len()];
    z[best] = 1.0;
    z
}

/// Each region routed wholly to its cheapest warehouse; ties go to the lowest index.
pub fn greedy_transport(spec: &TransportSpec) -> Vec<f64> {
    let n = spec.warehouses();
    let mut z = vec![0.0; spec.regions() * n];
    for i in 0..spec.regions() {
        let mut best = 0;
        for j in 1..n {
            if spec.cost(i, j) < spec.cost(i, best) {
                best = j;
            }
        }
        z[i * n + best] = 1.0;
    }
    z
}
