//! Sample-based dual functions for first- and second-order dominance constraints.
//!
//! For one constraint on one batch, the dual is supported on the finite set of
//! sample-aligned thresholds `η` where empirical dominance fails. Order 1 uses
//! the smoothed step `−tanh((η − x)/τ)`, order 2 the hinge `−(η − x)₊`; both are
//! averaged over the threshold set, so they are nondecreasing in `x` and the
//! order-2 dual is concave.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dominance order `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn as_u8(self) -> u8 {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }
}

impl TryFrom<u8> for Order {
    type Error = String;

    fn try_from(k: u8) -> Result<Self, Self::Error> {
        match k {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(format!("dominance order must be 1 or 2, got {k}")),
        }
    }
}

impl From<Order> for u8 {
    fn from(o: Order) -> u8 {
        o.as_u8()
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DualError {
    #[error("support interval needs finite a <= b, got [{0}, {1}]")]
    Interval(f64, f64),
    #[error("support interval of an empty value set")]
    NoValues,
    #[error("temperature must be finite and > 0, got {0}")]
    Temperature(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportInterval {
    a: f64,
    b: f64,
}

impl SupportInterval {
    pub fn new(a: f64, b: f64) -> Result<Self, DualError> {
        if a.is_finite() && b.is_finite() && a <= b {
            Ok(Self { a, b })
        } else {
            Err(DualError::Interval(a, b))
        }
    }

    pub fn lower(&self) -> f64 {
        self.a
    }

    pub fn upper(&self) -> f64 {
        self.b
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }
}

/// `[min − margin·range, max + margin·range]` over all supplied values.
pub fn support_interval<'a, I>(values: I, margin: f64) -> Result<SupportInterval, DualError>
where
    I: IntoIterator<Item = &'a f64>,
{
    let (lo, hi) = values
        .into_iter()
        .fold(None, |acc: Option<(f64, f64)>, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
        .ok_or(DualError::NoValues)?;
    let range = hi - lo;
    SupportInterval::new(lo - margin * range, hi + margin * range)
}

/// Default order-1 temperature: 5% of the support width, floored at 1e-6.
pub fn default_temperature(interval: &SupportInterval) -> f64 {
    (0.05 * interval.width()).max(1e-6)
}

/// `Σ_x 1(η ≥ x)`.
pub fn h_k1(samples: &[f64], eta: f64) -> usize {
    samples.iter().filter(|&&x| eta >= x).count()
}

/// `Σ_x (η − x)₊`.
pub fn h_k2(samples: &[f64], eta: f64) -> f64 {
    samples.iter().map(|&x| (eta - x).max(0.0)).sum()
}

/// Finite violating-threshold support `μ̃*` of a dual function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    thresholds: Vec<f64>,
    order: Order,
}

impl ThresholdSet {
    /// Sorts and deduplicates; non-finite values are dropped.
    pub fn new(order: Order, mut thresholds: Vec<f64>) -> Self {
        thresholds.retain(|t| t.is_finite());
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();
        Self { thresholds, order }
    }

    pub fn empty(order: Order) -> Self {
        Self {
            thresholds: Vec::new(),
            order,
        }
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

/// Sorted samples with prefix sums, for `O(log n)` evaluation of both `h` functions.
#[derive(Debug, Clone)]
pub(crate) struct SortedSamples {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
}

impl SortedSamples {
    pub(crate) fn new(samples: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &x in &sorted {
            acc += x;
            prefix.push(acc);
        }
        Self { sorted, prefix }
    }

    pub(crate) fn len(&self) -> usize {
        self.sorted.len()
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Number of samples `x ≤ η`.
    pub(crate) fn count_le(&self, eta: f64) -> usize {
        self.sorted.partition_point(|&x| x <= eta)
    }

    /// `Σ (η − x)₊`.
    pub(crate) fn hinge_sum(&self, eta: f64) -> f64 {
        let c = self.count_le(eta);
        c as f64 * eta - self.prefix[c]
    }
}

/// Thresholds `η` drawn from both sample sets where `dominant ⪰_k dominated`
/// fails on this batch, i.e. where the normalized `h_k(dominant)(η)` strictly
/// exceeds `h_k(dominated)(η)`.
///
/// The caller resolves orientation: `dominant` is the side that is required to
/// dominate. Empty iff empirical `k`-th order dominance holds.
pub fn violation_thresholds(order: Order, dominant: &[f64], dominated: &[f64]) -> ThresholdSet {
    if dominant.is_empty() || dominated.is_empty() {
        return ThresholdSet::empty(order);
    }
    let dom = SortedSamples::new(dominant);
    let refd = SortedSamples::new(dominated);
    let (n_dom, n_ref) = (dom.len() as f64, refd.len() as f64);
    let same_size = dom.len() == refd.len();

    let mut candidates: Vec<f64> = dom.values().iter().chain(refd.values()).copied().collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let violated = candidates
        .into_iter()
        .filter(|&eta| match order {
            Order::First => dom.count_le(eta) * refd.len() > refd.count_le(eta) * dom.len(),
            Order::Second => {
                let (hd, hr) = (dom.hinge_sum(eta), refd.hinge_sum(eta));
                if same_size {
                    hd > hr
                } else {
                    hd * n_ref > hr * n_dom
                }
            }
        })
        .collect();
    ThresholdSet {
        thresholds: violated,
        order,
    }
}

/// Averaged dual function over a threshold set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFunction {
    thresholds: ThresholdSet,
    /// Smoothing temperature; only used for order 1.
    temperature: f64,
}

impl DualFunction {
    /// `temperature` is ignored for order 2 but must still be positive.
    pub fn new(thresholds: ThresholdSet, temperature: f64) -> Result<Self, DualError> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(DualError::Temperature(temperature));
        }
        Ok(Self {
            thresholds,
            temperature,
        })
    }

    pub fn second_order(thresholds: ThresholdSet) -> Self {
        Self {
            thresholds,
            temperature: 1.0,
        }
    }

    pub fn order(&self) -> Order {
        self.thresholds.order
    }

    pub fn thresholds(&self) -> &ThresholdSet {
        &self.thresholds
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn value(&self, x: f64) -> f64 {
        let t = self.thresholds.as_slice();
        if t.is_empty() {
            return 0.0;
        }
        let n = t.len() as f64;
        match self.order() {
            Order::First => -t.iter().map(|&eta| ((eta - x) / self.temperature).tanh()).sum::<f64>() / n,
            Order::Second => {
                let start = t.partition_point(|&eta| eta <= x);
                -t[start..].iter().map(|&eta| eta - x).sum::<f64>() / n
            }
        }
    }

    /// Exact derivative in `x`; at an order-2 kink the right derivative.
    pub fn derivative(&self, x: f64) -> f64 {
        let t = self.thresholds.as_slice();
        if t.is_empty() {
            return 0.0;
        }
        let n = t.len() as f64;
        match self.order() {
            Order::First => {
                let tau = self.temperature;
                t.iter()
                    .map(|&eta| {
                        let c = ((eta - x) / tau).cosh();
                        1.0 / (c * c)
                    })
                    .sum::<f64>()
                    / (n * tau)
            }
            Order::Second => {
                let above = t.len() - t.partition_point(|&eta| eta <= x);
                above as f64 / n
            }
        }
    }
}

pub fn dual_value(u: &DualFunction, x: f64) -> f64 {
    u.value(x)
}

pub fn dual_derivative(u: &DualFunction, x: f64) -> f64 {
    u.derivative(x)
}
