//! Optimization under first- and second-order stochastic dominance constraints.
//!
//! The solver runs projected stochastic gradient ascent on a Lagrangian whose
//! dual (utility) function is rebuilt every iteration from the thresholds at
//! which empirical dominance fails on the current batch. An exact LP
//! reformulation of second-order constraints serves as a baseline.

pub mod baseline_lp;
pub mod dual;
pub mod metrics;
pub mod problems;
pub mod scenario;
pub mod solver;
