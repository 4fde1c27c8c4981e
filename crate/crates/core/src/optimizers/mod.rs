//! Box-constrained minimizers over a black-box objective.
//!
//! Every optimizer talks to the objective through a [`Problem`], which owns
//! the evaluation budget and the [`OptimizationTrace`]. Optimizers work in
//! unit-cube coordinates; the problem maps them onto the physical box and
//! clamps, so every traced design lies inside the bounds.

use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

use crate::exec::Execution;

pub mod ga;
pub mod gsf;
pub mod kriging;
pub mod local;
pub mod mvo;
pub mod nelder_mead;

pub use ga::{ga_generation, genetic_algorithm, sus_select, GaOptions, GaParams};
pub use gsf::{gsf_run, GsfConfig};
pub use kriging::{KrigingError, KrigingModel};
pub use local::{local_gradient_search, LocalOptions};
pub use mvo::{mvo, MvoOptions};
pub use nelder_mead::{nelder_mead, NelderMeadOptions};

/// Trace file header for four-variable designs.
pub const TRACE_HEADER: &str = "eval_index,ap,vh0,vl0,pl0,objective,feasible";

#[derive(Debug, Error, PartialEq)]
pub enum OptimizeError {
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("starting point has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("starting point {0:?} is outside the bounds")]
    StartOutsideBounds(Vec<f64>),
    #[error("objective is infeasible at the starting point (value {0})")]
    InfeasibleStart(f64),
    #[error("evaluation budget must be positive")]
    ZeroBudget,
}

/// Value returned by an objective. Lower is better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub feasible: bool,
}

/// A scalar function of a design in physical coordinates.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> Evaluation;
}

/// Plain closures are objectives; a non-finite value counts as infeasible.
impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> Evaluation {
        let value = self(x);
        Evaluation { value, feasible: value.is_finite() }
    }
}

/// Closed box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, OptimizeError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(OptimizeError::InvalidBounds(format!("{} lower vs {} upper", lower.len(), upper.len())));
        }
        if lower.iter().zip(&upper).any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(OptimizeError::InvalidBounds(format!("{lower:?} / {upper:?}")));
        }
        Ok(Self { lower, upper })
    }

    /// The same interval in every dimension.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self, OptimizeError> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, v)| *v >= self.lower[i] && *v <= self.upper[i])
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, v)| ((v - self.lower[i]) / (self.upper[i] - self.lower[i])).clamp(0.0, 1.0))
            .collect()
    }

    /// Physical point for unit coordinates `u`, clamped so the end points
    /// map exactly onto the bounds.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, &v)| {
                let (lo, hi) = (self.lower[i], self.upper[i]);
                if v <= 0.0 {
                    lo
                } else if v >= 1.0 {
                    hi
                } else {
                    (lo + v * (hi - lo)).clamp(lo, hi)
                }
            })
            .collect()
    }
}

pub(crate) fn clamp_unit(u: &mut [f64]) {
    for v in u {
        *v = if v.is_nan() { 0.5 } else { v.clamp(0.0, 1.0) };
    }
}

/// One objective call.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub index: usize,
    /// Physical coordinates.
    pub x: Vec<f64>,
    pub value: f64,
    pub feasible: bool,
    /// Seconds spent inside the objective; not exported, so trace files stay
    /// reproducible.
    pub wall_time: f64,
}

/// Every evaluation of a run, in index order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizationTrace {
    pub records: Vec<TraceRecord>,
}

fn order_key(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

impl OptimizationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Lowest-valued record; the earliest one on ties.
    pub fn best(&self) -> Option<&TraceRecord> {
        self.records
            .iter()
            .reduce(|best, r| if order_key(r.value) < order_key(best.value) { r } else { best })
    }

    /// Running minimum of the objective.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.records
            .iter()
            .map(|r| {
                best = best.min(order_key(r.value));
                best
            })
            .collect()
    }

    pub fn infeasible_count(&self) -> usize {
        self.records.iter().filter(|r| !r.feasible).count()
    }

    /// Delimited text with one row per evaluation. Four-dimensional traces
    /// use [`TRACE_HEADER`]; other dimensions get `x0..xn` columns.
    pub fn to_csv(&self) -> String {
        let dim = self.records.first().map_or(4, |r| r.x.len());
        let mut out = if dim == 4 {
            format!("{TRACE_HEADER}\n")
        } else {
            let cols: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
            format!("eval_index,{},objective,feasible\n", cols.join(","))
        };
        for r in &self.records {
            let _ = write!(out, "{}", r.index);
            for v in &r.x {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{},{}", r.value, r.feasible);
        }
        out
    }
}

/// Why an optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The optimizer's own convergence test fired.
    Converged,
    BudgetExhausted,
    /// No further progress possible (e.g. failed line search).
    Stalled,
    /// A fixed iteration or generation count completed.
    Completed,
}

/// Trace plus stopping reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub trace: OptimizationTrace,
    pub termination: Termination,
}

impl Outcome {
    pub fn best(&self) -> Option<&TraceRecord> {
        self.trace.best()
    }

    pub fn budget_exhausted(&self) -> bool {
        self.termination == Termination::BudgetExhausted
    }
}

/// Budgeted, traced access to an objective.
pub struct Problem<'a> {
    objective: &'a dyn Objective,
    bounds: Bounds,
    budget: usize,
    exec: Execution,
    trace: OptimizationTrace,
}

impl<'a> Problem<'a> {
    pub fn new(objective: &'a dyn Objective, bounds: Bounds, budget: usize) -> Self {
        Self { objective, bounds, budget, exec: Execution::default(), trace: OptimizationTrace::default() }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn evaluations(&self) -> usize {
        self.trace.len()
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.trace.len()
    }

    pub fn exhausted(&self) -> bool {
        self.remaining() == 0
    }

    pub fn trace(&self) -> &OptimizationTrace {
        &self.trace
    }

    /// Unit coordinates of the best design so far with its value.
    pub fn best_unit(&self) -> Option<(Vec<f64>, f64)> {
        self.trace.best().map(|r| (self.bounds.to_unit(&r.x), r.value))
    }

    fn timed(objective: &dyn Objective, x: &[f64]) -> (Evaluation, f64) {
        let start = Instant::now();
        let e = objective.evaluate(x);
        (e, start.elapsed().as_secs_f64())
    }

    fn record(&mut self, x: Vec<f64>, e: Evaluation, wall_time: f64) -> f64 {
        let value = if e.value.is_nan() { f64::INFINITY } else { e.value };
        let index = self.trace.len();
        self.trace.records.push(TraceRecord { index, x, value, feasible: e.feasible, wall_time });
        value
    }

    /// Evaluates the unit-cube point `u` (clamped). `None` once the budget is spent.
    pub fn evaluate_unit(&mut self, u: &[f64]) -> Option<f64> {
        Some(self.evaluate_unit_full(u)?.value)
    }

    pub(crate) fn evaluate_unit_full(&mut self, u: &[f64]) -> Option<Evaluation> {
        if self.exhausted() {
            return None;
        }
        let mut u = u.to_vec();
        clamp_unit(&mut u);
        let x = self.bounds.from_unit(&u);
        let (e, wall) = Self::timed(self.objective, &x);
        let value = self.record(x, e, wall);
        Some(Evaluation { value, feasible: e.feasible })
    }

    /// Evaluates as many of `us` as the budget allows, concurrently when the
    /// execution mode permits. Values come back (and are traced) in input order.
    pub fn evaluate_batch_unit(&mut self, us: &[Vec<f64>]) -> Vec<f64> {
        let n = us.len().min(self.remaining());
        let xs: Vec<Vec<f64>> = us[..n]
            .iter()
            .map(|u| {
                let mut u = u.clone();
                clamp_unit(&mut u);
                self.bounds.from_unit(&u)
            })
            .collect();
        let objective = self.objective;
        let results = self.exec.map(&xs, |x| Self::timed(objective, x));
        xs.into_iter().zip(results).map(|(x, (e, wall))| self.record(x, e, wall)).collect()
    }

    pub fn finish(self, termination: Termination) -> Outcome {
        Outcome { trace: self.trace, termination }
    }
}

/// Physical starting point converted to unit coordinates after validation.
pub(crate) fn start_to_unit(bounds: &Bounds, x0: &[f64]) -> Result<Vec<f64>, OptimizeError> {
    if x0.len() != bounds.dim() {
        return Err(OptimizeError::DimensionMismatch { expected: bounds.dim(), got: x0.len() });
    }
    if !bounds.contains(x0) {
        return Err(OptimizeError::StartOutsideBounds(x0.to_vec()));
    }
    Ok(bounds.to_unit(x0))
}

#[cfg(test)]
pub(crate) mod testfns {
    pub fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    pub fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_mapping_hits_bounds_exactly() {
        let b = Bounds::new(vec![0.045, 3.5e6], vec![0.18, 9.6e6]).unwrap();
        assert_eq!(b.from_unit(&[0.0, 1.0]), vec![0.045, 9.6e6]);
        assert_eq!(b.from_unit(&[1.0, 0.0]), vec![0.18, 3.5e6]);
        assert!(Bounds::new(vec![1.0], vec![1.0]).is_err());
        assert!(Bounds::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn problem_enforces_budget_and_order() {
        let f = |x: &[f64]| x[0];
        let mut p = Problem::new(&f, Bounds::cube(1, 0.0, 10.0).unwrap(), 3);
        assert_eq!(p.evaluate_unit(&[0.5]), Some(5.0));
        let batch = p.evaluate_batch_unit(&[vec![0.1], vec![0.2], vec![0.3]]);
        assert_eq!(batch, vec![1.0, 2.0]);
        assert_eq!(p.evaluate_unit(&[0.9]), None);
        let out = p.finish(Termination::BudgetExhausted);
        let idx: Vec<usize> = out.trace.records.iter().map(|r| r.index).collect();
        assert_eq!(idx, vec![0, 1, 2]);
        assert_eq!(out.best().unwrap().value, 1.0);
    }

    #[test]
    fn out_of_box_points_are_clamped() {
        let f = |x: &[f64]| x[0];
        let mut p = Problem::new(&f, Bounds::cube(1, -1.0, 1.0).unwrap(), 2);
        assert_eq!(p.evaluate_unit(&[1.7]), Some(1.0));
        assert_eq!(p.evaluate_unit(&[-3.0]), Some(-1.0));
    }

    #[test]
    fn trace_csv_shape() {
        let f = |x: &[f64]| testfns::sphere(x);
        let mut p = Problem::new(&f, Bounds::cube(4, 0.0, 1.0).unwrap(), 2);
        p.evaluate_unit(&[0.0; 4]);
        p.evaluate_unit(&[1.0; 4]);
        let csv = p.finish(Termination::Completed).trace.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines[1], "0,0,0,0,0,0,true");
        assert_eq!(lines[2], "1,1,1,1,1,4,true");
    }

    proptest! {
        #[test]
        fn best_so_far_is_non_increasing(v in prop::collection::vec(-1e3f64..1e3, 1..100)) {
            let trace = OptimizationTrace {
                records: v.iter().enumerate().map(|(i, &value)| TraceRecord {
                    index: i, x: vec![0.0], value, feasible: true, wall_time: 0.0,
                }).collect(),
            };
            let b = trace.best_so_far();
            prop_assert!(b.windows(2).all(|w| w[1] <= w[0]));
            prop_assert_eq!(*b.last().unwrap(), trace.best().unwrap().value);
        }

        #[test]
        fn unit_round_trip(u in prop::collection::vec(0f64..=1.0, 3)) {
            let b = Bounds::new(vec![0.045, 0.5, 3.5e6], vec![0.18, 10.0, 9.6e6]).unwrap();
            let x = b.from_unit(&u);
            prop_assert!(b.contains(&x));
            let back = b.to_unit(&x);
            for (a, c) in u.iter().zip(&back) {
                prop_assert!((a - c).abs() < 1e-12);
            }
        }
    }
}
