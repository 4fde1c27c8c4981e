//! Box-constrained quasi-Newton search.
//!
//! BFGS on a forward-difference gradient with a projected backtracking line
//! search. Coordinates sitting on a bound whose gradient points outward are
//! frozen for the step (active set).

use nalgebra::{DMatrix, DVector};

use super::{start_to_unit, OptimizeError, Outcome, Problem, Termination};

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOptions {
    /// Finite-difference step as a fraction of each box range.
    pub fd_step: f64,
    /// Stop when the projected gradient's max-norm, divided by `max(1, |f|)`,
    /// falls below this.
    pub gradient_tol: f64,
    pub max_iterations: usize,
    /// Sufficient-decrease constant for the line search.
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Cap on the first trial step (unit-cube max-norm) before curvature is known.
    pub initial_step: f64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self {
            fd_step: 1e-6,
            gradient_tol: 1e-6,
            max_iterations: 200,
            armijo: 1e-4,
            max_backtracks: 40,
            initial_step: 0.1,
        }
    }
}

impl LocalOptions {
    fn validate(&self) -> Result<(), OptimizeError> {
        let ok = self.fd_step > 0.0
            && self.fd_step < 0.5
            && self.gradient_tol >= 0.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.initial_step > 0.0;
        if ok {
            Ok(())
        } else {
            Err(OptimizeError::InvalidOptions(format!("{self:?}")))
        }
    }
}

/// Forward differences, stepping backward on coordinates at the upper bound.
fn gradient(problem: &mut Problem<'_>, u: &DVector<f64>, f: f64, h: f64) -> Option<DVector<f64>> {
    let n = u.len();
    let probes: Vec<(Vec<f64>, f64)> = (0..n)
        .map(|i| {
            let mut p: Vec<f64> = u.iter().copied().collect();
            let step = if p[i] + h <= 1.0 { h } else { -h };
            p[i] += step;
            (p, step)
        })
        .collect();
    let points: Vec<Vec<f64>> = probes.iter().map(|(p, _)| p.clone()).collect();
    let values = problem.evaluate_batch_unit(&points);
    if values.len() < n {
        return None;
    }
    Some(DVector::from_iterator(n, values.iter().zip(&probes).map(|(fi, (_, step))| (fi - f) / step)))
}

fn free_mask(u: &DVector<f64>, g: &DVector<f64>) -> Vec<bool> {
    u.iter().zip(g.iter()).map(|(&x, &gi)| !((x <= 0.0 && gi > 0.0) || (x >= 1.0 && gi < 0.0))).collect()
}

fn masked(v: &DVector<f64>, free: &[bool]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().zip(free).map(|(x, &f)| if f { *x } else { 0.0 }))
}

/// Minimizes from the feasible point `x0`. Fails if the objective reports
/// `x0` infeasible.
pub fn local_gradient_search(
    mut problem: Problem<'_>,
    x0: &[f64],
    opts: &LocalOptions,
) -> Result<Outcome, OptimizeError> {
    opts.validate()?;
    if problem.budget() == 0 {
        return Err(OptimizeError::ZeroBudget);
    }
    let u0 = start_to_unit(problem.bounds(), x0)?;
    let first = problem.evaluate_unit_full(&u0).ok_or(OptimizeError::ZeroBudget)?;
    if !first.feasible {
        return Err(OptimizeError::InfeasibleStart(first.value));
    }
    let termination = run(&mut problem, DVector::from_vec(u0), first.value, opts);
    Ok(problem.finish(termination))
}

fn run(problem: &mut Problem<'_>, mut u: DVector<f64>, mut f: f64, opts: &LocalOptions) -> Termination {
    let n = u.len();
    let Some(mut g) = gradient(problem, &u, f, opts.fd_step) else {
        return Termination::BudgetExhausted;
    };
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut curvature_known = false;
    let mut free = free_mask(&u, &g);

    for _ in 0..opts.max_iterations {
        let pg = masked(&g, &free);
        if pg.amax() / f.abs().max(1.0) < opts.gradient_tol {
            return Termination::Converged;
        }
        let mut p = masked(&(-(&h_inv * &pg)), &free);
        if p.dot(&pg) >= 0.0 {
            h_inv = DMatrix::identity(n, n);
            curvature_known = false;
            p = -pg.clone();
        }
        let mut alpha = if curvature_known { 1.0 } else { (opts.initial_step / p.amax()).min(1.0) };

        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial = (&u + alpha * &p).map(|v| v.clamp(0.0, 1.0));
            let d = &trial - &u;
            if d.amax() == 0.0 {
                break;
            }
            let Some(ft) = problem.evaluate_unit(trial.as_slice()) else {
                return Termination::BudgetExhausted;
            };
            if ft <= f + opts.armijo * g.dot(&d) {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((u_new, f_new)) = accepted else {
            return Termination::Stalled;
        };
        let Some(g_new) = gradient(problem, &u_new, f_new, opts.fd_step) else {
            return Termination::BudgetExhausted;
        };

        let new_free = free_mask(&u_new, &g_new);
        let s = &u_new - &u;
        let y = masked(&(&g_new - &g), &new_free);
        let sy = s.dot(&y);
        if new_free != free {
            h_inv = DMatrix::identity(n, n);
            curvature_known = false;
        } else if sy > 1e-12 * s.norm() * y.norm() {
            if !curvature_known {
                h_inv *= sy / y.dot(&y);
                curvature_known = true;
            }
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - rho * &s * y.transpose();
            let right = &eye - rho * &y * s.transpose();
            h_inv = &left * &h_inv * &right + rho * &s * s.transpose();
        }
        u = u_new;
        f = f_new;
        g = g_new;
        free = new_free;
    }
    Termination::Completed
}
