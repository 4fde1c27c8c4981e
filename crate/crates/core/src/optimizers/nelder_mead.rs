//! Nelder-Mead downhill simplex with clamping to the box.

use super::{clamp_unit, start_to_unit, OptimizeError, Outcome, Problem, Termination};

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Initial vertex offset along each axis, as a fraction of the box range.
    pub initial_step: f64,
    /// Stop when every vertex is within this unit-cube distance of the best.
    pub diameter_tol: f64,
    /// After convergence, rebuild a simplex around the best point and keep
    /// going until the budget is spent.
    pub restart_until_budget: bool,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.05,
            diameter_tol: 1e-6,
            restart_until_budget: false,
        }
    }
}

impl NelderMeadOptions {
    fn validate(&self) -> Result<(), OptimizeError> {
        let ok = self.reflection > 0.0
            && self.expansion > 1.0
            && self.contraction > 0.0
            && self.contraction <= 0.5
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.initial_step > 0.0
            && self.initial_step <= 1.0
            && self.diameter_tol >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(OptimizeError::InvalidOptions(format!("{self:?}")))
        }
    }
}

/// Minimizes from `x0` (physical coordinates) until the simplex collapses or
/// the problem's budget runs out.
pub fn nelder_mead(mut problem: Problem<'_>, x0: &[f64], opts: &NelderMeadOptions) -> Result<Outcome, OptimizeError> {
    opts.validate()?;
    if problem.budget() == 0 {
        return Err(OptimizeError::ZeroBudget);
    }
    let u0 = start_to_unit(problem.bounds(), x0)?;
    let termination = run(&mut problem, u0, opts);
    Ok(problem.finish(termination))
}

/// Runs on an existing problem from unit-cube point `u0`.
pub(crate) fn run(problem: &mut Problem<'_>, u0: Vec<f64>, opts: &NelderMeadOptions) -> Termination {
    let mut start = u0;
    let mut known: Option<f64> = None;
    loop {
        match descend(problem, start, known, opts) {
            Ok((best, value)) if opts.restart_until_budget && !problem.exhausted() => {
                start = best;
                known = Some(value);
            }
            Ok(_) => return Termination::Converged,
            Err(t) => return t,
        }
    }
}

fn initial_simplex(u0: &[f64], step: f64) -> Vec<Vec<f64>> {
    let n = u0.len();
    let mut simplex = vec![u0.to_vec()];
    for i in 0..n {
        let mut v = u0.to_vec();
        v[i] = if v[i] + step <= 1.0 { v[i] + step } else { v[i] - step };
        simplex.push(v);
    }
    simplex
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .flat_map(|v| v.iter().zip(best).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

fn sort(simplex: &mut Vec<Vec<f64>>, values: &mut Vec<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    *simplex = order.iter().map(|&i| simplex[i].clone()).collect();
    *values = order.iter().map(|&i| values[i]).collect();
}

/// One simplex descent. `Ok` carries the converged best vertex; `Err` the
/// reason for stopping early.
fn descend(
    problem: &mut Problem<'_>,
    u0: Vec<f64>,
    f0: Option<f64>,
    opts: &NelderMeadOptions,
) -> Result<(Vec<f64>, f64), Termination> {
    let n = u0.len();
    let mut simplex = initial_simplex(&u0, opts.initial_step);
    let mut values = match f0 {
        Some(f) => {
            let mut v = vec![f];
            v.extend(problem.evaluate_batch_unit(&simplex[1..]));
            v
        }
        None => problem.evaluate_batch_unit(&simplex),
    };
    if values.len() < simplex.len() {
        return Err(Termination::BudgetExhausted);
    }
    let eval = |problem: &mut Problem<'_>, mut u: Vec<f64>| -> Result<(Vec<f64>, f64), Termination> {
        clamp_unit(&mut u);
        problem.evaluate_unit(&u).map(|f| (u, f)).ok_or(Termination::BudgetExhausted)
    };

    loop {
        sort(&mut simplex, &mut values);
        if diameter(&simplex) < opts.diameter_tol {
            return Ok((simplex[0].clone(), values[0]));
        }
        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |from: &[f64], to: &[f64], t: f64| -> Vec<f64> {
            from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
        };
        let worst = simplex[n].clone();
        let (xr, fr) = eval(problem, along(&centroid, &worst, -opts.reflection))?;

        if fr < values[0] {
            let (xe, fe) = eval(problem, along(&centroid, &xr, opts.expansion))?;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let accepted = if fr < values[n] {
            let (xc, fc) = eval(problem, along(&centroid, &xr, opts.contraction))?;
            (fc <= fr).then_some((xc, fc))
        } else {
            let (xc, fc) = eval(problem, along(&centroid, &worst, opts.contraction))?;
            (fc < values[n]).then_some((xc, fc))
        };
        match accepted {
            Some((x, f)) => {
                simplex[n] = x;
                values[n] = f;
            }
            None => {
                let best = simplex[0].clone();
                let shrunk: Vec<Vec<f64>> = simplex[1..].iter().map(|v| along(&best, v, opts.shrink)).collect();
                let fs = problem.evaluate_batch_unit(&shrunk);
                if fs.len() < shrunk.len() {
                    return Err(Termination::BudgetExhausted);
                }
                for (i, (v, f)) in shrunk.into_iter().zip(fs).enumerate() {
                    simplex[i + 1] = v;
                    values[i + 1] = f;
                }
            }
        }
    }
}
