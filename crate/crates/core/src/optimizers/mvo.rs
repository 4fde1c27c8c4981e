//! Multi-Verse Optimizer.
//!
//! Universes exchange coordinates through white/black holes chosen by a
//! roulette wheel on their inflation rate (objective rank here, so penalty
//! magnitudes do not matter), and wormholes pull coordinates toward the best
//! universe found so far with a shrinking travel distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{clamp_unit, OptimizeError, Outcome, Problem, Termination};

#[derive(Debug, Clone, PartialEq)]
pub struct MvoOptions {
    pub n_universes: usize,
    pub n_iter: usize,
    pub seed: u64,
    /// Wormhole existence probability at the first and last iteration.
    pub wep_min: f64,
    pub wep_max: f64,
    /// Exploitation exponent of the travelling distance rate.
    pub tdr_exponent: f64,
    /// Starting universes in physical coordinates; random when `None`.
    pub initial: Option<Vec<Vec<f64>>>,
}

impl Default for MvoOptions {
    fn default() -> Self {
        Self { n_universes: 10, n_iter: 200, seed: 0, wep_min: 0.2, wep_max: 1.0, tdr_exponent: 6.0, initial: None }
    }
}

impl MvoOptions {
    /// Evaluations needed to complete every iteration.
    pub fn evaluations(&self) -> usize {
        self.n_universes * (self.n_iter + 1)
    }
}

/// Wormhole existence probability and travelling distance rate at iteration `t` of `total`.
pub fn schedules(t: usize, total: usize, opts: &MvoOptions) -> (f64, f64) {
    let frac = t as f64 / total.max(1) as f64;
    let wep = opts.wep_min + frac * (opts.wep_max - opts.wep_min);
    let tdr = 1.0 - frac.powf(1.0 / opts.tdr_exponent);
    (wep, tdr)
}

fn roulette(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            return i;
        }
        r -= w;
    }
    weights.len() - 1
}

pub fn mvo(mut problem: Problem<'_>, opts: &MvoOptions) -> Result<Outcome, OptimizeError> {
    let n = opts.n_universes;
    if n < 2 {
        return Err(OptimizeError::InvalidOptions("n_universes must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&opts.wep_min) || !(opts.wep_min..=1.0).contains(&opts.wep_max) || opts.tdr_exponent <= 0.0 {
        return Err(OptimizeError::InvalidOptions(format!("{opts:?}")));
    }
    if problem.budget() == 0 {
        return Err(OptimizeError::ZeroBudget);
    }
    let dim = problem.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut universes: Vec<Vec<f64>> = match &opts.initial {
        Some(init) => {
            if init.len() != n || init.iter().any(|u| u.len() != dim) {
                return Err(OptimizeError::InvalidOptions("initial universes have the wrong shape".into()));
            }
            init.iter().map(|x| problem.bounds().to_unit(x)).collect()
        }
        None => (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect(),
    };

    let mut fitness = problem.evaluate_batch_unit(&universes);
    if fitness.len() < n {
        return Ok(problem.finish(Termination::BudgetExhausted));
    }
    let argmin = |f: &[f64]| (0..f.len()).fold(0, |b, i| if f[i] < f[b] { i } else { b });
    let mut best_idx = argmin(&fitness);
    let mut best_pos = universes[best_idx].clone();
    let mut best_val = fitness[best_idx];

    for t in 1..=opts.n_iter {
        let (wep, tdr) = schedules(t, opts.n_iter, opts);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
        let mut rank = vec![0usize; n];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        // Better universes emit more (white holes); worse ones absorb more.
        let emit: Vec<f64> = (0..n).map(|r| (n - r) as f64).collect();

        let mut next = universes.clone();
        for i in 0..n {
            if i == best_idx {
                continue;
            }
            let absorb = rank[i] as f64 / (n - 1) as f64;
            for j in 0..dim {
                if rng.random::<f64>() < absorb {
                    let white = order[roulette(&emit, &mut rng)];
                    next[i][j] = universes[white][j];
                }
                if rng.random::<f64>() < wep {
                    let toward = rng.random::<f64>() < 0.5;
                    let step = tdr * rng.random::<f64>();
                    next[i][j] = if toward { best_pos[j] + step } else { best_pos[j] - step };
                }
            }
            clamp_unit(&mut next[i]);
        }
        universes = next;
        fitness = problem.evaluate_batch_unit(&universes);
        if fitness.len() < n {
            return Ok(problem.finish(Termination::BudgetExhausted));
        }
        best_idx = argmin(&fitness);
        if fitness[best_idx] < best_val {
            best_val = fitness[best_idx];
            best_pos = universes[best_idx].clone();
        }
    }
    Ok(problem.finish(Termination::Completed))
}
