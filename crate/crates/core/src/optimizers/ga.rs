//! Real-coded genetic algorithm: stochastic universal sampling on rank
//! fitness, uniform crossover and Gaussian mutation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{clamp_unit, OptimizeError, Outcome, Problem, Termination};

/// Variation operator settings. Genes live in the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct GaParams {
    /// Probability that a parent pair undergoes uniform crossover.
    pub crossover_prob: f64,
    /// Per-gene mutation probability.
    pub mutation_prob: f64,
    /// Mutation standard deviation as a fraction of the box range.
    pub mutation_sigma: f64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self { crossover_prob: 0.9, mutation_prob: 0.1, mutation_sigma: 0.05 }
    }
}

impl GaParams {
    fn mutates(&self) -> bool {
        self.mutation_prob > 0.0 && self.mutation_sigma > 0.0
    }

    pub(crate) fn validate(&self) -> Result<(), OptimizeError> {
        let p = 0.0..=1.0;
        if p.contains(&self.crossover_prob) && p.contains(&self.mutation_prob) && self.mutation_sigma >= 0.0 {
            Ok(())
        } else {
            Err(OptimizeError::InvalidOptions(format!("{self:?}")))
        }
    }
}

/// Linear rank fitness for minimization: the best of `n` scores `n`, the worst 1.
/// Ties keep input order.
pub fn rank_fitness(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut fit = vec![0.0; n];
    for (r, &i) in order.iter().enumerate() {
        fit[i] = (n - r) as f64;
    }
    fit
}

/// Stochastic universal sampling: `count` equally spaced pointers over the
/// cumulative `fitness` wheel with one random offset. Indices come back in
/// wheel order.
pub fn sus_select<R: Rng>(fitness: &[f64], count: usize, rng: &mut R) -> Vec<usize> {
    let total: f64 = fitness.iter().sum();
    let spacing = total / count as f64;
    let start = rng.random::<f64>() * spacing;
    let mut picks = Vec::with_capacity(count);
    let mut cumulative = 0.0;
    let mut i = 0;
    for k in 0..count {
        let pointer = start + k as f64 * spacing;
        while i + 1 < fitness.len() && cumulative + fitness[i] <= pointer {
            cumulative += fitness[i];
            i += 1;
        }
        picks.push(i);
    }
    picks
}

fn mutate<R: Rng>(genes: &mut [f64], prob: f64, sigma: f64, rng: &mut R) {
    for g in genes.iter_mut() {
        if rng.random::<f64>() < prob {
            let z: f64 = rng.sample(StandardNormal);
            *g += sigma * z;
        }
    }
    clamp_unit(genes);
}

/// Next population from an evaluated one. `values` are objective values
/// (lower is better). Population size must be even and at least 2.
pub fn ga_generation<R: Rng>(population: &[Vec<f64>], values: &[f64], params: &GaParams, rng: &mut R) -> Vec<Vec<f64>> {
    let n = population.len();
    assert!(n >= 2 && n.is_multiple_of(2), "population size must be even and >= 2, got {n}");
    assert_eq!(n, values.len());

    let mut mating = sus_select(&rank_fitness(values), n, rng);
    mating.shuffle(rng);
    let mut children: Vec<Vec<f64>> = mating.iter().map(|&i| population[i].clone()).collect();

    for pair in children.chunks_mut(2) {
        if rng.random::<f64>() < params.crossover_prob {
            let (a, b) = pair.split_at_mut(1);
            for (x, y) in a[0].iter_mut().zip(b[0].iter_mut()) {
                if rng.random::<f64>() < 0.5 {
                    std::mem::swap(x, y);
                }
            }
        }
    }
    if params.mutates() {
        for child in &mut children {
            mutate(child, params.mutation_prob, params.mutation_sigma, rng);
        }
        // Repeated genomes waste evaluations; push them apart.
        for i in 1..n {
            let mut tries = 0;
            while tries < 20 && children[..i].contains(&children[i]) {
                mutate(&mut children[i], 1.0, params.mutation_sigma, rng);
                tries += 1;
            }
        }
    }
    children
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOptions {
    pub population: usize,
    /// Generations to run (the first is the random initial population);
    /// `None` runs until the budget is spent.
    pub generations: Option<usize>,
    pub seed: u64,
    pub params: GaParams,
}

impl Default for GaOptions {
    fn default() -> Self {
        Self { population: 40, generations: None, seed: 0, params: GaParams::default() }
    }
}

pub(crate) fn random_population(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect()
}

/// Plain generational GA. The final generation is truncated if the budget
/// runs out part-way.
pub fn genetic_algorithm(mut problem: Problem<'_>, opts: &GaOptions) -> Result<Outcome, OptimizeError> {
    opts.params.validate()?;
    if opts.population < 2 || !opts.population.is_multiple_of(2) {
        return Err(OptimizeError::InvalidOptions(format!("population {} must be even and >= 2", opts.population)));
    }
    if problem.budget() == 0 {
        return Err(OptimizeError::ZeroBudget);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut population = random_population(opts.population, problem.dim(), &mut rng);
    let mut generation = 0;
    loop {
        let values = problem.evaluate_batch_unit(&population);
        generation += 1;
        if values.len() < population.len() || problem.exhausted() {
            return Ok(problem.finish(Termination::BudgetExhausted));
        }
        if opts.generations.is_some_and(|g| generation >= g) {
            return Ok(problem.finish(Termination::Completed));
        }
        population = ga_generation(&population, &values, &opts.params, &mut rng);
    }
}
