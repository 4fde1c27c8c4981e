//! Genetic algorithm with surrogate-suggested individuals, finished by a
//! Nelder-Mead polish from the incumbent.
//!
//! Each generation, a Kriging model fitted to the best feasible evaluations
//! so far is searched by random probing (free: no true evaluations); its best
//! predicted points replace the offspring the model likes least.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ga::{ga_generation, random_population, GaParams};
use super::kriging::KrigingModel;
use super::nelder_mead::{self, NelderMeadOptions};
use super::{clamp_unit, OptimizeError, Outcome, Problem, Termination};

#[derive(Debug, Clone, PartialEq)]
pub struct GsfConfig {
    pub population: usize,
    /// Fraction of each new generation taken from the surrogate.
    pub elitism: f64,
    pub generations: usize,
    /// Simplex evaluations after the GA phase.
    pub polish_evaluations: usize,
    pub seed: u64,
    pub ga: GaParams,
    /// Model evaluations per generation when searching the surrogate.
    pub surrogate_probes: usize,
    /// Cap on surrogate training points (best feasible first).
    pub max_training: usize,
}

impl Default for GsfConfig {
    fn default() -> Self {
        Self::preset(2, 0).expect("preset 2 exists")
    }
}

/// `(population, elitism)` for presets 1 to 6.
const PRESETS: [(usize, f64); 6] = [(40, 0.1), (60, 0.1), (80, 0.1), (40, 0.2), (60, 0.2), (80, 0.2)];

impl GsfConfig {
    /// Preset `k` in `1..=6`: 50 generations and 100 polish evaluations.
    pub fn preset(k: usize, seed: u64) -> Option<Self> {
        let &(population, elitism) = PRESETS.get(k.checked_sub(1)?)?;
        Some(Self {
            population,
            elitism,
            generations: 50,
            polish_evaluations: 100,
            seed,
            ga: GaParams::default(),
            surrogate_probes: 1000,
            max_training: 80,
        })
    }

    /// `gsf1` .. `gsf6`, case-insensitive.
    pub fn preset_by_name(name: &str, seed: u64) -> Option<Self> {
        let lower = name.to_ascii_lowercase();
        let k = lower.strip_prefix("gsf")?.parse().ok()?;
        Self::preset(k, seed)
    }

    pub fn total_evaluations(&self) -> usize {
        self.population * self.generations + self.polish_evaluations
    }

    /// Individuals replaced by surrogate suggestions each generation.
    pub fn surrogate_count(&self) -> usize {
        (self.elitism * self.population as f64).ceil() as usize
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        self.ga.validate()?;
        let bad = |m: &str| Err(OptimizeError::InvalidOptions(m.to_owned()));
        if self.population < 2 || !self.population.is_multiple_of(2) {
            return bad("population must be even and >= 2");
        }
        if !(0.0..1.0).contains(&self.elitism) {
            return bad("elitism must lie in [0, 1)");
        }
        if self.generations == 0 {
            return bad("generations must be positive");
        }
        Ok(())
    }
}

/// Best feasible distinct points, in unit coordinates.
fn training_set(problem: &Problem<'_>, cap: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut records: Vec<_> = problem.trace().records.iter().filter(|r| r.feasible && r.value.is_finite()).collect();
    records.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut x: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for r in records {
        if x.len() == cap {
            break;
        }
        let u = problem.bounds().to_unit(&r.x);
        if !x.contains(&u) {
            x.push(u);
            y.push(r.value);
        }
    }
    (x, y)
}

/// Best `k` distinct probe points under the model, half drawn uniformly and
/// half around the incumbent.
fn surrogate_candidates(
    model: &KrigingModel,
    incumbent: &[f64],
    k: usize,
    probes: usize,
    sigma: f64,
    exclude: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let dim = incumbent.len();
    let mut pts: Vec<(Vec<f64>, f64)> = (0..probes)
        .map(|i| {
            let mut p: Vec<f64> = if i % 2 == 0 {
                (0..dim).map(|_| rng.random::<f64>()).collect()
            } else {
                incumbent
                    .iter()
                    .map(|c| {
                        let z: f64 = rng.sample(StandardNormal);
                        c + sigma * z
                    })
                    .collect()
            };
            clamp_unit(&mut p);
            let v = model.predict(&p);
            (p, if v.is_finite() { v } else { f64::INFINITY })
        })
        .collect();
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (p, _) in pts {
        if out.len() == k {
            break;
        }
        if !out.contains(&p) && !exclude.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Runs the pipeline. The problem's budget must equal
/// [`GsfConfig::total_evaluations`].
pub fn gsf_run(mut problem: Problem<'_>, cfg: &GsfConfig) -> Result<Outcome, OptimizeError> {
    cfg.validate()?;
    if problem.budget() == 0 {
        return Err(OptimizeError::ZeroBudget);
    }
    if problem.budget() != cfg.total_evaluations() {
        return Err(OptimizeError::InvalidOptions(format!(
            "budget {} differs from the configured total {}",
            problem.budget(),
            cfg.total_evaluations()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut population = random_population(cfg.population, problem.dim(), &mut rng);
    let k = cfg.surrogate_count();

    for generation in 0..cfg.generations {
        let values = problem.evaluate_batch_unit(&population);
        if generation + 1 == cfg.generations {
            break;
        }
        let mut offspring = ga_generation(&population, &values, &cfg.ga, &mut rng);
        if k > 0 {
            let (x, y) = training_set(&problem, cfg.max_training);
            // A failed fit leaves this generation as plain GA.
            if let Ok(model) = KrigingModel::fit(&x, &y) {
                let cands = surrogate_candidates(&model, &x[0], k, cfg.surrogate_probes, cfg.ga.mutation_sigma, &offspring, &mut rng);
                let predicted: Vec<f64> = offspring.iter().map(|o| model.predict(o)).collect();
                let mut order: Vec<usize> = (0..offspring.len()).collect();
                order.sort_by(|&a, &b| predicted[b].total_cmp(&predicted[a]));
                for (slot, cand) in order.into_iter().zip(cands) {
                    offspring[slot] = cand;
                }
            }
        }
        population = offspring;
    }

    if problem.exhausted() {
        return Ok(problem.finish(Termination::BudgetExhausted));
    }
    let start = problem
        .trace()
        .records
        .iter()
        .filter(|r| r.feasible)
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .or_else(|| problem.trace().best())
        .map(|r| problem.bounds().to_unit(&r.x))
        .expect("GA phase evaluated at least one design");
    let opts = NelderMeadOptions { restart_until_budget: true, ..Default::default() };
    nelder_mead::run(&mut problem, start, &opts);
    Ok(problem.finish(Termination::BudgetExhausted))
}
