//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hptowec_core::feasibility::{calibrate_region, linspace, Calibration, CalibrationGrid, FeasibleRegion};
use hptowec_core::optimizers::{
    genetic_algorithm, gsf_run, local_gradient_search, mvo, nelder_mead, Bounds, GaOptions, GaParams, GsfConfig,
    LocalOptions, MvoOptions, NelderMeadOptions, OptimizeError, Outcome, Problem,
};
use hptowec_core::{Assessment, DesignVector, Pipeline, Simulator, Variable, WecObjective};

use crate::config::{RegionSource, RunConfig};
use crate::output::{self, write_file, BestDesignFile};
use crate::CliError;

pub fn simulator(cfg: &RunConfig) -> Result<Simulator, CliError> {
    Simulator::new(cfg.scenario()?).map_err(|e| CliError::Config(e.to_string()))
}

fn design_string(d: &DesignVector) -> String {
    format!("{},{},{},{}", d.piston_area, d.hpa_volume, d.lpa_volume, d.lpa_precharge)
}

pub fn simulate(cfg: &RunConfig, design: Option<&str>, allow_outside_box: bool) -> Result<(), CliError> {
    let design = match design {
        Some(s) => s.parse::<DesignVector>().map_err(|e| CliError::Config(format!("--design: {e}")))?,
        None => cfg.design,
    };
    if !cfg.bounds.contains(&design) && !allow_outside_box {
        return Err(CliError::Config(format!(
            "design {} lies outside the search box; pass --allow-outside-box to simulate it anyway",
            design_string(&design)
        )));
    }
    let sim = simulator(cfg)?;
    let result = sim.simulate(&design).map_err(|e| CliError::Config(e.to_string()))?;
    let assessment = sim.metrics(&result);
    let dir = &cfg.out_dir;
    write_file(dir, "series.csv", &result.to_csv())?;
    write_file(dir, "metrics.toml", &output::metrics_toml(&design, &assessment))?;
    write_file(dir, "meta.toml", &output::meta_toml(cfg, "simulate", &[("design", design_string(&design))]))?;
    match (&assessment.non_physical, &assessment.metrics) {
        (Some(reason), _) => Err(CliError::NonPhysical(reason.to_string())),
        (None, Some(m)) => {
            eprintln!("mean electrical power {:.1} W, R_PF {:.3}", m.mean_elec, m.rpf);
            Ok(())
        }
        (None, None) => Err(CliError::NonPhysical("no metrics".into())),
    }
}

fn parse_pair(s: &str) -> Result<(Variable, Variable), CliError> {
    let names: Vec<&str> = s.split(',').map(str::trim).collect();
    if names.len() != 2 {
        return Err(CliError::Config(format!("--pair expects two variable names, got `{s}`")));
    }
    let parse = |n: &str| n.parse::<Variable>().map_err(|e| CliError::Config(e.to_string()));
    let (a, b) = (parse(names[0])?, parse(names[1])?);
    if a == b {
        return Err(CliError::Config(format!("--pair needs two different variables, got `{s}`")));
    }
    Ok((a, b))
}

/// All six unordered pairs in variable order.
pub fn all_pairs() -> Vec<(Variable, Variable)> {
    let v = Variable::ALL;
    (0..4).flat_map(|i| (i + 1..4).map(move |j| (v[i], v[j]))).collect()
}

pub fn sweep(cfg: &RunConfig, pair: Option<&str>, grid: Option<usize>, all: bool) -> Result<(), CliError> {
    let pairs = match (pair, all) {
        (_, true) => all_pairs(),
        (Some(p), false) => vec![parse_pair(p)?],
        (None, false) => return Err(CliError::Config("sweep needs --pair VAR1,VAR2 or --all-pairs".into())),
    };
    let n = grid.unwrap_or(cfg.sweep.grid);
    if n < 2 {
        return Err(CliError::Config("--grid must be at least 2".into()));
    }
    let sim = simulator(cfg)?;
    let start = Instant::now();
    for (a, b) in &pairs {
        let xs = linspace(cfg.bounds.range(*a)[0], cfg.bounds.range(*a)[1], n);
        let ys = linspace(cfg.bounds.range(*b)[0], cfg.bounds.range(*b)[1], n);
        let designs: Vec<DesignVector> =
            xs.iter().flat_map(|&x| ys.iter().map(move |&y| cfg.design.with(*a, x).with(*b, y))).collect();
        let results: Vec<Assessment> = cfg.execution().map(&designs, |d| sim.assess(d));
        let header = format!("{a},{b},value,feasible\n");
        let (mut power, mut rpf) = (header.clone(), header);
        for (d, r) in designs.iter().zip(&results) {
            let (p, f) = r.metrics.map_or((f64::NAN, f64::NAN), |m| (m.mean_elec, m.rpf));
            let ok = r.is_physical();
            let _ = writeln!(power, "{},{},{p},{ok}", d.get(*a), d.get(*b));
            let _ = writeln!(rpf, "{},{},{f},{ok}", d.get(*a), d.get(*b));
        }
        write_file(&cfg.out_dir, &format!("sweep_{a}_{b}_power.csv"), &power)?;
        write_file(&cfg.out_dir, &format!("sweep_{a}_{b}_rpf.csv"), &rpf)?;
    }
    let names: Vec<String> = pairs.iter().map(|(a, b)| format!("{a},{b}")).collect();
    write_file(
        &cfg.out_dir,
        "meta.toml",
        &output::meta_toml(cfg, "sweep", &[("pairs", names.join(";")), ("grid", n.to_string())]),
    )?;
    eprintln!("{} sweep(s), {} simulations in {:.1} s", pairs.len(), pairs.len() * n * n, start.elapsed().as_secs_f64());
    Ok(())
}

fn run_calibration(cfg: &RunConfig, sim: &Simulator) -> Result<Calibration, CliError> {
    let grid = CalibrationGrid::spanning(&cfg.bounds, cfg.region.n_piston_area, cfg.region.n_hpa_volume, cfg.design);
    let cal = calibrate_region(&grid, &cfg.bounds, sim, cfg.execution())
        .map_err(|e| CliError::Calibration(e.to_string()))?;
    let mut table = String::from("ap,vh0,physical,reason\n");
    for (d, a) in cal.designs.iter().zip(&cal.assessments) {
        let reason = a.non_physical.as_ref().map(|r| r.to_string().replace(',', ";")).unwrap_or_default();
        let _ = writeln!(table, "{},{},{},{reason}", d.piston_area, d.hpa_volume, a.is_physical());
    }
    let text = cal.region.to_toml().map_err(|e| CliError::Calibration(e.to_string()))?;
    write_file(&cfg.out_dir, "region.toml", &text)?;
    write_file(&cfg.out_dir, "calibration.csv", &table)?;
    eprintln!("calibration: flagged {} of {} runs as non-physical", cal.flagged_runs(), cal.total_runs());
    Ok(cal)
}

pub fn calibrate(cfg: &RunConfig) -> Result<Calibration, CliError> {
    let sim = simulator(cfg)?;
    let cal = run_calibration(cfg, &sim)?;
    write_file(
        &cfg.out_dir,
        "meta.toml",
        &output::meta_toml(
            cfg,
            "calibrate",
            &[
                ("grid", format!("{}x{}", cfg.region.n_piston_area, cfg.region.n_hpa_volume)),
                ("flagged_runs", cal.flagged_runs().to_string()),
                ("total_runs", cal.total_runs().to_string()),
            ],
        ),
    )?;
    Ok(cal)
}

fn region(cfg: &RunConfig, sim: &Simulator) -> Result<FeasibleRegion, CliError> {
    match cfg.region.source {
        RegionSource::Calibrate => Ok(run_calibration(cfg, sim)?.region),
        RegionSource::None => Ok(FeasibleRegion::unconstrained(cfg.bounds)),
        RegionSource::File => {
            let path = cfg.resolve(cfg.region.path.as_deref().expect("validated"));
            let region = FeasibleRegion::load(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if region.bounds != cfg.bounds {
                return Err(CliError::Config(format!("{}: region bounds differ from [bounds]", path.display())));
            }
            Ok(region)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    NelderMead,
    Local,
    Mvo,
    Ga,
    /// GSF with the hyperparameters from the configuration.
    Gsf,
    /// GSF preset 1..=6.
    GsfPreset(usize),
}

impl Algorithm {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        let lower = name.to_ascii_lowercase();
        Ok(match lower.as_str() {
            "nelder-mead" | "nm" | "simplex" => Algorithm::NelderMead,
            "local" | "sqp" | "quasi-newton" => Algorithm::Local,
            "mvo" => Algorithm::Mvo,
            "ga" => Algorithm::Ga,
            "gsf" => Algorithm::Gsf,
            _ => match lower.strip_prefix("gsf").and_then(|k| k.parse::<usize>().ok()) {
                Some(k) if (1..=6).contains(&k) => Algorithm::GsfPreset(k),
                _ => {
                    return Err(CliError::Config(format!(
                        "unknown algorithm `{name}` (expected nelder-mead, local, mvo, ga, gsf or gsf1..gsf6)"
                    )))
                }
            },
        })
    }

    pub fn name(&self) -> String {
        match self {
            Algorithm::NelderMead => "nelder-mead".into(),
            Algorithm::Local => "local".into(),
            Algorithm::Mvo => "mvo".into(),
            Algorithm::Ga => "ga".into(),
            Algorithm::Gsf => "gsf".into(),
            Algorithm::GsfPreset(k) => format!("gsf{k}"),
        }
    }
}

fn gsf_config(cfg: &RunConfig, algorithm: Algorithm) -> GsfConfig {
    let o = &cfg.optimizer;
    let ga = GaParams { crossover_prob: o.crossover_prob, mutation_prob: o.mutation_prob, mutation_sigma: o.mutation_sigma };
    match algorithm {
        Algorithm::GsfPreset(k) => GsfConfig { ga, ..GsfConfig::preset(k, cfg.seed).expect("preset index checked") },
        _ => GsfConfig {
            population: o.population,
            elitism: o.elitism,
            generations: o.generations,
            polish_evaluations: o.polish_evaluations,
            seed: cfg.seed,
            ga,
            ..GsfConfig::preset(1, cfg.seed).expect("preset 1 exists")
        },
    }
}

/// Evaluation budget for `algorithm`: GSF totals are fixed by their
/// configuration, the others default to 500 (local methods) or 2100.
fn resolve_budget(cfg: &RunConfig, algorithm: Algorithm, requested: Option<usize>) -> Result<usize, CliError> {
    let requested = requested.or(cfg.optimizer.budget);
    if requested == Some(0) {
        return Err(CliError::Config("budget must be positive".into()));
    }
    match algorithm {
        Algorithm::Gsf | Algorithm::GsfPreset(_) => {
            let total = gsf_config(cfg, algorithm).total_evaluations();
            match requested {
                Some(b) if b != total => Err(CliError::Config(format!(
                    "{} always uses {total} evaluations; got budget {b}",
                    algorithm.name()
                ))),
                _ => Ok(total),
            }
        }
        Algorithm::NelderMead | Algorithm::Local => Ok(requested.unwrap_or(500)),
        Algorithm::Ga => Ok(requested.unwrap_or(2100)),
        Algorithm::Mvo => {
            let b = requested.unwrap_or(2100);
            let n = cfg.optimizer.n_universes;
            if n < 2 || b < n {
                return Err(CliError::Config(format!("mvo needs a budget of at least n_universes = {n}")));
            }
            Ok(b / n * n)
        }
    }
}

fn abort_or_config(e: OptimizeError) -> CliError {
    match e {
        OptimizeError::InfeasibleStart(_) => CliError::Aborted(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

/// What `optimize` produced.
#[derive(Debug)]
pub struct OptimizeReport {
    pub algorithm: String,
    pub outcome: Outcome,
    pub best: Option<(DesignVector, f64, Assessment)>,
    pub trace_path: PathBuf,
}

pub fn optimize(cfg: &RunConfig, algorithm: Option<&str>, budget: Option<usize>) -> Result<OptimizeReport, CliError> {
    let algorithm = Algorithm::parse(algorithm.unwrap_or(&cfg.optimizer.algorithm))?;
    let budget = resolve_budget(cfg, algorithm, budget)?;
    let name = algorithm.name();
    let sim = simulator(cfg)?;
    let region = region(cfg, &sim)?;
    let objective = WecObjective::new(&region, &sim);
    let bounds = Bounds::new(cfg.bounds.lower(), cfg.bounds.upper()).map_err(|e| CliError::Config(e.to_string()))?;
    let problem = Problem::new(&objective, bounds, budget).with_execution(cfg.execution());
    let x0 = cfg.optimizer.x0.unwrap_or_else(|| cfg.bounds.center()).to_array();
    let o = &cfg.optimizer;
    let ga = GaParams { crossover_prob: o.crossover_prob, mutation_prob: o.mutation_prob, mutation_sigma: o.mutation_sigma };

    let start = Instant::now();
    let outcome = match algorithm {
        Algorithm::NelderMead => nelder_mead(problem, &x0, &NelderMeadOptions::default()),
        Algorithm::Local => local_gradient_search(problem, &x0, &LocalOptions::default()),
        Algorithm::Mvo => {
            let opts = MvoOptions {
                n_universes: o.n_universes,
                n_iter: budget / o.n_universes - 1,
                seed: cfg.seed,
                ..MvoOptions::default()
            };
            mvo(problem, &opts)
        }
        Algorithm::Ga => {
            let opts = GaOptions { population: o.population, generations: None, seed: cfg.seed, params: ga };
            genetic_algorithm(problem, &opts)
        }
        Algorithm::Gsf | Algorithm::GsfPreset(_) => gsf_run(problem, &gsf_config(cfg, algorithm)),
    }
    .map_err(abort_or_config)?;
    eprintln!("{name}: {} evaluations in {:.1} s", outcome.trace.len(), start.elapsed().as_secs_f64());

    let dir = &cfg.out_dir;
    let trace_path = write_file(dir, &format!("trace_{name}.csv"), &outcome.trace.to_csv())?;
    write_file(dir, &format!("convergence_{name}.csv"), &output::convergence_csv(&outcome.trace, o.convergence_step))?;
    write_file(
        dir,
        "meta.toml",
        &output::meta_toml(cfg, "optimize", &[("algorithm", name.clone()), ("budget", budget.to_string())]),
    )?;

    let best = outcome
        .trace
        .records
        .iter()
        .filter(|r| r.feasible)
        .min_by(|a, b| a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)));
    let Some(best) = best else {
        return Err(CliError::Aborted(format!("{name} found no feasible design in {budget} evaluations")));
    };
    let design = DesignVector::from_slice(&best.x).expect("trace designs have four components");
    let assessment = sim.assess(&design);
    let Some(metrics) = assessment.metrics.filter(|_| assessment.is_physical()) else {
        return Err(CliError::Aborted(format!("best design {} is not reproducible", design_string(&design))));
    };
    let mut summary = format!("{}\n", output::SUMMARY_HEADER);
    summary.push_str(&output::summary_row(&name, outcome.trace.len(), outcome.trace.infeasible_count(), &design, &metrics));
    summary.push('\n');
    write_file(dir, "summary.csv", &summary)?;
    let best_file = BestDesignFile { algorithm: name.clone(), eval_index: best.index, objective: best.value, design, metrics };
    write_file(dir, "best_design.toml", &toml::to_string(&best_file).expect("serializable"))?;
    eprintln!("{name}: best mean electrical power {:.1} W at {}", metrics.mean_elec, design_string(&design));

    let best = Some((design, best.value, assessment));
    Ok(OptimizeReport { algorithm: name, outcome, best, trace_path })
}

fn trace_name(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "trace".into());
    stem.strip_prefix("trace_").map(str::to_owned).unwrap_or(stem)
}

pub fn compare(cfg: &RunConfig, paths: &[PathBuf], horizon: Option<usize>) -> Result<(), CliError> {
    if paths.len() < 2 {
        return Err(CliError::Config("compare needs at least two trace files".into()));
    }
    if horizon == Some(0) {
        return Err(CliError::Config("--horizon must be positive".into()));
    }
    let mut traces = Vec::new();
    for path in paths {
        match output::parse_trace(path) {
            Ok(t) => traces.push((trace_name(path), t)),
            Err(e) => eprintln!("skipping {}: {e}", path.display()),
        }
    }
    if traces.is_empty() {
        return Err(CliError::Config("no readable trace files".into()));
    }
    let sim = simulator(cfg)?;
    let mut rows = Vec::new();
    for (name, trace) in &traces {
        let best = trace.records.iter().filter(|r| r.feasible).min_by(|a, b| a.value.total_cmp(&b.value));
        let Some(best) = best else {
            eprintln!("{name}: no feasible evaluation, left out of the table");
            continue;
        };
        let design = DesignVector::from_slice(&best.x).expect("four columns parsed");
        let a = sim.assess(&design);
        match a.metrics.filter(|_| a.is_physical()) {
            Some(m) => rows.push((m.mean_elec, output::summary_row(name, trace.len(), trace.infeasible_count(), &design, &m))),
            None => eprintln!("{name}: best design is non-physical under this configuration, left out of the table"),
        }
    }
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut table = format!("{}\n", output::SUMMARY_HEADER);
    for (_, row) in rows {
        table.push_str(&row);
        table.push('\n');
    }
    let horizon = horizon.unwrap_or_else(|| traces.iter().map(|(_, t)| t.len()).max().unwrap_or(1));
    write_file(&cfg.out_dir, "comparison.csv", &table)?;
    write_file(&cfg.out_dir, "convergence.csv", &output::aligned_matrix(&traces, horizon))?;
    let names: Vec<&str> = traces.iter().map(|(n, _)| n.as_str()).collect();
    write_file(
        &cfg.out_dir,
        "meta.toml",
        &output::meta_toml(cfg, "compare", &[("traces", names.join(";")), ("horizon", horizon.to_string())]),
    )?;
    Ok(())
}
