//! Run configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hptowec_core::dynamics::{BodyHydro, SimConfig};
use hptowec_core::hpto::{EfficiencyModel, EfficiencyTable, HptoFixedParams};
use hptowec_core::simulation::PhysicalLimits;
use hptowec_core::wave::SpectrumSpec;
use hptowec_core::{DesignBounds, DesignVector, Execution, Scenario};

use crate::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    Sequential,
    #[default]
    Parallel,
}

impl From<ExecutionMode> for Execution {
    fn from(m: ExecutionMode) -> Self {
        match m {
            ExecutionMode::Sequential => Execution::Sequential,
            ExecutionMode::Parallel => Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub hs: f64,
    pub tp: f64,
    pub n_components: usize,
    /// Defaults to a quarter of the peak frequency.
    pub omega_min: Option<f64>,
    /// Defaults to four times the peak frequency.
    pub omega_max: Option<f64>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { hs: 4.06, tp: 13.65, n_components: 300, omega_min: None, omega_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EfficiencySection {
    Parametric { eta_max: f64 },
    /// Delimited `omega_rad_s,torque_Nm,efficiency` file.
    Table { path: PathBuf },
}

impl Default for EfficiencySection {
    fn default() -> Self {
        EfficiencySection::Parametric { eta_max: 0.85 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionSource {
    /// Run the calibration grid before optimizing.
    #[default]
    Calibrate,
    /// Load a region written by `calibrate`.
    File,
    /// Box bounds only.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionSection {
    pub source: RegionSource,
    pub path: Option<PathBuf>,
    pub n_piston_area: usize,
    pub n_hpa_volume: usize,
}

impl Default for RegionSection {
    fn default() -> Self {
        Self { source: RegionSource::Calibrate, path: None, n_piston_area: 14, n_hpa_volume: 19 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub algorithm: String,
    /// Evaluation budget; presets fix their own.
    pub budget: Option<usize>,
    /// Start for simplex and gradient search; the box center when absent.
    pub x0: Option<DesignVector>,
    pub population: usize,
    pub elitism: f64,
    pub generations: usize,
    pub polish_evaluations: usize,
    pub n_universes: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub mutation_sigma: f64,
    /// Row spacing of the convergence file.
    pub convergence_step: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            algorithm: "gsf2".into(),
            budget: None,
            x0: None,
            population: 40,
            elitism: 0.1,
            generations: 50,
            polish_evaluations: 100,
            n_universes: 10,
            crossover_prob: 0.9,
            mutation_prob: 0.1,
            mutation_sigma: 0.05,
            convergence_step: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub grid: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { grid: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Excluded from the canonical form so the output location does not
    /// change the configuration hash.
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    pub execution: ExecutionMode,
    pub spectrum: SpectrumSection,
    pub float: BodyHydro,
    pub spar: BodyHydro,
    pub sim: SimConfig,
    pub hpto: HptoFixedParams,
    pub efficiency: EfficiencySection,
    pub limits: PhysicalLimits,
    pub bounds: DesignBounds,
    /// Design simulated by `simulate` and held fixed by `sweep` and `calibrate`.
    pub design: DesignVector,
    pub region: RegionSection,
    pub optimizer: OptimizerSection,
    pub sweep: SweepSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: PathBuf::from("out"),
            execution: ExecutionMode::Parallel,
            spectrum: SpectrumSection::default(),
            float: BodyHydro::rm3_float(),
            spar: BodyHydro::rm3_spar(),
            sim: SimConfig::default(),
            hpto: HptoFixedParams::default(),
            efficiency: EfficiencySection::default(),
            limits: PhysicalLimits::default(),
            bounds: DesignBounds::default(),
            design: DesignVector::REFERENCE,
            region: RegionSection::default(),
            optimizer: OptimizerSection::default(),
            sweep: SweepSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    /// Parses configuration text. `origin` labels diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let table: toml::Table =
            toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        if !table.contains_key("seed") {
            return Err(CliError::Config(format!("{origin}: missing required key `seed`")));
        }
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text, &path.display().to_string())?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !self.bounds.is_valid() {
            return bad(format!("invalid [bounds]: {:?}", self.bounds));
        }
        if self.sweep.grid < 2 {
            return bad("[sweep] grid must be at least 2".into());
        }
        if self.region.n_piston_area < 1 || self.region.n_hpa_volume < 2 {
            return bad("[region] grid needs at least 1 piston area and 2 HPA volumes".into());
        }
        if self.region.source == RegionSource::File && self.region.path.is_none() {
            return bad("[region] source = \"file\" requires `path`".into());
        }
        if self.optimizer.convergence_step == 0 {
            return bad("[optimizer] convergence_step must be positive".into());
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn execution(&self) -> Execution {
        self.execution.into()
    }

    pub fn spectrum_spec(&self) -> SpectrumSpec {
        let s = &self.spectrum;
        let mut spec = SpectrumSpec::with_default_band(s.hs, s.tp, self.seed);
        spec.n_components = s.n_components;
        if let Some(w) = s.omega_min {
            spec.omega_min = w;
        }
        if let Some(w) = s.omega_max {
            spec.omega_max = w;
        }
        spec
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let efficiency = match &self.efficiency {
            EfficiencySection::Parametric { eta_max } => EfficiencyModel::Parametric { eta_max: *eta_max },
            EfficiencySection::Table { path } => {
                let table = EfficiencyTable::load(&self.resolve(path)).map_err(|e| CliError::Config(e.to_string()))?;
                EfficiencyModel::Table(table)
            }
        };
        Ok(Scenario {
            spectrum: self.spectrum_spec(),
            float: self.float.clone(),
            spar: self.spar.clone(),
            sim: self.sim.clone(),
            hpto: self.hpto.clone(),
            efficiency,
            limits: self.limits.clone(),
        })
    }

    /// Canonical text of the resolved configuration (used for hashing).
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::parse("seed = 7\n", "test").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.design, DesignVector::REFERENCE);
        assert_eq!(c.sim.dt, 0.01);
        assert_eq!(c.spectrum_spec().seed, 7);
    }

    #[test]
    fn missing_seed_is_rejected() {
        let e = RunConfig::parse("[sim]\ndt = 0.05\n", "cfg.toml").unwrap_err();
        assert!(e.to_string().contains("seed"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = RunConfig::parse("seed = 1\n\n[sim]\ndt = \"fast\"\n", "cfg.toml").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("cfg.toml") && msg.contains("line 4"), "{msg}");
        let e = RunConfig::parse("seed = 1\n[sim]\nstep = 0.1\n", "cfg.toml").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn partial_sections_fill_from_defaults() {
        let c = RunConfig::parse("seed = 1\n[sim]\nduration = 200.0\ndt = 0.05\n", "t").unwrap();
        assert_eq!(c.sim.ramp_time, 100.0);
        assert_eq!(c.sim.duration, 200.0);
    }

    #[test]
    fn canonical_form_round_trips() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&c.canonical()).unwrap();
        assert_eq!(back.canonical(), c.canonical());
    }
}
