//! Coupled wave / two-body / hydraulic PTO time-domain simulation.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::DesignVector;
use crate::dynamics::{relative_velocity, BodyHydro, BodyState, DynamicsError, SimConfig, TwoBodySystem, FLOAT, SPAR};
use crate::hpto::{hpto_step, EfficiencyModel, HptoError, HptoFixedParams, HptoState};
use crate::metrics::Metrics;
use crate::wave::{realize, SampledElevation, SpectrumSpec, WaveError, WaveRealization};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Hpto(#[from] HptoError),
    #[error("invalid physical limits: {0}")]
    InvalidLimits(String),
    #[error("design {0:?} has non-positive or non-finite components")]
    InvalidDesign(DesignVector),
}

/// Thresholds beyond which a run is treated as non-physical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalLimits {
    /// Pa
    pub max_piston_pressure: f64,
    /// Pa; chamber pressures at or below this are rejected.
    pub min_piston_pressure: f64,
    /// m
    pub max_displacement: f64,
}

impl Default for PhysicalLimits {
    fn default() -> Self {
        Self { max_piston_pressure: 250.0e6, min_piston_pressure: 0.0, max_displacement: 10.0 }
    }
}

/// Why a run was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum NonPhysical {
    Diverged { t: f64 },
    AccumulatorFull { t: f64, detail: String },
    PressureTooHigh { max: f64 },
    PressureTooLow { min: f64 },
    DisplacementTooLarge { max: f64 },
    NoMetrics(String),
}

impl fmt::Display for NonPhysical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonPhysical::Diverged { t } => write!(f, "state diverged at t = {t} s"),
            NonPhysical::AccumulatorFull { t, detail } => write!(f, "at t = {t} s: {detail}"),
            NonPhysical::PressureTooHigh { max } => write!(f, "max piston pressure {max} Pa above limit"),
            NonPhysical::PressureTooLow { min } => write!(f, "min piston pressure {min} Pa at or below limit"),
            NonPhysical::DisplacementTooLarge { max } => write!(f, "heave displacement {max} m above limit"),
            NonPhysical::NoMetrics(msg) => write!(f, "metrics unavailable: {msg}"),
        }
    }
}

/// Full time series of one design evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulationResult {
    pub time: Vec<f64>,
    pub float_position: Vec<f64>,
    pub spar_position: Vec<f64>,
    pub float_velocity: Vec<f64>,
    pub spar_velocity: Vec<f64>,
    pub f_pto: Vec<f64>,
    pub p_top_chamber: Vec<f64>,
    pub p_bottom_chamber: Vec<f64>,
    pub p_hpa: Vec<f64>,
    pub p_lpa: Vec<f64>,
    pub omega_m: Vec<f64>,
    pub alpha_d: Vec<f64>,
    pub c_gen: Vec<f64>,
    pub p_abs: Vec<f64>,
    pub p_mech: Vec<f64>,
    pub p_elec: Vec<f64>,
    /// Set when the run stopped early or broke a physical limit.
    pub non_physical: Option<NonPhysical>,
}

pub const SERIES_HEADER: &str = "t,x_float,x_spar,v_float,v_spar,f_pto,p_top,p_bottom,p_hpa,p_lpa,omega_m,alpha_d,c_gen,p_abs,p_mech,p_elec";

impl SimulationResult {
    fn with_capacity(n: usize) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            time: v(),
            float_position: v(),
            spar_position: v(),
            float_velocity: v(),
            spar_velocity: v(),
            f_pto: v(),
            p_top_chamber: v(),
            p_bottom_chamber: v(),
            p_hpa: v(),
            p_lpa: v(),
            omega_m: v(),
            alpha_d: v(),
            c_gen: v(),
            p_abs: v(),
            p_mech: v(),
            p_elec: v(),
            non_physical: None,
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn is_physical(&self) -> bool {
        self.non_physical.is_none()
    }

    fn columns(&self) -> [&Vec<f64>; 16] {
        [
            &self.time,
            &self.float_position,
            &self.spar_position,
            &self.float_velocity,
            &self.spar_velocity,
            &self.f_pto,
            &self.p_top_chamber,
            &self.p_bottom_chamber,
            &self.p_hpa,
            &self.p_lpa,
            &self.omega_m,
            &self.alpha_d,
            &self.c_gen,
            &self.p_abs,
            &self.p_mech,
            &self.p_elec,
        ]
    }

    /// Delimited text with [`SERIES_HEADER`] and one row per sample.
    pub fn to_csv(&self) -> String {
        let cols = self.columns();
        let mut out = String::with_capacity(self.len() * 200);
        out.push_str(SERIES_HEADER);
        out.push('\n');
        for k in 0..self.len() {
            for (i, c) in cols.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", c[k]);
            }
            out.push('\n');
        }
        out
    }

    /// Every series set to `values` on grid `time`.
    #[cfg(test)]
    pub(crate) fn from_series_for_test(time: &[f64], values: &[f64]) -> Self {
        let v = values.to_vec();
        Self {
            time: time.to_vec(),
            float_position: v.clone(),
            spar_position: v.clone(),
            float_velocity: v.clone(),
            spar_velocity: v.clone(),
            f_pto: v.clone(),
            p_top_chamber: v.clone(),
            p_bottom_chamber: v.clone(),
            p_hpa: v.clone(),
            p_lpa: v.clone(),
            omega_m: v.clone(),
            alpha_d: v.clone(),
            c_gen: v.clone(),
            p_abs: v.clone(),
            p_mech: v.clone(),
            p_elec: v,
            non_physical: None,
        }
    }
}

/// Everything needed to simulate a design, except the design itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spectrum: SpectrumSpec,
    pub float: BodyHydro,
    pub spar: BodyHydro,
    pub sim: SimConfig,
    pub hpto: HptoFixedParams,
    pub efficiency: EfficiencyModel,
    pub limits: PhysicalLimits,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            spectrum: SpectrumSpec::with_default_band(4.06, 13.65, 1),
            float: BodyHydro::rm3_float(),
            spar: BodyHydro::rm3_spar(),
            sim: SimConfig::default(),
            hpto: HptoFixedParams::default(),
            efficiency: EfficiencyModel::default(),
            limits: PhysicalLimits::default(),
        }
    }
}

/// Outcome of evaluating one design: metrics when available, and the reason
/// when the run is non-physical.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub metrics: Option<Metrics>,
    pub non_physical: Option<NonPhysical>,
}

impl Assessment {
    pub fn is_physical(&self) -> bool {
        self.non_physical.is_none() && self.metrics.is_some()
    }
}

/// Anything that maps a design to an [`Assessment`]; the simulator in
/// production, stubs in tests.
pub trait Pipeline: Sync {
    fn assess(&self, design: &DesignVector) -> Assessment;
}

/// A validated scenario with its sea state realized and pre-sampled.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: Scenario,
    system: TwoBodySystem,
    realization: WaveRealization,
    sampled: SampledElevation,
}

impl Simulator {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        scenario.sim.validate()?;
        scenario.float.validate()?;
        scenario.spar.validate()?;
        scenario.hpto.validate()?;
        if let EfficiencyModel::Parametric { eta_max } = scenario.efficiency {
            if !(eta_max > 0.0 && eta_max <= 1.0) {
                return Err(HptoError::InvalidParams(format!("eta_max = {eta_max} outside (0, 1]")).into());
            }
        }
        let l = &scenario.limits;
        if !(l.max_piston_pressure > l.min_piston_pressure && l.max_displacement > 0.0) {
            return Err(SimError::InvalidLimits(format!("{l:?}")));
        }
        let realization = realize(&scenario.spectrum)?;
        // rk4 samples the sea at half steps
        let sampled = SampledElevation::new(&realization, 0.5 * scenario.sim.dt, scenario.sim.duration + scenario.sim.dt);
        let system = TwoBodySystem::new(
            scenario.float.clone(),
            scenario.spar.clone(),
            scenario.sim.ramp_time,
            scenario.sim.integrator,
        );
        Ok(Self { scenario, system, realization, sampled })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn realization(&self) -> &WaveRealization {
        &self.realization
    }

    /// Runs the full time series. Integration stops at the first divergence
    /// or accumulator overfill; the result is then flagged and truncated.
    pub fn simulate(&self, design: &DesignVector) -> Result<SimulationResult, SimError> {
        if !design.is_physical() {
            return Err(SimError::InvalidDesign(*design));
        }
        let sc = &self.scenario;
        let dt = sc.sim.dt;
        let n = sc.sim.n_steps();
        let mut out = SimulationResult::with_capacity(n);
        let mut bodies = [BodyState::default(); 2];
        let mut hyd = HptoState::initial(design, &sc.hpto);

        for k in 0..n {
            let t = k as f64 * dt;
            let v_rel = relative_velocity(&bodies);
            let (next_hyd, s) = match hpto_step(&hyd, v_rel, design, &sc.hpto, &sc.efficiency, dt) {
                Ok(v) => v,
                Err(HptoError::NonFinite(_)) => {
                    out.non_physical = Some(NonPhysical::Diverged { t });
                    break;
                }
                Err(e) => {
                    out.non_physical = Some(NonPhysical::AccumulatorFull { t, detail: e.to_string() });
                    break;
                }
            };
            let (top, bottom) = if v_rel >= 0.0 { (hyd.p_high, hyd.p_low) } else { (hyd.p_low, hyd.p_high) };
            out.time.push(t);
            out.float_position.push(bodies[FLOAT].position);
            out.spar_position.push(bodies[SPAR].position);
            out.float_velocity.push(bodies[FLOAT].velocity);
            out.spar_velocity.push(bodies[SPAR].velocity);
            out.f_pto.push(s.f_pto);
            out.p_top_chamber.push(top);
            out.p_bottom_chamber.push(bottom);
            out.p_hpa.push(hyd.p_high);
            out.p_lpa.push(hyd.p_low);
            out.omega_m.push(hyd.omega_m);
            out.alpha_d.push(s.alpha_d);
            out.c_gen.push(s.c_gen);
            out.p_abs.push(s.p_abs);
            out.p_mech.push(s.p_mech);
            out.p_elec.push(s.p_elec);

            bodies = match self.system.step(bodies, &self.sampled, s.f_pto, t, dt) {
                Ok(b) => b,
                Err(_) => {
                    out.non_physical = Some(NonPhysical::Diverged { t: t + dt });
                    break;
                }
            };
            hyd = next_hyd;
        }
        Ok(out)
    }

    /// Post-ramp metrics with the physical-limit checks applied.
    pub fn metrics(&self, result: &SimulationResult) -> Assessment {
        if let Some(reason) = &result.non_physical {
            return Assessment { metrics: None, non_physical: Some(reason.clone()) };
        }
        match Metrics::from_result(result, self.scenario.sim.ramp_time) {
            Ok(m) => Assessment { non_physical: self.check_limits(&m), metrics: Some(m) },
            Err(e) => Assessment { metrics: None, non_physical: Some(NonPhysical::NoMetrics(e.to_string())) },
        }
    }

    fn check_limits(&self, m: &Metrics) -> Option<NonPhysical> {
        let l = &self.scenario.limits;
        if !(m.max_piston_pressure <= l.max_piston_pressure) {
            Some(NonPhysical::PressureTooHigh { max: m.max_piston_pressure })
        } else if !(m.min_piston_pressure > l.min_piston_pressure) {
            Some(NonPhysical::PressureTooLow { min: m.min_piston_pressure })
        } else {
            let max_disp = m.max_float_disp.max(m.max_spar_disp);
            (!(max_disp <= l.max_displacement)).then_some(NonPhysical::DisplacementTooLarge { max: max_disp })
        }
    }
}

impl Pipeline for Simulator {
    fn assess(&self, design: &DesignVector) -> Assessment {
        match self.simulate(design) {
            Ok(result) => self.metrics(&result),
            Err(e) => Assessment { metrics: None, non_physical: Some(NonPhysical::NoMetrics(e.to_string())) },
        }
    }
}
