//! Feasible design region and the penalized objective shared by all optimizers.
//!
//! The region is the design box minus a low-HPA-volume zone whose edge is a
//! piecewise-linear function of piston area, calibrated from a grid of
//! simulations.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{DesignBounds, DesignVector, Variable};
use crate::exec::Execution;
use crate::optimizers::{Evaluation, Objective};
use crate::simulation::{Assessment, Pipeline};

/// Base penalty for any infeasible or non-physical evaluation. Larger than
/// any attainable mean power in watts.
pub const PENALTY: f64 = 1e9;

#[derive(Debug, Error)]
pub enum FeasibilityError {
    #[error("knots must be strictly increasing in piston area")]
    UnsortedKnots,
    #[error("knot minimum HPA volume {0} lies outside the HPA bounds")]
    KnotOutOfRange(f64),
    #[error("invalid design bounds")]
    InvalidBounds,
    #[error("calibration grid: {0}")]
    InvalidGrid(String),
    #[error("no HPA volume gives physical runs all the way to the top of the grid at piston area {piston_area}")]
    InfeasibleColumn { piston_area: f64 },
    #[error("region file: {0}")]
    Io(#[from] std::io::Error),
    #[error("region file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("region file: {0}")]
    Serialize(#[from] toml::ser::Error),
}

/// Lowest feasible HPA volume at one piston area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub piston_area: f64,
    pub hpa_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleRegion {
    pub bounds: DesignBounds,
    #[serde(default)]
    pub knots: Vec<Knot>,
}

impl FeasibleRegion {
    pub fn new(bounds: DesignBounds, knots: Vec<Knot>) -> Result<Self, FeasibilityError> {
        let region = Self { bounds, knots };
        region.validate()?;
        Ok(region)
    }

    /// The whole box.
    pub fn unconstrained(bounds: DesignBounds) -> Self {
        Self { bounds, knots: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), FeasibilityError> {
        if !self.bounds.is_valid() {
            return Err(FeasibilityError::InvalidBounds);
        }
        if self.knots.windows(2).any(|w| !(w[0].piston_area < w[1].piston_area)) {
            return Err(FeasibilityError::UnsortedKnots);
        }
        let [lo, hi] = self.bounds.hpa_volume;
        if let Some(k) = self.knots.iter().find(|k| !(k.hpa_min >= lo && k.hpa_min <= hi)) {
            return Err(FeasibilityError::KnotOutOfRange(k.hpa_min));
        }
        Ok(())
    }

    /// Minimum feasible HPA volume at `piston_area`: linear between knots,
    /// constant beyond the end knots, the box minimum without knots.
    pub fn threshold(&self, piston_area: f64) -> f64 {
        let k = &self.knots;
        match k.len() {
            0 => self.bounds.hpa_volume[0],
            _ if piston_area <= k[0].piston_area => k[0].hpa_min,
            n if piston_area >= k[n - 1].piston_area => k[n - 1].hpa_min,
            _ => {
                let i = k.partition_point(|kn| kn.piston_area <= piston_area);
                let (a, b) = (k[i - 1], k[i]);
                let frac = (piston_area - a.piston_area) / (b.piston_area - a.piston_area);
                a.hpa_min + frac * (b.hpa_min - a.hpa_min)
            }
        }
    }

    /// Inside the box and on or above the threshold.
    pub fn is_feasible(&self, x: &DesignVector) -> bool {
        self.bounds.contains(x) && x.hpa_volume >= self.threshold(x.piston_area)
    }

    /// Unit-box-normalized distance to the feasible set: box violations plus
    /// the HPA shortfall below the threshold. Zero for feasible designs.
    pub fn violation(&self, x: &DesignVector) -> f64 {
        let mut d = 0.0;
        for var in Variable::ALL {
            let [lo, hi] = self.bounds.range(var);
            let v = x.get(var);
            let excess = if v.is_nan() { hi - lo } else { (lo - v).max(v - hi).max(0.0) };
            d += excess / (hi - lo);
        }
        let [lo, hi] = self.bounds.hpa_volume;
        let ap = x.piston_area.clamp(self.bounds.piston_area[0], self.bounds.piston_area[1]);
        let hpa = x.hpa_volume.clamp(lo, hi);
        d + (self.threshold(ap) - hpa).max(0.0) / (hi - lo)
    }

    pub fn to_toml(&self) -> Result<String, FeasibilityError> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self, FeasibilityError> {
        let region: Self = toml::from_str(text)?;
        region.validate()?;
        Ok(region)
    }

    pub fn save(&self, path: &Path) -> Result<(), FeasibilityError> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FeasibilityError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Piston-area by HPA-volume grid; the other two variables are held at `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGrid {
    pub piston_area: Vec<f64>,
    pub hpa_volume: Vec<f64>,
    pub base: DesignVector,
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

impl CalibrationGrid {
    /// `n_ap` by `n_hpa` evenly spaced points spanning the box.
    pub fn spanning(bounds: &DesignBounds, n_ap: usize, n_hpa: usize, base: DesignVector) -> Self {
        Self {
            piston_area: linspace(bounds.piston_area[0], bounds.piston_area[1], n_ap),
            hpa_volume: linspace(bounds.hpa_volume[0], bounds.hpa_volume[1], n_hpa),
            base,
        }
    }

    /// 14 x 19 = 266 runs with the remaining variables at the reference design.
    pub fn default_for(bounds: &DesignBounds) -> Self {
        Self::spanning(bounds, 14, 19, DesignVector::REFERENCE)
    }

    pub fn len(&self) -> usize {
        self.piston_area.len() * self.hpa_volume.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major over piston area, then HPA volume.
    pub fn designs(&self) -> Vec<DesignVector> {
        self.piston_area
            .iter()
            .flat_map(|&ap| {
                self.hpa_volume.iter().map(move |&vh| DesignVector { piston_area: ap, hpa_volume: vh, ..self.base })
            })
            .collect()
    }

    fn validate(&self, bounds: &DesignBounds) -> Result<(), FeasibilityError> {
        let bad = |m: &str| Err(FeasibilityError::InvalidGrid(m.to_owned()));
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if self.piston_area.is_empty() || self.hpa_volume.is_empty() {
            return bad("empty axis");
        }
        if !increasing(&self.piston_area) || !increasing(&self.hpa_volume) {
            return bad("axes must be strictly increasing");
        }
        if !self.designs().iter().all(|d| bounds.contains(d)) {
            return bad("grid points must lie inside the design bounds");
        }
        Ok(())
    }
}

/// Result of a calibration sweep.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub region: FeasibleRegion,
    pub designs: Vec<DesignVector>,
    pub assessments: Vec<Assessment>,
}

impl Calibration {
    pub fn total_runs(&self) -> usize {
        self.assessments.len()
    }

    pub fn flagged_runs(&self) -> usize {
        self.assessments.iter().filter(|a| !a.is_physical()).count()
    }
}

/// Runs every grid point and fits one knot per piston area: the smallest grid
/// HPA volume from which every run up to the top of the grid is physical.
pub fn calibrate_region<P: Pipeline + ?Sized>(
    grid: &CalibrationGrid,
    bounds: &DesignBounds,
    pipeline: &P,
    exec: Execution,
) -> Result<Calibration, FeasibilityError> {
    if !bounds.is_valid() {
        return Err(FeasibilityError::InvalidBounds);
    }
    grid.validate(bounds)?;
    let designs = grid.designs();
    let assessments = exec.map(&designs, |d| pipeline.assess(d));
    let n_hpa = grid.hpa_volume.len();
    let mut knots = Vec::with_capacity(grid.piston_area.len());
    for (col, &ap) in grid.piston_area.iter().enumerate() {
        let column = &assessments[col * n_hpa..(col + 1) * n_hpa];
        let tail = column.iter().rev().take_while(|a| a.is_physical()).count();
        if tail == 0 {
            return Err(FeasibilityError::InfeasibleColumn { piston_area: ap });
        }
        let first = n_hpa - tail;
        // The lowest grid row stands for the box minimum.
        let hpa_min = if first == 0 { bounds.hpa_volume[0] } else { grid.hpa_volume[first] };
        knots.push(Knot { piston_area: ap, hpa_min });
    }
    let region = FeasibleRegion::new(*bounds, knots)?;
    Ok(Calibration { region, designs, assessments })
}

/// Objective value and provenance of one penalized evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedValue {
    pub value: f64,
    pub feasible: bool,
    /// `None` when the design was rejected without simulating.
    pub assessment: Option<Assessment>,
}

/// `-mean_elec` for feasible, physical designs; `PENALTY * (1 + violation)`
/// otherwise. Designs outside the region are not simulated.
pub fn penalized_objective<P: Pipeline + ?Sized>(x: &DesignVector, region: &FeasibleRegion, pipeline: &P) -> PenalizedValue {
    if !region.is_feasible(x) {
        return PenalizedValue { value: PENALTY * (1.0 + region.violation(x)), feasible: false, assessment: None };
    }
    let assessment = pipeline.assess(x);
    match (&assessment.metrics, assessment.is_physical()) {
        (Some(m), true) if m.mean_elec.is_finite() => {
            PenalizedValue { value: -m.mean_elec, feasible: true, assessment: Some(assessment) }
        }
        _ => PenalizedValue { value: PENALTY, feasible: false, assessment: Some(assessment) },
    }
}

/// [`penalized_objective`] as an optimizer objective over `[ap, vh0, vl0, pl0]`.
pub struct WecObjective<'a, P: Pipeline + ?Sized> {
    pub region: &'a FeasibleRegion,
    pub pipeline: &'a P,
}

impl<'a, P: Pipeline + ?Sized> WecObjective<'a, P> {
    pub fn new(region: &'a FeasibleRegion, pipeline: &'a P) -> Self {
        Self { region, pipeline }
    }
}

impl<P: Pipeline + ?Sized> Objective for WecObjective<'_, P> {
    fn evaluate(&self, x: &[f64]) -> Evaluation {
        match DesignVector::from_slice(x) {
            Ok(d) => {
                let p = penalized_objective(&d, self.region, self.pipeline);
                Evaluation { value: p.value, feasible: p.feasible }
            }
            Err(_) => Evaluation { value: PENALTY * 2.0, feasible: false },
        }
    }
}
