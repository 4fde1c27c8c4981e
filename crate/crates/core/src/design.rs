//! The four PTO decision variables and their search box.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DesignError {
    #[error("unknown design variable `{0}` (expected one of ap, vh0, vl0, pl0)")]
    UnknownVariable(String),
    #[error("expected {expected} values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("design value `{0}` is not a number")]
    NotANumber(String),
}

/// Piston area, accumulator volumes and LPA pre-charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignVector {
    /// m^2
    pub piston_area: f64,
    /// Gas volume of the high-pressure accumulator at pre-charge (m^3).
    pub hpa_volume: f64,
    /// Gas volume of the low-pressure accumulator at pre-charge (m^3).
    pub lpa_volume: f64,
    /// Pa
    pub lpa_precharge: f64,
}

/// Decision variables by short name, in vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    PistonArea,
    HpaVolume,
    LpaVolume,
    LpaPrecharge,
}

impl Variable {
    pub const ALL: [Variable; 4] =
        [Variable::PistonArea, Variable::HpaVolume, Variable::LpaVolume, Variable::LpaPrecharge];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Variable::PistonArea => "ap",
            Variable::HpaVolume => "vh0",
            Variable::LpaVolume => "vl0",
            Variable::LpaPrecharge => "pl0",
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variable {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "ap" | "piston_area" => Ok(Variable::PistonArea),
            "vh0" | "hpa_volume" => Ok(Variable::HpaVolume),
            "vl0" | "lpa_volume" => Ok(Variable::LpaVolume),
            "pl0" | "lpa_precharge" => Ok(Variable::LpaPrecharge),
            other => Err(DesignError::UnknownVariable(other.to_owned())),
        }
    }
}

impl DesignVector {
    /// Reference design of the unoptimized device.
    pub const REFERENCE: DesignVector = DesignVector {
        piston_area: 0.038,
        hpa_volume: 8.5,
        lpa_volume: 6.0,
        lpa_precharge: 9.6e6,
    };

    pub fn to_array(self) -> [f64; 4] {
        [self.piston_area, self.hpa_volume, self.lpa_volume, self.lpa_precharge]
    }

    pub fn from_slice(x: &[f64]) -> Result<Self, DesignError> {
        match *x {
            [piston_area, hpa_volume, lpa_volume, lpa_precharge] => {
                Ok(Self { piston_area, hpa_volume, lpa_volume, lpa_precharge })
            }
            _ => Err(DesignError::WrongLength { expected: 4, got: x.len() }),
        }
    }

    pub fn get(&self, var: Variable) -> f64 {
        self.to_array()[var.index()]
    }

    pub fn with(mut self, var: Variable, value: f64) -> Self {
        match var {
            Variable::PistonArea => self.piston_area = value,
            Variable::HpaVolume => self.hpa_volume = value,
            Variable::LpaVolume => self.lpa_volume = value,
            Variable::LpaPrecharge => self.lpa_precharge = value,
        }
        self
    }

    /// All components finite and strictly positive.
    pub fn is_physical(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && *v > 0.0)
    }
}

impl FromStr for DesignVector {
    type Err = DesignError;

    /// Parses `ap,vh0,vl0,pl0` (pressure in Pa).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| DesignError::NotANumber(p.trim().to_owned())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_slice(&values)
    }
}

/// Closed box `[lower, upper]` for each decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignBounds {
    pub piston_area: [f64; 2],
    pub hpa_volume: [f64; 2],
    pub lpa_volume: [f64; 2],
    pub lpa_precharge: [f64; 2],
}

impl Default for DesignBounds {
    fn default() -> Self {
        Self {
            piston_area: [0.045, 0.18],
            hpa_volume: [0.5, 10.0],
            lpa_volume: [0.5, 8.0],
            lpa_precharge: [3.5e6, 9.6e6],
        }
    }
}

impl DesignBounds {
    pub fn range(&self, var: Variable) -> [f64; 2] {
        match var {
            Variable::PistonArea => self.piston_area,
            Variable::HpaVolume => self.hpa_volume,
            Variable::LpaVolume => self.lpa_volume,
            Variable::LpaPrecharge => self.lpa_precharge,
        }
    }

    pub fn lower(&self) -> Vec<f64> {
        Variable::ALL.iter().map(|v| self.range(*v)[0]).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        Variable::ALL.iter().map(|v| self.range(*v)[1]).collect()
    }

    pub fn contains(&self, x: &DesignVector) -> bool {
        Variable::ALL.iter().all(|&v| {
            let [lo, hi] = self.range(v);
            let value = x.get(v);
            value >= lo && value <= hi
        })
    }

    pub fn center(&self) -> DesignVector {
        let mid = |[lo, hi]: [f64; 2]| 0.5 * (lo + hi);
        DesignVector {
            piston_area: mid(self.piston_area),
            hpa_volume: mid(self.hpa_volume),
            lpa_volume: mid(self.lpa_volume),
            lpa_precharge: mid(self.lpa_precharge),
        }
    }

    pub fn is_valid(&self) -> bool {
        Variable::ALL.iter().all(|&v| {
            let [lo, hi] = self.range(v);
            lo.is_finite() && hi.is_finite() && lo < hi
        })
    }
}
