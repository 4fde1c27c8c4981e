//! Generator efficiency as a function of shaft speed (and torque, when tabulated).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TABLE_HEADER: &str = "omega_rad_s,torque_Nm,efficiency";

#[derive(Debug, Error)]
pub enum EfficiencyError {
    #[error("efficiency table: expected header `{TABLE_HEADER}`, found `{0}`")]
    Header(String),
    #[error("efficiency table line {line}: {msg}")]
    Row { line: usize, msg: String },
    #[error("efficiency table: {0}")]
    Grid(String),
    #[error("efficiency table: {0}")]
    Io(#[from] std::io::Error),
}

/// Speed/torque grid with bilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyTable {
    speeds: Vec<f64>,
    torques: Vec<f64>,
    /// Row-major, `values[i * torques.len() + j]` at `(speeds[i], torques[j])`.
    values: Vec<f64>,
}

impl EfficiencyTable {
    pub fn parse(text: &str) -> Result<Self, EfficiencyError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| EfficiencyError::Header(String::new()))?;
        if header.trim() != TABLE_HEADER {
            return Err(EfficiencyError::Header(header.trim().to_owned()));
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let row_err = |msg: String| EfficiencyError::Row { line: i + 1, msg };
            if fields.len() != 3 {
                return Err(row_err(format!("expected 3 fields, got {}", fields.len())));
            }
            let mut parsed = [0.0; 3];
            for (slot, f) in parsed.iter_mut().zip(&fields) {
                *slot = f.parse().map_err(|_| row_err(format!("`{f}` is not a number")))?;
            }
            rows.push(parsed);
        }
        Self::from_rows(&rows)
    }

    pub fn load(path: &Path) -> Result<Self, EfficiencyError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Builds the grid from `(speed, torque, efficiency)` rows covering every
    /// speed/torque combination exactly once.
    pub fn from_rows(rows: &[[f64; 3]]) -> Result<Self, EfficiencyError> {
        let axis = |k: usize| {
            let mut v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let speeds = axis(0);
        let torques = axis(1);
        if speeds.len() < 2 || torques.len() < 2 {
            return Err(EfficiencyError::Grid("need at least two speeds and two torques".into()));
        }
        if speeds.len() * torques.len() != rows.len() {
            return Err(EfficiencyError::Grid(format!(
                "{} rows do not form a complete {}x{} grid",
                rows.len(),
                speeds.len(),
                torques.len()
            )));
        }
        let mut values = vec![f64::NAN; rows.len()];
        for r in rows {
            let i = speeds.partition_point(|s| *s < r[0]);
            let j = torques.partition_point(|s| *s < r[1]);
            let slot = &mut values[i * torques.len() + j];
            if !slot.is_nan() {
                return Err(EfficiencyError::Grid(format!("duplicate point ({}, {})", r[0], r[1])));
            }
            *slot = r[2];
        }
        Ok(Self { speeds, torques, values })
    }

    /// Bilinear lookup, clamped to the grid edges and to `(0, 1]`.
    pub fn efficiency(&self, omega: f64, torque: f64) -> f64 {
        let (i, fx) = locate(&self.speeds, omega);
        let (j, fy) = locate(&self.torques, torque);
        let nt = self.torques.len();
        let v = |a: usize, b: usize| self.values[a * nt + b];
        let low = v(i, j) * (1.0 - fy) + v(i, j + 1) * fy;
        let high = v(i + 1, j) * (1.0 - fy) + v(i + 1, j + 1) * fy;
        (low * (1.0 - fx) + high * fx).clamp(f64::MIN_POSITIVE, 1.0)
    }
}

/// Lower cell index and fractional position of `x` on a sorted axis.
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let last = axis.len() - 2;
    let i = axis.partition_point(|a| *a <= x).saturating_sub(1).min(last);
    let frac = ((x - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0);
    (i, frac)
}

/// Efficiency law used by the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EfficiencyModel {
    /// `eta_max * r / (0.1 + 0.9 r^2)` clamped to `(0, eta_max]`, `r = omega / omega_desired`.
    Parametric { eta_max: f64 },
    #[serde(skip)]
    Table(EfficiencyTable),
}

impl Default for EfficiencyModel {
    fn default() -> Self {
        EfficiencyModel::Parametric { eta_max: 0.85 }
    }
}

impl EfficiencyModel {
    pub fn efficiency(&self, omega: f64, torque: f64, omega_desired: f64) -> f64 {
        match self {
            EfficiencyModel::Parametric { eta_max } => {
                let r = omega / omega_desired;
                if r <= 0.0 {
                    return 0.0;
                }
                (eta_max * r / (0.1 + 0.9 * r * r)).min(*eta_max)
            }
            EfficiencyModel::Table(table) => table.efficiency(omega, torque),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parametric_curve_peaks_at_eta_max() {
        let m = EfficiencyModel::default();
        assert_relative_eq!(m.efficiency(150.0, 0.0, 150.0), 0.85);
        assert_eq!(m.efficiency(0.0, 0.0, 150.0), 0.0);
        // clamped in the low-speed hump
        assert_relative_eq!(m.efficiency(75.0, 0.0, 150.0), 0.85);
        // r = 0.1: 0.85 * 0.1 / 0.109
        assert_relative_eq!(m.efficiency(15.0, 0.0, 150.0), 0.085 / 0.109, max_relative = 1e-12);
        for k in 0..400 {
            let e = m.efficiency(k as f64, 0.0, 150.0);
            assert!((0.0..=0.85).contains(&e));
        }
    }

    #[test]
    fn table_interpolates_bilinearly() {
        let text = "omega_rad_s,torque_Nm,efficiency\n\
                    0,0,0.5\n0,100,0.7\n100,0,0.6\n100,100,0.9\n";
        let t = EfficiencyTable::parse(text).unwrap();
        assert_relative_eq!(t.efficiency(0.0, 0.0), 0.5);
        assert_relative_eq!(t.efficiency(50.0, 50.0), (0.5 + 0.7 + 0.6 + 0.9) / 4.0);
        assert_relative_eq!(t.efficiency(100.0, 25.0), 0.6 * 0.75 + 0.9 * 0.25);
        // clamped outside the grid
        assert_relative_eq!(t.efficiency(500.0, 500.0), 0.9);
        assert_relative_eq!(t.efficiency(-1.0, -1.0), 0.5);
    }

    #[test]
    fn table_efficiency_clamped_to_unit_interval() {
        let text = "omega_rad_s,torque_Nm,efficiency\n0,0,-1\n0,1,2\n1,0,0\n1,1,1.5\n";
        let t = EfficiencyTable::parse(text).unwrap();
        assert!(t.efficiency(0.0, 0.0) > 0.0);
        assert_eq!(t.efficiency(0.0, 1.0), 1.0);
    }

    #[test]
    fn table_rejects_bad_input() {
        assert!(matches!(EfficiencyTable::parse("a,b,c\n"), Err(EfficiencyError::Header(_))));
        let missing = "omega_rad_s,torque_Nm,efficiency\n0,0,1\n0,1,1\n1,0,1\n";
        assert!(matches!(EfficiencyTable::parse(missing), Err(EfficiencyError::Grid(_))));
        let junk = "omega_rad_s,torque_Nm,efficiency\n0,x,1\n";
        assert!(matches!(EfficiencyTable::parse(junk), Err(EfficiencyError::Row { line: 2, .. })));
    }
}
