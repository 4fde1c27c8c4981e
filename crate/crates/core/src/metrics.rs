//! Scalar reductions of a simulation: post-ramp mean powers, the power
//! fluctuation ratio and extreme loads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulation::SimulationResult;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no samples at or after the ramp time {ramp} s")]
    EmptyWindow { ramp: f64 },
    #[error("series and time grid differ in length ({series} vs {time})")]
    LengthMismatch { series: usize, time: usize },
    #[error("power fluctuation ratio undefined for zero mean power")]
    UndefinedRatio,
}

/// Upper percentile used for the peak power.
pub const PEAK_PERCENTILE: f64 = 99.9;
/// Lower percentile used for the trough power.
pub const TROUGH_PERCENTILE: f64 = 0.1;

/// Outputs tracked per design evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// W
    pub mean_absorbed: f64,
    /// W
    pub mean_mech: f64,
    /// W
    pub mean_elec: f64,
    /// Power fluctuation ratio of the electrical output; NaN when the mean is zero.
    pub rpf: f64,
    /// N
    pub max_pto_force: f64,
    /// Pa
    pub max_piston_pressure: f64,
    /// Pa
    pub min_piston_pressure: f64,
    /// m
    pub max_float_disp: f64,
    /// m
    pub max_spar_disp: f64,
}

/// Extreme values over the post-ramp window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub max_pto_force: f64,
    pub max_piston_pressure: f64,
    pub min_piston_pressure: f64,
    pub max_float_disp: f64,
    pub max_spar_disp: f64,
}

fn window<'a>(series: &'a [f64], time: &[f64], ramp: f64) -> Result<&'a [f64], MetricsError> {
    if series.len() != time.len() {
        return Err(MetricsError::LengthMismatch { series: series.len(), time: time.len() });
    }
    let start = time.partition_point(|t| *t < ramp);
    if start == series.len() {
        return Err(MetricsError::EmptyWindow { ramp });
    }
    Ok(&series[start..])
}

/// Arithmetic mean over samples with `t >= ramp`.
pub fn mean_after_ramp(series: &[f64], time: &[f64], ramp: f64) -> Result<f64, MetricsError> {
    let w = window(series, time, ramp)?;
    Ok(w.iter().sum::<f64>() / w.len() as f64)
}

/// Percentile `p` in `[0, 100]` of ascending-sorted data, linear between ranks.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = (p / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = rank - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// `(P99.9 - P0.1) / mean` over the post-ramp samples.
pub fn power_fluctuation_ratio(power: &[f64], time: &[f64], ramp: f64) -> Result<f64, MetricsError> {
    let w = window(power, time, ramp)?;
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    if mean == 0.0 {
        return Err(MetricsError::UndefinedRatio);
    }
    let mut sorted = w.to_vec();
    sorted.sort_by(f64::total_cmp);
    let spread = percentile_sorted(&sorted, PEAK_PERCENTILE) - percentile_sorted(&sorted, TROUGH_PERCENTILE);
    Ok(spread / mean)
}

fn max_abs(series: &[f64]) -> f64 {
    series.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Post-ramp extremes of force, chamber pressure and displacement.
pub fn extremes(result: &SimulationResult, ramp: f64) -> Result<Extremes, MetricsError> {
    let t = &result.time;
    let top = window(&result.p_top_chamber, t, ramp)?;
    let bottom = window(&result.p_bottom_chamber, t, ramp)?;
    let chambers = || top.iter().chain(bottom);
    Ok(Extremes {
        max_pto_force: max_abs(window(&result.f_pto, t, ramp)?),
        max_piston_pressure: chambers().copied().fold(f64::NEG_INFINITY, f64::max),
        min_piston_pressure: chambers().copied().fold(f64::INFINITY, f64::min),
        max_float_disp: max_abs(window(&result.float_position, t, ramp)?),
        max_spar_disp: max_abs(window(&result.spar_position, t, ramp)?),
    })
}

impl Metrics {
    pub fn from_result(result: &SimulationResult, ramp: f64) -> Result<Self, MetricsError> {
        let t = &result.time;
        let ext = extremes(result, ramp)?;
        let rpf = match power_fluctuation_ratio(&result.p_elec, t, ramp) {
            Ok(r) => r,
            Err(MetricsError::UndefinedRatio) => f64::NAN,
            Err(e) => return Err(e),
        };
        Ok(Self {
            mean_absorbed: mean_after_ramp(&result.p_abs, t, ramp)?,
            mean_mech: mean_after_ramp(&result.p_mech, t, ramp)?,
            mean_elec: mean_after_ramp(&result.p_elec, t, ramp)?,
            rpf,
            max_pto_force: ext.max_pto_force,
            max_piston_pressure: ext.max_piston_pressure,
            min_piston_pressure: ext.min_piston_pressure,
            max_float_disp: ext.max_float_disp,
            max_spar_disp: ext.max_spar_disp,
        })
    }
}
