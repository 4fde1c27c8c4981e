//! Hydraulic power take-off: double-acting piston pump, ideal four-valve
//! rectifier, high/low-pressure gas accumulators, variable-displacement motor
//! and generator.

mod efficiency;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use efficiency::{EfficiencyError, EfficiencyModel, EfficiencyTable, TABLE_HEADER as EFFICIENCY_TABLE_HEADER};

pub use crate::design::DesignVector;

/// Polytropic exponent of the accumulator gas.
pub const ISENTROPIC_EXPONENT: f64 = 1.4;

/// Motor displacement outside the linear pressure window (m^3).
pub const FALLBACK_DISPLACEMENT: f64 = 2.0e-5;
/// Open pressure window `(low, high)` of the linear displacement law (Pa).
pub const DISPLACEMENT_WINDOW: (f64, f64) = (4.0e6, 15.0e6);
const DISPLACEMENT_SLOPE: f64 = 2.67e-11;
const DISPLACEMENT_OFFSET: f64 = 8.52e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HptoError {
    #[error("{which} accumulator full: fluid volume {v_in} m^3 reached gas volume {v0} m^3")]
    AccumulatorFull { which: Accumulator, v_in: f64, v0: f64 },
    #[error("hydraulic state became non-finite: {0:?}")]
    NonFinite(HptoState),
    #[error("invalid PTO parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accumulator {
    High,
    Low,
}

impl std::fmt::Display for Accumulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Accumulator::High => "high-pressure",
            Accumulator::Low => "low-pressure",
        })
    }
}

/// PTO parameters that are not optimized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HptoFixedParams {
    /// Pa
    pub hpa_precharge: f64,
    /// Motor plus generator rotor inertia (kg m^2).
    pub motor_inertia: f64,
    /// N m
    pub friction_torque: f64,
    /// Rated generator speed (rad/s).
    pub desired_speed: f64,
    pub mech_eff_divisor: f64,
}

impl Default for HptoFixedParams {
    fn default() -> Self {
        Self {
            hpa_precharge: 6.0e6,
            motor_inertia: 20.0,
            friction_torque: 0.0,
            desired_speed: 150.0,
            mech_eff_divisor: 1.05,
        }
    }
}

impl HptoFixedParams {
    pub fn validate(&self) -> Result<(), HptoError> {
        let ok = self.hpa_precharge > 0.0
            && self.motor_inertia > 0.0
            && self.friction_torque >= 0.0
            && self.desired_speed > 0.0
            && self.mech_eff_divisor > 0.0;
        if ok {
            Ok(())
        } else {
            Err(HptoError::InvalidParams(format!("{self:?}")))
        }
    }
}

/// Instantaneous hydraulic state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HptoState {
    /// Pa
    pub p_high: f64,
    /// Pa
    pub p_low: f64,
    /// Cumulative fluid volume delivered into the HPA (m^3).
    pub v_in_high: f64,
    /// Cumulative fluid volume delivered into the LPA (m^3, negative when drained).
    pub v_in_low: f64,
    /// Motor speed (rad/s).
    pub omega_m: f64,
}

impl HptoState {
    /// Both accumulators at pre-charge, motor at rest.
    pub fn initial(design: &DesignVector, fixed: &HptoFixedParams) -> Self {
        Self {
            p_high: fixed.hpa_precharge,
            p_low: design.lpa_precharge,
            v_in_high: 0.0,
            v_in_low: 0.0,
            omega_m: 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        [self.p_high, self.p_low, self.v_in_high, self.v_in_low, self.omega_m]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Everything the PTO produces over one step, evaluated at the start state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HptoSample {
    /// Force on the float (the spar receives the opposite), N.
    pub f_pto: f64,
    pub q_piston: f64,
    pub q_motor: f64,
    pub alpha_d: f64,
    pub c_gen: f64,
    pub p_abs: f64,
    pub p_mech: f64,
    pub p_elec: f64,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `F = -sign(v) (p_high - p_low) A_p`, with `sign(0) = 0`.
pub fn pto_force(v: f64, p_high: f64, p_low: f64, ap: f64) -> f64 {
    -sign(v) * (p_high - p_low) * ap
}

/// Rectified instantaneous absorbed power `|F v|`.
pub fn absorbed_power(f_pto: f64, v: f64) -> f64 {
    (f_pto * v).abs()
}

/// Signed piston flow `A_p v`.
pub fn piston_flow(ap: f64, v: f64) -> f64 {
    ap * v
}

/// Isentropic gas law `p0 / (1 - V_in/V_0)^1.4`.
pub fn accumulator_pressure(precharge: f64, v_in: f64, v0: f64) -> Result<f64, HptoError> {
    accumulator_pressure_of(Accumulator::High, precharge, v_in, v0)
}

fn accumulator_pressure_of(which: Accumulator, precharge: f64, v_in: f64, v0: f64) -> Result<f64, HptoError> {
    if !(v_in < v0) {
        return Err(HptoError::AccumulatorFull { which, v_in, v0 });
    }
    let p = precharge / (1.0 - v_in / v0).powf(ISENTROPIC_EXPONENT);
    if p.is_finite() {
        Ok(p)
    } else {
        Err(HptoError::AccumulatorFull { which, v_in, v0 })
    }
}

/// Ideal rectifier: `(|q_piston| - q_motor, -(|q_piston| - q_motor))`.
pub fn rectified_flows(q_piston: f64, q_motor: f64) -> (f64, f64) {
    let into_hpa = q_piston.abs() - q_motor;
    (into_hpa, -into_hpa)
}

/// Displacement `alpha D` of the variable motor as a function of `p_high - p_low`.
pub fn motor_displacement(delta_p: f64) -> f64 {
    let (lo, hi) = DISPLACEMENT_WINDOW;
    if delta_p > lo && delta_p < hi {
        DISPLACEMENT_SLOPE * delta_p - DISPLACEMENT_OFFSET
    } else {
        FALLBACK_DISPLACEMENT
    }
}

/// `((p_h - p_l) alpha_d - T_g - T_f) / I_mg`.
pub fn motor_accel(p_h: f64, p_l: f64, alpha_d: f64, t_g: f64, t_f: f64, i_mg: f64) -> f64 {
    ((p_h - p_l) * alpha_d - t_g - t_f) / i_mg
}

/// `omega_m alpha_d`.
pub fn motor_flow(omega_m: f64, alpha_d: f64) -> f64 {
    omega_m * alpha_d
}

/// `(dp alpha_d) (omega_m / omega_desired) / divisor`; the speed ratio is the
/// volumetric efficiency and the divisor the mechanical one.
pub fn generator_damping(delta_p: f64, alpha_d: f64, omega_m: f64, params: &HptoFixedParams) -> f64 {
    delta_p * alpha_d * (omega_m / params.desired_speed) / params.mech_eff_divisor
}

/// Mechanical and electrical generator power.
///
/// The generator torque is the damping term itself, floored at zero since the
/// machine only brakes.
pub fn generator_powers(
    c_gen: f64,
    omega_m: f64,
    efficiency: &EfficiencyModel,
    params: &HptoFixedParams,
) -> (f64, f64) {
    let torque = c_gen.max(0.0);
    let p_mech = torque * omega_m.max(0.0);
    let eta = efficiency.efficiency(omega_m, torque, params.desired_speed).clamp(0.0, 1.0);
    (p_mech, eta * p_mech)
}

/// Advance the hydraulic state by `dt` given the relative velocity.
///
/// Forces and powers in the returned sample come from the start-of-step state;
/// accumulator volumes and motor speed are advanced with forward Euler.
pub fn hpto_step(
    state: &HptoState,
    v_rel: f64,
    design: &DesignVector,
    fixed: &HptoFixedParams,
    efficiency: &EfficiencyModel,
    dt: f64,
) -> Result<(HptoState, HptoSample), HptoError> {
    let ap = design.piston_area;
    let delta_p = state.p_high - state.p_low;

    let f_pto = pto_force(v_rel, state.p_high, state.p_low, ap);
    let p_abs = absorbed_power(f_pto, v_rel);
    let q_piston = piston_flow(ap, v_rel);
    let alpha_d = motor_displacement(delta_p);
    let c_gen = generator_damping(delta_p, alpha_d, state.omega_m, fixed);
    let (p_mech, p_elec) = generator_powers(c_gen, state.omega_m, efficiency, fixed);
    let q_motor = motor_flow(state.omega_m, alpha_d);
    let (q_high, q_low) = rectified_flows(q_piston, q_motor);
    let accel = motor_accel(
        state.p_high,
        state.p_low,
        alpha_d,
        c_gen.max(0.0),
        fixed.friction_torque,
        fixed.motor_inertia,
    );

    let v_in_high = state.v_in_high + q_high * dt;
    let v_in_low = state.v_in_low + q_low * dt;
    let omega_m = (state.omega_m + accel * dt).max(0.0);
    let p_high = accumulator_pressure_of(Accumulator::High, fixed.hpa_precharge, v_in_high, design.hpa_volume)?;
    let p_low = accumulator_pressure_of(Accumulator::Low, design.lpa_precharge, v_in_low, design.lpa_volume)?;

    let next = HptoState { p_high, p_low, v_in_high, v_in_low, omega_m };
    if !next.is_finite() {
        return Err(HptoError::NonFinite(next));
    }
    let sample = HptoSample { f_pto, q_piston, q_motor, alpha_d, c_gen, p_abs, p_mech, p_elec };
    Ok((next, sample))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const MPA: f64 = 1.0e6;

    #[test]
    fn pto_force_examples() {
        assert_relative_eq!(pto_force(1.0, 10.0 * MPA, 2.0 * MPA, 0.1), -0.8e6, max_relative = 1e-12);
        assert_eq!(pto_force(0.0, 10.0 * MPA, 2.0 * MPA, 0.1), 0.0);
        assert_relative_eq!(pto_force(-1.0, 10.0 * MPA, 2.0 * MPA, 0.1), 0.8e6, max_relative = 1e-12);
    }

    #[test]
    fn absorbed_power_examples() {
        assert_relative_eq!(absorbed_power(-0.8e6, 1.0), 0.8e6);
        assert_eq!(absorbed_power(-0.8e6, 0.0), 0.0);
        assert_relative_eq!(absorbed_power(0.8e6, -1.0), 0.8e6);
    }

    #[test]
    fn piston_flow_examples() {
        assert_relative_eq!(piston_flow(0.1, 0.5), 0.05);
        assert_eq!(piston_flow(0.1, 0.0), 0.0);
        assert_relative_eq!(piston_flow(0.18, -1.0), -0.18);
    }

    #[test]
    fn accumulator_pressure_examples() {
        assert_eq!(accumulator_pressure(3.5 * MPA, 0.0, 2.0).unwrap(), 3.5 * MPA);
        let half = accumulator_pressure(3.5 * MPA, 1.0, 2.0).unwrap();
        assert_relative_eq!(half, 3.5 * MPA * 2.0_f64.powf(1.4), max_relative = 1e-12);
        assert_relative_eq!(half, 9.237e6, max_relative = 1e-3);
        assert!(matches!(accumulator_pressure(3.5 * MPA, 2.0, 2.0), Err(HptoError::AccumulatorFull { .. })));
        assert!(accumulator_pressure(3.5 * MPA, 1.999_999, 2.0).unwrap().is_finite());
    }

    #[test]
    fn rectifier_examples() {
        let (h, l) = rectified_flows(0.05, 0.02);
        assert_relative_eq!(h, 0.03);
        assert_relative_eq!(l, -0.03);
        assert_eq!(rectified_flows(-0.05, 0.02), rectified_flows(0.05, 0.02));
        assert_eq!(rectified_flows(0.0, 0.0), (0.0, -0.0));
    }

    #[test]
    fn motor_displacement_branches() {
        assert_eq!(motor_displacement(2.0 * MPA), 2.0e-5);
        assert_eq!(motor_displacement(20.0 * MPA), 2.0e-5);
        assert_eq!(motor_displacement(10.0 * MPA), 2.67e-11 * 1.0e7 - 8.52e-5);
        assert_relative_eq!(motor_displacement(10.0 * MPA), 1.818e-4, max_relative = 1e-12);
        // thresholds are open
        assert_eq!(motor_displacement(4.0 * MPA), 2.0e-5);
        assert_eq!(motor_displacement(15.0 * MPA), 2.0e-5);
    }

    #[test]
    fn motor_examples() {
        assert_eq!(motor_accel(12.0, 2.0, 100.0, 600.0, 400.0, 20.0), 0.0);
        assert_relative_eq!(motor_accel(10.0 * MPA, 0.0, 1.818e-4, 1000.0, 0.0, 20.0), 40.9, max_relative = 1e-12);
        assert_eq!(motor_accel(1.0, 1.0, 1e-4, 0.0, 0.0, 20.0), 0.0);
        assert_relative_eq!(motor_flow(150.0, 1.818e-4), 0.02727, max_relative = 1e-12);
        assert_eq!(motor_flow(0.0, 1.818e-4), 0.0);
        assert_relative_eq!(motor_flow(150.0, 2e-5), 0.003, max_relative = 1e-12);
    }

    #[test]
    fn generator_examples() {
        let p = HptoFixedParams::default();
        assert_relative_eq!(generator_damping(10.0 * MPA, 1.818e-4, 150.0, &p), 1818.0 / 1.05, max_relative = 1e-12);
        assert_eq!(generator_damping(10.0 * MPA, 1.818e-4, 0.0, &p), 0.0);
        assert_eq!(generator_damping(0.0, 1.818e-4, 150.0, &p), 0.0);

        let eff = EfficiencyModel::default();
        assert_eq!(generator_powers(1731.4, 0.0, &eff, &p), (0.0, 0.0));
        let (mech, elec) = generator_powers(1731.4, 150.0, &eff, &p);
        assert_relative_eq!(mech, 1731.4 * 150.0, max_relative = 1e-12);
        assert_relative_eq!(elec, 0.85 * mech, max_relative = 1e-12);
        assert_eq!(generator_powers(-50.0, 150.0, &eff, &p), (0.0, 0.0));
    }

    proptest! {
        #[test]
        fn electrical_never_exceeds_mechanical(c in -1e5f64..1e5, w in 0f64..400.0) {
            let (mech, elec) = generator_powers(c, w, &EfficiencyModel::default(), &HptoFixedParams::default());
            prop_assert!(elec >= 0.0 && elec <= mech);
        }

        #[test]
        fn accumulator_pressure_increases_with_fill(p0 in 1e6f64..1e7, v0 in 0.5f64..10.0, a in 0f64..0.98, b in 0f64..0.98) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-9);
            let pl = accumulator_pressure(p0, lo * v0, v0).unwrap();
            let ph = accumulator_pressure(p0, hi * v0, v0).unwrap();
            prop_assert!(ph > pl);
        }

        #[test]
        fn displacement_is_piecewise_exact(dp in -5e7f64..5e7) {
            let d = motor_displacement(dp);
            if dp > 4e6 && dp < 15e6 {
                prop_assert_eq!(d, 2.67e-11 * dp - 8.52e-5);
            } else {
                prop_assert_eq!(d, 2e-5);
            }
        }

        #[test]
        fn rectifier_conserves_volume(qp in -1f64..1.0, qm in 0f64..0.1) {
            let (h, l) = rectified_flows(qp, qm);
            prop_assert_eq!(h + l, 0.0);
        }
    }

    fn design() -> DesignVector {
        DesignVector { piston_area: 0.1, hpa_volume: 5.0, lpa_volume: 4.0, lpa_precharge: 4.0 * MPA }
    }

    #[test]
    fn idle_step_leaves_pressures_unchanged() {
        let fixed = HptoFixedParams::default();
        let x = design();
        let state = HptoState::initial(&x, &fixed);
        // dp = 2 MPa: fallback displacement, motor at rest, no piston motion
        let (next, sample) = hpto_step(&state, 0.0, &x, &fixed, &EfficiencyModel::default(), 0.01).unwrap();
        assert_eq!(next.p_high, state.p_high);
        assert_eq!(next.p_low, state.p_low);
        assert_eq!(sample.f_pto, 0.0);
        assert_eq!(sample.q_motor, 0.0);
    }

    #[test]
    fn step_matches_hand_composed_chain() {
        let fixed = HptoFixedParams::default();
        let eff = EfficiencyModel::default();
        let x = design();
        let state = HptoState { p_high: 12.0 * MPA, p_low: 3.0 * MPA, v_in_high: 1.2, v_in_low: -1.2, omega_m: 140.0 };
        let dt = 0.01;
        let (next, s) = hpto_step(&state, 1.0, &x, &fixed, &eff, dt).unwrap();

        let dp = 9.0 * MPA;
        let f = pto_force(1.0, state.p_high, state.p_low, 0.1);
        let ad = motor_displacement(dp);
        let cg = generator_damping(dp, ad, 140.0, &fixed);
        let (pm, pe) = generator_powers(cg, 140.0, &eff, &fixed);
        let qm = motor_flow(140.0, ad);
        let (qh, ql) = rectified_flows(piston_flow(0.1, 1.0), qm);
        let acc = motor_accel(state.p_high, state.p_low, ad, cg, 0.0, 20.0);
        let ph = accumulator_pressure(6.0 * MPA, 1.2 + qh * dt, 5.0).unwrap();
        let pl = accumulator_pressure(4.0 * MPA, -1.2 + ql * dt, 4.0).unwrap();

        assert_eq!(s.f_pto, f);
        assert_eq!(s.p_abs, absorbed_power(f, 1.0));
        assert_eq!((s.p_mech, s.p_elec), (pm, pe));
        assert_eq!(s.alpha_d, ad);
        assert_eq!(next.omega_m, 140.0 + acc * dt);
        assert_eq!(next.p_high, ph);
        assert_eq!(next.p_low, pl);
        assert_eq!(next.v_in_high + next.v_in_low, 0.0);
    }

    #[test]
    fn overfilled_accumulator_is_an_error() {
        let fixed = HptoFixedParams::default();
        let x = DesignVector { hpa_volume: 0.5, ..design() };
        let state = HptoState { v_in_high: 0.499, ..HptoState::initial(&x, &fixed) };
        let err = hpto_step(&state, 5.0, &x, &fixed, &EfficiencyModel::default(), 0.01).unwrap_err();
        assert!(matches!(err, HptoError::AccumulatorFull { which: Accumulator::High, .. }));
    }

    /// Forward Euler on a smooth forcing: halving dt halves the error.
    #[test]
    fn richardson_ratio_matches_first_order() {
        let fixed = HptoFixedParams::default();
        let eff = EfficiencyModel::default();
        let x = design();
        let start = HptoState {
            p_high: accumulator_pressure(6.0 * MPA, 1.5, 5.0).unwrap(),
            p_low: accumulator_pressure(4.0 * MPA, -1.5, 4.0).unwrap(),
            v_in_high: 1.5,
            v_in_low: -1.5,
            omega_m: 150.0,
        };
        let run = |dt: f64| {
            let n = (10.0 / dt).round() as usize;
            let mut s = start;
            for k in 0..n {
                let t = k as f64 * dt;
                let v = 0.4 + 0.2 * (0.8 * t).sin();
                s = hpto_step(&s, v, &x, &fixed, &eff, dt).unwrap().0;
            }
            s.p_high
        };
        let (a, b, c) = (run(0.01), run(0.005), run(0.0025));
        let ratio = (a - b) / (b - c);
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn motor_speed_converges_to_torque_balance() {
        let fixed = HptoFixedParams::default();
        let dp = 10.0 * MPA;
        let ad = motor_displacement(dp);
        let mut w: f64 = 0.0;
        for _ in 0..200_000 {
            let cg = generator_damping(dp, ad, w, &fixed);
            w = (w + 0.001 * motor_accel(dp, 0.0, ad, cg, 0.0, fixed.motor_inertia)).max(0.0);
        }
        // dp ad (1 - w / (w_d * 1.05)) = 0
        assert_relative_eq!(w, 150.0 * 1.05, max_relative = 1e-9);
    }
}
