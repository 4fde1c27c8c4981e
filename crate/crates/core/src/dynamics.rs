//! Heave-only equations of motion for the float and spar.
//!
//! Each body obeys
//! `(m + A_inf) x'' = r(t) Gamma eta(t) - (B_r + C_d) x' - K_hs x + F_pto`,
//! with the PTO force applied as an equal and opposite pair.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wave::SurfaceElevation;

/// Index of the float in two-body arrays.
pub const FLOAT: usize = 0;
/// Index of the spar in two-body arrays.
pub const SPAR: usize = 1;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("simulation diverged at t = {t} s (float {float:?}, spar {spar:?})")]
    Diverged { t: f64, float: BodyState, spar: BodyState },
    #[error("invalid body parameters: {0}")]
    InvalidBody(String),
    #[error("invalid simulation settings: {0}")]
    InvalidConfig(String),
}

/// Linear hydrodynamic coefficients of one body in heave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyHydro {
    /// kg
    pub mass: f64,
    /// Added mass at infinite frequency (kg).
    pub added_mass_inf: f64,
    /// Constant stand-in for the radiation memory kernel (N s/m).
    pub radiation_damping: f64,
    /// N/m
    pub hydrostatic_stiffness: f64,
    /// Linearized viscous drag (N s/m).
    pub drag_coeff: f64,
    /// Excitation per metre of free-surface elevation (N/m).
    pub excitation_coeff: f64,
}

impl BodyHydro {
    /// RM3 float. Mass is the published value; the remaining coefficients are
    /// synthetic placeholders.
    pub fn rm3_float() -> Self {
        Self {
            mass: 727_010.0,
            added_mass_inf: 1.2e6,
            radiation_damping: 3.0e5,
            hydrostatic_stiffness: 3.0e6,
            drag_coeff: 1.0e5,
            excitation_coeff: 1.5e6,
        }
    }

    /// RM3 spar and heave plate. Mass is the published value; the remaining
    /// coefficients are synthetic placeholders.
    pub fn rm3_spar() -> Self {
        Self {
            mass: 878_300.0,
            added_mass_inf: 5.0e6,
            radiation_damping: 1.0e5,
            hydrostatic_stiffness: 3.0e5,
            drag_coeff: 2.0e5,
            excitation_coeff: 3.0e5,
        }
    }

    pub fn inertia(&self) -> f64 {
        self.mass + self.added_mass_inf
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let ok = self.mass > 0.0
            && self.added_mass_inf >= 0.0
            && self.radiation_damping >= 0.0
            && self.hydrostatic_stiffness >= 0.0
            && self.drag_coeff >= 0.0
            && self.excitation_coeff.is_finite();
        if ok {
            Ok(())
        } else {
            Err(DynamicsError::InvalidBody(format!("{self:?}")))
        }
    }

    fn acceleration(&self, state: BodyState, excitation: f64, external: f64) -> f64 {
        let damping = self.radiation_damping + self.drag_coeff;
        (excitation - damping * state.velocity - self.hydrostatic_stiffness * state.position
            + external)
            / self.inertia()
    }
}

/// Heave position and velocity of one body.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub position: f64,
    pub velocity: f64,
}

impl BodyState {
    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.velocity.is_finite()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    SemiImplicitEuler,
    #[default]
    Rk4,
}

/// Time-integration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// s
    pub duration: f64,
    /// s
    pub ramp_time: f64,
    /// s
    pub dt: f64,
    #[serde(default)]
    pub integrator: Integrator,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { duration: 400.0, ramp_time: 100.0, dt: 0.01, integrator: Integrator::Rk4 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(DynamicsError::InvalidConfig(format!("dt = {} outside (0, 0.1]", self.dt)));
        }
        if !(self.ramp_time >= 0.0 && self.ramp_time < self.duration && self.duration.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!(
                "need 0 <= ramp_time ({}) < duration ({})",
                self.ramp_time, self.duration
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// Float and spar under a shared sea state.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodySystem {
    pub bodies: [BodyHydro; 2],
    pub ramp_time: f64,
    pub integrator: Integrator,
}

impl TwoBodySystem {
    pub fn new(float: BodyHydro, spar: BodyHydro, ramp_time: f64, integrator: Integrator) -> Self {
        Self { bodies: [float, spar], ramp_time, integrator }
    }

    /// Excitation scaling `min(t / ramp_time, 1)`.
    pub fn ramp(&self, t: f64) -> f64 {
        if self.ramp_time <= 0.0 {
            1.0
        } else {
            (t / self.ramp_time).clamp(0.0, 1.0)
        }
    }

    /// Accelerations of both bodies. `f_pto` acts on the float, `-f_pto` on the spar.
    fn accelerations<E: SurfaceElevation + ?Sized>(
        &self,
        states: &[BodyState; 2],
        wave: &E,
        f_pto: f64,
        t: f64,
    ) -> [f64; 2] {
        let eta = self.ramp(t) * wave.elevation(t);
        let reaction = [f_pto, -f_pto];
        std::array::from_fn(|i| {
            let body = &self.bodies[i];
            body.acceleration(states[i], body.excitation_coeff * eta, reaction[i])
        })
    }

    /// Advance both bodies by `dt` with the PTO force held constant over the step.
    pub fn step<E: SurfaceElevation + ?Sized>(
        &self,
        states: [BodyState; 2],
        wave: &E,
        f_pto: f64,
        t: f64,
        dt: f64,
    ) -> Result<[BodyState; 2], DynamicsError> {
        let next = match self.integrator {
            Integrator::SemiImplicitEuler => {
                let acc = self.accelerations(&states, wave, f_pto, t);
                std::array::from_fn(|i| {
                    let velocity = states[i].velocity + acc[i] * dt;
                    BodyState { position: states[i].position + velocity * dt, velocity }
                })
            }
            Integrator::Rk4 => self.rk4(states, wave, f_pto, t, dt),
        };
        if next.iter().all(BodyState::is_finite) {
            Ok(next)
        } else {
            Err(DynamicsError::Diverged { t: t + dt, float: next[FLOAT], spar: next[SPAR] })
        }
    }

    fn rk4<E: SurfaceElevation + ?Sized>(
        &self,
        s: [BodyState; 2],
        wave: &E,
        f_pto: f64,
        t: f64,
        dt: f64,
    ) -> [BodyState; 2] {
        let offset = |base: &[BodyState; 2], dx: [f64; 2], dv: [f64; 2], h: f64| -> [BodyState; 2] {
            std::array::from_fn(|i| BodyState {
                position: base[i].position + h * dx[i],
                velocity: base[i].velocity + h * dv[i],
            })
        };
        let vel = |st: &[BodyState; 2]| [st[0].velocity, st[1].velocity];

        let k1v = vel(&s);
        let k1a = self.accelerations(&s, wave, f_pto, t);
        let s2 = offset(&s, k1v, k1a, 0.5 * dt);
        let k2v = vel(&s2);
        let k2a = self.accelerations(&s2, wave, f_pto, t + 0.5 * dt);
        let s3 = offset(&s, k2v, k2a, 0.5 * dt);
        let k3v = vel(&s3);
        let k3a = self.accelerations(&s3, wave, f_pto, t + 0.5 * dt);
        let s4 = offset(&s, k3v, k3a, dt);
        let k4v = vel(&s4);
        let k4a = self.accelerations(&s4, wave, f_pto, t + dt);

        std::array::from_fn(|i| BodyState {
            position: s[i].position + dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]),
            velocity: s[i].velocity + dt / 6.0 * (k1a[i] + 2.0 * k2a[i] + 2.0 * k3a[i] + k4a[i]),
        })
    }
}

/// `v_float - v_spar`.
pub fn relative_velocity(states: &[BodyState; 2]) -> f64 {
    states[FLOAT].velocity - states[SPAR].velocity
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct Calm;
    impl SurfaceElevation for Calm {
        fn elevation(&self, _t: f64) -> f64 {
            0.0
        }
    }

    struct Constant(f64);
    impl SurfaceElevation for Constant {
        fn elevation(&self, _t: f64) -> f64 {
            self.0
        }
    }

    fn undamped(mass: f64, added: f64, stiffness: f64) -> BodyHydro {
        BodyHydro {
            mass,
            added_mass_inf: added,
            radiation_damping: 0.0,
            hydrostatic_stiffness: stiffness,
            drag_coeff: 0.0,
            excitation_coeff: 0.0,
        }
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let sys = TwoBodySystem::new(BodyHydro::rm3_float(), BodyHydro::rm3_spar(), 0.0, Integrator::Rk4);
        let rest = [BodyState::default(); 2];
        let mut s = rest;
        for k in 0..100 {
            s = sys.step(s, &Calm, 0.0, k as f64 * 0.01, 0.01).unwrap();
        }
        assert_eq!(s, rest);
    }

    /// Zero crossings of an undamped oscillator give its period.
    #[test]
    fn harmonic_oscillator_frequency() {
        let (m, a, k): (f64, f64, f64) = (1.0e5, 5.0e4, 6.0e5);
        let omega = (k / (m + a)).sqrt();
        let period = 2.0 * std::f64::consts::PI / omega;
        let dt = period / 200.0;
        let sys = TwoBodySystem::new(undamped(m, a, k), undamped(m, a, k), 0.0, Integrator::Rk4);
        let mut s = [BodyState { position: 1.0, velocity: 0.0 }; 2];
        let mut crossings = Vec::new();
        let n = 10 * 200;
        for i in 0..n {
            let t = i as f64 * dt;
            let next = sys.step(s, &Calm, 0.0, t, dt).unwrap();
            if s[0].position > 0.0 && next[0].position <= 0.0 {
                let frac = s[0].position / (s[0].position - next[0].position);
                crossings.push(t + frac * dt);
            }
            s = next;
        }
        let measured = (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;
        assert_relative_eq!(2.0 * std::f64::consts::PI / measured, omega, max_relative = 0.01);
        assert!(crossings.len() >= 9);
    }

    #[test]
    fn constant_force_on_free_mass() {
        let mut body = undamped(2.0e5, 1.0e5, 0.0);
        body.excitation_coeff = 1.0;
        let force = 3.0e4;
        for integrator in [Integrator::Rk4, Integrator::SemiImplicitEuler] {
            let sys = TwoBodySystem::new(body.clone(), body.clone(), 0.0, integrator);
            let mut s = [BodyState::default(); 2];
            let dt = 0.01;
            for i in 0..2000 {
                s = sys.step(s, &Constant(force), 0.0, i as f64 * dt, dt).unwrap();
            }
            let expected = force * 20.0 / body.inertia();
            assert_relative_eq!(s[FLOAT].velocity, expected, max_relative = 0.005);
        }
    }

    #[test]
    fn pto_force_is_a_reaction_pair() {
        let body = undamped(1.0e5, 0.0, 0.0);
        let sys = TwoBodySystem::new(body.clone(), body, 0.0, Integrator::SemiImplicitEuler);
        let s = sys.step([BodyState::default(); 2], &Calm, 5.0e4, 0.0, 0.1).unwrap();
        assert_relative_eq!(s[FLOAT].velocity, 0.05);
        assert_relative_eq!(s[SPAR].velocity, -0.05);
    }

    #[test]
    fn energy_conserved_without_dissipation() {
        let (m, k) = (727_010.0, 3.0e6);
        let sys = TwoBodySystem::new(undamped(m, 0.0, k), undamped(m, 0.0, k), 0.0, Integrator::Rk4);
        let energy = |s: BodyState| 0.5 * m * s.velocity.powi(2) + 0.5 * k * s.position.powi(2);
        let mut s = [BodyState { position: 2.0, velocity: 0.0 }; 2];
        let e0 = energy(s[0]);
        let dt = 0.01;
        for i in 0..40_000 {
            s = sys.step(s, &Calm, 0.0, i as f64 * dt, dt).unwrap();
        }
        // rk4 dissipates O(dt^5) per step; 400 s at dt = 0.01 stays well inside 1e-6.
        assert_relative_eq!(energy(s[0]), e0, max_relative = 1e-6);
    }

    #[test]
    fn ramp_scales_excitation() {
        let sys = TwoBodySystem::new(BodyHydro::rm3_float(), BodyHydro::rm3_spar(), 100.0, Integrator::Rk4);
        assert_eq!(sys.ramp(0.0), 0.0);
        assert_eq!(sys.ramp(50.0), 0.5);
        assert_eq!(sys.ramp(250.0), 1.0);
    }

    #[test]
    fn divergence_is_reported() {
        let sys = TwoBodySystem::new(BodyHydro::rm3_float(), BodyHydro::rm3_spar(), 0.0, Integrator::Rk4);
        let s = [BodyState { position: f64::NAN, velocity: 0.0 }, BodyState::default()];
        match sys.step(s, &Calm, 0.0, 3.0, 0.01) {
            Err(DynamicsError::Diverged { t, .. }) => assert_relative_eq!(t, 3.01),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn relative_velocity_examples() {
        let st = |vf: f64, vs: f64| {
            [BodyState { position: 0.0, velocity: vf }, BodyState { position: 0.0, velocity: vs }]
        };
        assert_relative_eq!(relative_velocity(&st(1.0, 0.3)), 0.7);
        assert_eq!(relative_velocity(&st(0.4, 0.4)), 0.0);
        assert_relative_eq!(relative_velocity(&st(-0.2, 0.5)), -0.7);
    }

    #[test]
    fn sim_config_bounds() {
        assert!(SimConfig::default().validate().is_ok());
        assert_eq!(SimConfig::default().n_steps(), 40_000);
        let bad_dt = SimConfig { dt: 0.2, ..SimConfig::default() };
        assert!(bad_dt.validate().is_err());
        let bad_ramp = SimConfig { ramp_time: 400.0, ..SimConfig::default() };
        assert!(bad_ramp.validate().is_err());
    }
}
