//! Irregular sea-state synthesis from a Pierson-Moskowitz spectrum.
//!
//! A [`WaveRealization`] is a frozen sum of harmonics with seeded random
//! phases. Everything downstream of a `(SpectrumSpec, seed)` pair is
//! deterministic.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::BodyHydro;

#[derive(Debug, Error, PartialEq)]
pub enum WaveError {
    #[error("spectral density is undefined for omega = {0} (must be > 0)")]
    NonPositiveFrequency(f64),
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
}

/// Parameters of the sea state and its discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    /// Significant wave height (m).
    pub hs: f64,
    /// Peak period (s).
    pub tp: f64,
    pub n_components: usize,
    /// Lower edge of the frequency band (rad/s).
    pub omega_min: f64,
    /// Upper edge of the frequency band (rad/s).
    pub omega_max: f64,
    pub seed: u64,
}

impl SpectrumSpec {
    /// Default discretization: 300 components over `[0.25 wp, 4 wp]`.
    pub fn with_default_band(hs: f64, tp: f64, seed: u64) -> Self {
        let wp = 2.0 * PI / tp;
        Self {
            hs,
            tp,
            n_components: 300,
            omega_min: 0.25 * wp,
            omega_max: 4.0 * wp,
            seed,
        }
    }

    pub fn peak_frequency(&self) -> f64 {
        2.0 * PI / self.tp
    }

    pub fn validate(&self) -> Result<(), WaveError> {
        let bad = |msg: &str| Err(WaveError::InvalidSpectrum(msg.to_owned()));
        if !(self.hs > 0.0 && self.hs.is_finite()) {
            return bad("hs must be positive");
        }
        if !(self.tp > 0.0 && self.tp.is_finite()) {
            return bad("tp must be positive");
        }
        if self.n_components < 2 {
            return bad("n_components must be at least 2");
        }
        if !(self.omega_min > 0.0 && self.omega_min < self.omega_max && self.omega_max.is_finite()) {
            return bad("frequency band must satisfy 0 < omega_min < omega_max");
        }
        Ok(())
    }
}

/// Two-parameter Pierson-Moskowitz density `S(w)` in m^2 s/rad.
///
/// `S(w) = 5/16 Hs^2 wp^4 w^-5 exp(-5/4 (wp/w)^4)` with `wp = 2 pi / Tp`.
/// Only `hs` and `tp` of `spec` are used, so a zero `hs` yields a zero density.
pub fn pm_density(omega: f64, spec: &SpectrumSpec) -> Result<f64, WaveError> {
    if !(omega > 0.0) {
        return Err(WaveError::NonPositiveFrequency(omega));
    }
    let wp = spec.peak_frequency();
    let ratio4 = (wp / omega).powi(4);
    let value = 5.0 / 16.0 * spec.hs * spec.hs * ratio4 / omega * (-1.25 * ratio4).exp();
    // w^-5 underflows to zero long before the product overflows.
    Ok(if value.is_finite() { value } else { 0.0 })
}

/// One harmonic of a realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveComponent {
    pub omega: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// Frozen superposition of harmonic components.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveRealization {
    pub components: Vec<WaveComponent>,
    /// Frequency spacing used to derive the amplitudes (0 for hand-built realizations).
    pub delta_omega: f64,
}

/// Anything that can report the free-surface elevation at time `t`.
pub trait SurfaceElevation {
    fn elevation(&self, t: f64) -> f64;
}

impl WaveRealization {
    pub fn from_components(components: Vec<WaveComponent>) -> Self {
        Self { components, delta_omega: 0.0 }
    }

    /// Zeroth spectral moment reconstructed from the amplitudes.
    pub fn m0(&self) -> f64 {
        self.components.iter().map(|c| 0.5 * c.amplitude * c.amplitude).sum()
    }

    /// `4 sqrt(m0)`.
    pub fn significant_height(&self) -> f64 {
        4.0 * self.m0().sqrt()
    }

    /// Upper bound on `|elevation(t)|`.
    pub fn amplitude_sum(&self) -> f64 {
        self.components.iter().map(|c| c.amplitude).sum()
    }

    /// Delimited `omega,density,amplitude` table of the discretized spectrum.
    pub fn spectrum_table(&self, spec: &SpectrumSpec) -> String {
        let mut out = String::from("omega,density,amplitude\n");
        for c in &self.components {
            let s = pm_density(c.omega, spec).unwrap_or(0.0);
            let _ = writeln!(out, "{},{},{}", c.omega, s, c.amplitude);
        }
        out
    }
}

impl SurfaceElevation for WaveRealization {
    fn elevation(&self, t: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.amplitude * (c.omega * t + c.phase).cos())
            .sum()
    }
}

/// Discretize `spec` into a realization.
///
/// Components sit at the midpoints of `n_components` equal bins spanning the
/// band; phases are uniform on `[0, 2 pi)` from a ChaCha8 stream seeded with
/// `spec.seed`.
pub fn realize(spec: &SpectrumSpec) -> Result<WaveRealization, WaveError> {
    spec.validate()?;
    let n = spec.n_components;
    let dw = (spec.omega_max - spec.omega_min) / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut components = Vec::with_capacity(n);
    for i in 0..n {
        let omega = spec.omega_min + (i as f64 + 0.5) * dw;
        let density = pm_density(omega, spec)?;
        let amplitude = (2.0 * density * dw).sqrt();
        let phase = rng.random_range(0.0..2.0 * PI);
        components.push(WaveComponent { omega, amplitude, phase });
    }
    Ok(WaveRealization { components, delta_omega: dw })
}

/// `eta(t) = sum a_i cos(w_i t + phi_i)`.
pub fn elevation(wr: &WaveRealization, t: f64) -> f64 {
    wr.elevation(t)
}

/// Linear excitation `F_e = Gamma * eta(t)` using the body's coefficient.
pub fn excitation_force<E: SurfaceElevation + ?Sized>(wave: &E, body: &BodyHydro, t: f64) -> f64 {
    body.excitation_coeff * wave.elevation(t)
}

/// Elevation sampled on a uniform grid, shared by every evaluation of one
/// simulation setup so the harmonic sum is computed once.
#[derive(Debug, Clone)]
pub struct SampledElevation {
    step: f64,
    samples: Vec<f64>,
}

impl SampledElevation {
    /// Samples `wr` at `k * step` for `k = 0..=n` where `n * step >= duration`.
    pub fn new(wr: &WaveRealization, step: f64, duration: f64) -> Self {
        let n = (duration / step).ceil() as usize + 1;
        let samples = (0..=n).map(|k| wr.elevation(k as f64 * step)).collect();
        Self { step, samples }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

impl SurfaceElevation for SampledElevation {
    /// Exact at grid points, linear in between, held constant past the end.
    fn elevation(&self, t: f64) -> f64 {
        let pos = (t / self.step).max(0.0);
        let k = pos.round();
        if (pos - k).abs() < 1e-9 {
            let k = (k as usize).min(self.samples.len() - 1);
            return self.samples[k];
        }
        let lo = (pos.floor() as usize).min(self.samples.len() - 1);
        let hi = (lo + 1).min(self.samples.len() - 1);
        let frac = pos - lo as f64;
        self.samples[lo] * (1.0 - frac) + self.samples[hi] * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn design_sea() -> SpectrumSpec {
        SpectrumSpec::with_default_band(4.06, 13.65, 7)
    }

    #[test]
    fn density_at_peak_matches_closed_form() {
        let spec = design_sea();
        let wp = 2.0 * PI / 13.65;
        // S(wp) = 5/16 Hs^2 / wp * e^(-5/4)
        let expected = 5.0 / 16.0 * 4.06_f64.powi(2) / wp * (-1.25_f64).exp();
        assert_relative_eq!(pm_density(wp, &spec).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn density_vanishes_at_extremes() {
        let spec = design_sea();
        assert!(pm_density(1e3, &spec).unwrap() < 1e-12);
        assert_eq!(pm_density(1e-3, &spec).unwrap(), 0.0);
        let mut calm = spec.clone();
        calm.hs = 0.0;
        for w in [0.1, 0.46, 2.0] {
            assert_eq!(pm_density(w, &calm).unwrap(), 0.0);
        }
    }

    #[test]
    fn density_rejects_non_positive_frequency() {
        let spec = design_sea();
        assert_eq!(pm_density(0.0, &spec), Err(WaveError::NonPositiveFrequency(0.0)));
        assert!(pm_density(-1.0, &spec).is_err());
    }

    #[test]
    fn realize_is_deterministic_and_preserves_count() {
        let spec = design_sea();
        assert_eq!(realize(&spec).unwrap(), realize(&spec).unwrap());
        let mut two = spec.clone();
        two.n_components = 2;
        assert_eq!(realize(&two).unwrap().components.len(), 2);
        let mut other = spec.clone();
        other.seed = 8;
        assert_ne!(realize(&spec).unwrap(), realize(&other).unwrap());
    }

    #[test]
    fn realization_invariants() {
        let wr = realize(&design_sea()).unwrap();
        for c in &wr.components {
            assert!(c.amplitude >= 0.0);
            assert!((0.0..2.0 * PI).contains(&c.phase));
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = design_sea();
        s.n_components = 1;
        assert!(realize(&s).is_err());
        let mut s = design_sea();
        s.omega_min = s.omega_max;
        assert!(realize(&s).is_err());
        let mut s = design_sea();
        s.hs = -1.0;
        assert!(realize(&s).is_err());
    }

    /// Composite Simpson over a fine grid, independent of the bin layout used
    /// by `realize`.
    fn m0_quadrature(spec: &SpectrumSpec) -> f64 {
        let n = 20_000;
        let h = (spec.omega_max - spec.omega_min) / n as f64;
        let f = |w: f64| pm_density(w, spec).unwrap();
        let mut sum = f(spec.omega_min) + f(spec.omega_max);
        for i in 1..n {
            let w = spec.omega_min + i as f64 * h;
            sum += if i % 2 == 1 { 4.0 * f(w) } else { 2.0 * f(w) };
        }
        sum * h / 3.0
    }

    #[test]
    fn spectral_fidelity() {
        let spec = SpectrumSpec { n_components: 200, ..design_sea() };
        let wr = realize(&spec).unwrap();
        let m0 = m0_quadrature(&spec);
        assert_relative_eq!(wr.m0(), m0, max_relative = 0.02);
        assert_relative_eq!(wr.significant_height(), 4.06, max_relative = 0.02);
    }

    #[test]
    fn elevation_single_components() {
        let one = |omega| {
            WaveRealization::from_components(vec![WaveComponent { omega, amplitude: 1.0, phase: 0.0 }])
        };
        assert_relative_eq!(elevation(&one(1.0), 0.0), 1.0);
        assert_relative_eq!(elevation(&one(PI), 1.0), -1.0);
    }

    #[test]
    fn elevation_matches_term_by_term_sum() {
        let comps = vec![
            WaveComponent { omega: 0.3, amplitude: 0.7, phase: 1.1 },
            WaveComponent { omega: 0.9, amplitude: 0.2, phase: 4.0 },
            WaveComponent { omega: 1.7, amplitude: 1.3, phase: 0.25 },
        ];
        let t = 2.5;
        let mut expected = 0.0;
        expected += 0.7 * (0.3 * t + 1.1_f64).cos();
        expected += 0.2 * (0.9 * t + 4.0_f64).cos();
        expected += 1.3 * (1.7 * t + 0.25_f64).cos();
        let wr = WaveRealization::from_components(comps);
        assert_relative_eq!(elevation(&wr, t), expected, max_relative = 1e-14);
    }

    #[test]
    fn elevation_bounded_by_amplitude_sum() {
        let wr = realize(&design_sea()).unwrap();
        let bound = wr.amplitude_sum();
        for k in 0..2000 {
            assert!(wr.elevation(k as f64 * 0.37).abs() <= bound);
        }
    }

    #[test]
    fn excitation_is_linear_in_elevation() {
        let mut body = BodyHydro::rm3_float();
        body.excitation_coeff = 0.0;
        let wr = realize(&design_sea()).unwrap();
        assert_eq!(excitation_force(&wr, &body, 37.0), 0.0);

        body.excitation_coeff = 2.0;
        let half = WaveRealization::from_components(vec![WaveComponent {
            omega: 1.0,
            amplitude: 0.5,
            phase: 0.0,
        }]);
        assert_relative_eq!(excitation_force(&half, &body, 0.0), 1.0);

        let mut float = BodyHydro::rm3_float();
        float.excitation_coeff = float.hydrostatic_stiffness;
        let expected = float.hydrostatic_stiffness * elevation(&wr, 150.0);
        assert_relative_eq!(excitation_force(&wr, &float, 150.0), expected, max_relative = 1e-15);
    }

    #[test]
    fn sampled_elevation_is_exact_on_grid() {
        let wr = realize(&design_sea()).unwrap();
        let sampled = SampledElevation::new(&wr, 0.005, 20.0);
        for k in [0usize, 1, 17, 4000] {
            let t = k as f64 * 0.005;
            assert_eq!(sampled.elevation(t), wr.elevation(t));
        }
    }

    #[test]
    fn spectrum_table_has_header_and_rows() {
        let spec = SpectrumSpec { n_components: 4, ..design_sea() };
        let table = realize(&spec).unwrap().spectrum_table(&spec);
        let lines: Vec<_> = table.lines().collect();
        assert_eq!(lines[0], "omega,density,amplitude");
        assert_eq!(lines.len(), 5);
    }
}
