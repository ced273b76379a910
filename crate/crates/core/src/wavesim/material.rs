use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, meV·ps.
pub const HBAR: f64 = 0.6582119569;
/// `ħ²/(2 m_e)`, meV·nm².
pub const HBAR2_OVER_2ME: f64 = 38.0998212;
/// `e²/(4π ε₀)`, meV·nm.
pub const E2_OVER_4PI_EPS0: f64 = 1439.96448;

/// Material constants in meV, nm and ps units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub effective_mass: f64,
    pub rel_permittivity: f64,
    pub hbar: f64,
    /// `ħ²/(2 m*)`
    pub kinetic_prefactor: f64,
    /// `e²/(4π ε₀ ε_r)`
    pub coulomb_prefactor: f64,
}

impl MaterialParams {
    pub fn new(effective_mass: f64, rel_permittivity: f64) -> Result<Self> {
        if !(effective_mass > 0.0 && rel_permittivity > 0.0) {
            return Err(Error::InvalidArgument(
                "effective mass and permittivity must be positive".into(),
            ));
        }
        Ok(MaterialParams {
            effective_mass,
            rel_permittivity,
            hbar: HBAR,
            kinetic_prefactor: HBAR2_OVER_2ME / effective_mass,
            coulomb_prefactor: E2_OVER_4PI_EPS0 / rel_permittivity,
        })
    }

    /// GaAs: `m* = 0.067`, `ε_r = 12.9`.
    pub fn gaas() -> Self {
        Self::new(0.067, 12.9).expect("positive constants")
    }

    /// Same constants with the Coulomb interaction switched off.
    pub fn without_coulomb(&self) -> Self {
        MaterialParams {
            coulomb_prefactor: 0.0,
            ..self.clone()
        }
    }

    /// Checks that the prefactors agree with the mass and permittivity
    /// within `1e-6` relative. A zero Coulomb prefactor is accepted.
    pub fn validate(&self) -> Result<()> {
        let k = HBAR2_OVER_2ME / self.effective_mass;
        let c = E2_OVER_4PI_EPS0 / self.rel_permittivity;
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        if rel(self.kinetic_prefactor, k) > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "kinetic prefactor {} inconsistent with m*={} (expected {k})",
                self.kinetic_prefactor, self.effective_mass
            )));
        }
        if self.coulomb_prefactor != 0.0 && rel(self.coulomb_prefactor, c) > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "Coulomb prefactor {} inconsistent with eps_r={} (expected {c})",
                self.coulomb_prefactor, self.rel_permittivity
            )));
        }
        if (self.hbar - HBAR).abs() > 1e-12 {
            return Err(Error::InvalidArgument("hbar must be in meV ps".into()));
        }
        Ok(())
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self::gaas()
    }
}

/// Travelling wave `V(y, t) = −A cos(2π(y − v t)/λ − φ₀)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SawPotential {
    /// meV
    pub amplitude: f64,
    /// nm
    pub wavelength: f64,
    /// nm/ps
    pub velocity: f64,
    /// rad
    pub phase_origin: f64,
}

impl Default for SawPotential {
    fn default() -> Self {
        SawPotential {
            amplitude: 20.0,
            wavelength: 200.0,
            velocity: 3.3,
            phase_origin: 0.0,
        }
    }
}

impl SawPotential {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.wavelength > 0.0 && self.velocity > 0.0) {
            return Err(Error::InvalidArgument(
                "SAW amplitude, wavelength and velocity must be positive".into(),
            ));
        }
        if !self.phase_origin.is_finite() {
            return Err(Error::InvalidArgument(
                "SAW phase origin must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn value(&self, y: f64, t: f64) -> f64 {
        -self.amplitude * (self.wavenumber() * (y - self.velocity * t) - self.phase_origin).cos()
    }

    /// Position of minimum number `index` at time `t`.
    pub fn minimum(&self, index: i64, t: f64) -> f64 {
        self.velocity * t + self.wavelength * (self.phase_origin / (2.0 * PI) + index as f64)
    }

    /// Index of the minimum closest to `y` at time `t`.
    pub fn nearest_minimum(&self, y: f64, t: f64) -> i64 {
        ((y - self.minimum(0, t)) / self.wavelength).round() as i64
    }

    /// `V''` at a minimum: `A (2π/λ)²`.
    pub fn curvature(&self) -> f64 {
        self.amplitude * self.wavenumber().powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaas_prefactors() {
        let m = MaterialParams::gaas();
        assert!((m.kinetic_prefactor - 568.654).abs() < 1e-3);
        assert!((m.coulomb_prefactor - 111.625).abs() < 1e-3);
        m.validate().unwrap();
        let mut bad = m.clone();
        bad.kinetic_prefactor *= 1.01;
        assert!(bad.validate().is_err());
        m.without_coulomb().validate().unwrap();
    }

    #[test]
    fn saw_minimum_moves_with_velocity() {
        let saw = SawPotential {
            phase_origin: 0.7,
            ..Default::default()
        };
        for t in [0.0, 3.0, 17.5] {
            let y = saw.minimum(2, t);
            assert!((saw.value(y, t) + saw.amplitude).abs() < 1e-9);
            assert_eq!(saw.nearest_minimum(y + 10.0, t), 2);
        }
        assert!((saw.minimum(0, 10.0) - saw.minimum(0, 0.0) - 33.0).abs() < 1e-12);
    }

    #[test]
    fn curvature_of_default_wave() {
        let saw = SawPotential::default();
        assert!((saw.curvature() - 0.019739).abs() < 1e-6);
    }
}
