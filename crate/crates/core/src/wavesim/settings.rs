use serde::{Deserialize, Serialize};

use super::cn::CnParams;
use super::material::{MaterialParams, SawPotential};
use crate::error::{Error, Result};

/// Discretization and low-rank controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    /// Window points per particle.
    pub points: usize,
    /// nm
    pub spacing: f64,
    /// ps
    pub dt: f64,
    /// Largest number of product terms kept per pair-wavefunction split.
    pub rank_cap: usize,
    /// Largest discarded fraction of a pair wavefunction's squared norm.
    pub truncation_tol: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            points: 256,
            spacing: 1.0,
            dt: 0.005,
            rank_cap: 8,
            truncation_tol: 1e-6,
        }
    }
}

impl GridSettings {
    /// Same physical window on a 2 nm grid.
    pub fn coarse() -> Self {
        GridSettings {
            points: 128,
            spacing: 2.0,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub material: MaterialParams,
    pub saw: SawPotential,
    pub grid: GridSettings,
}

impl SimSettings {
    pub fn coarse() -> Self {
        SimSettings {
            grid: GridSettings::coarse(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        self.saw.validate()?;
        let g = &self.grid;
        if g.points < 3 || !(g.spacing > 0.0) || !(g.dt > 0.0) {
            return Err(Error::InvalidArgument(
                "grid needs >= 3 points, positive spacing and positive dt".into(),
            ));
        }
        if g.rank_cap == 0 || !(g.truncation_tol > 0.0 && g.truncation_tol < 1.0) {
            return Err(Error::InvalidArgument(
                "rank cap must be >= 1 and truncation tolerance in (0, 1)".into(),
            ));
        }
        let span = g.points as f64 * g.spacing;
        if span < self.saw.wavelength {
            return Err(Error::WindowTooSmall {
                span,
                wavelength: self.saw.wavelength,
            });
        }
        Ok(())
    }

    pub fn cn(&self) -> Result<CnParams> {
        CnParams::new(&self.material, self.grid.spacing, self.grid.dt)
    }
}
