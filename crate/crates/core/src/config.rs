//! JSON run configuration. Every field is optional and falls back to the
//! GaAs / default-SAW / 1 nm grid values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibrate::SweepGrid;
use crate::error::{Error, Result};
use crate::wavesim::device::{BarrierGeometry, CouplerGeometry};
use crate::wavesim::{DeviceLayout, GridSettings, MaterialParams, SawPotential, SimSettings};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Material given by mass and permittivity; the prefactors are derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub effective_mass: f64,
    pub rel_permittivity: f64,
    /// Switches the Coulomb interaction off.
    #[serde(default)]
    pub disable_coulomb: bool,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        let m = MaterialParams::gaas();
        MaterialConfig {
            effective_mass: m.effective_mass,
            rel_permittivity: m.rel_permittivity,
            disable_coulomb: false,
        }
    }
}

impl MaterialConfig {
    pub fn params(&self) -> Result<MaterialParams> {
        let m = MaterialParams::new(self.effective_mass, self.rel_permittivity)?;
        Ok(if self.disable_coulomb {
            m.without_coulomb()
        } else {
            m
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSweep {
    pub grid: SweepGrid,
    pub base: BarrierGeometry,
    #[serde(default)]
    pub wire: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplerSweep {
    pub grid: SweepGrid,
    pub base: CouplerGeometry,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    #[serde(default)]
    pub barrier: Option<BarrierSweep>,
    #[serde(default)]
    pub coupler: Option<CouplerSweep>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub material: MaterialConfig,
    #[serde(default)]
    pub saw: SawPotential,
    #[serde(default)]
    pub grid: GridSettings,
    /// Required by physical runs.
    #[serde(default)]
    pub device: Option<DeviceLayout>,
    #[serde(default)]
    pub calibration: Option<CalibrationConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            material: MaterialConfig::default(),
            saw: SawPotential::default(),
            grid: GridSettings::default(),
            device: None,
            calibration: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text)?;
        if c.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported config schema version {} (expected {CONFIG_SCHEMA_VERSION})",
                c.schema_version
            )));
        }
        c.settings()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn settings(&self) -> Result<SimSettings> {
        let s = SimSettings {
            material: self.material.params()?,
            saw: self.saw.clone(),
            grid: self.grid.clone(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn layout(&self) -> Result<&DeviceLayout> {
        self.device.as_ref().ok_or(Error::MissingLayout)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_json(r#"{"schema_version": 1}"#).unwrap();
        assert_eq!(c.settings().unwrap(), SimSettings::default());
        assert!(matches!(c.layout(), Err(Error::MissingLayout)));
    }

    #[test]
    fn round_trip_with_device() {
        let c = RunConfig {
            device: Some(DeviceLayout::reference()),
            ..Default::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn bad_version_and_fields_rejected() {
        assert!(RunConfig::from_json(r#"{"schema_version": 2}"#).is_err());
        assert!(RunConfig::from_json(r#"{"schema_version": 1, "gird": {}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"schema_version": 1, "grid": {"points": 100}}"#).is_err());
    }
}
