//! Physical layer: SAW-driven wavepackets in pairs of quantum wires,
//! propagated with Crank–Nicolson steps in a window that moves with the wave.

pub mod cn;
pub mod dense;
pub mod device;
pub mod grid;
pub mod material;
pub mod network;
pub mod orbital;
pub mod settings;
pub mod state;

#[cfg(test)]
mod closed_form;

pub use device::{BarrierSpec, CouplerSpec, DeviceLayout, PotentialStack};
pub use material::{MaterialParams, SawPotential};
pub use network::{run_physical_network, NetworkMode, PhysicalRun, PhysicalState};
pub use settings::{GridSettings, SimSettings};
pub use state::{extract_phase, SemiOneDState};
