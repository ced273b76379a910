//! Exact logical layer: state vectors, density matrices, the native gate
//! set and the compiled networks.

pub mod density;
pub mod gates;
pub mod networks;
pub mod state;

#[cfg(test)]
mod properties;

pub use density::{fidelity, linear_entropy, DensityMatrix};
pub use gates::{GateKind, GateSequence, GateSpec};
pub use state::StateVector;
