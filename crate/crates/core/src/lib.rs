//! Simulator of the compiled N = 15 order-finding circuits on flying
//! electron qubits carried by a surface acoustic wave.

pub mod calibrate;
pub mod classical;
pub mod config;
pub mod error;
pub mod qlogic;
pub mod report;
pub mod verify;
pub mod wavesim;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
