//! Native gate set of the quantum-wire architecture.
//!
//! All matrices are written in the computational basis of the gate's
//! targets, with the first target as the most significant bit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    /// Beam splitter.
    #[serde(rename = "RX")]
    Rx,
    /// Phase shifter in wire 0.
    #[serde(rename = "R0")]
    R0,
    /// Phase shifter in wire 1.
    #[serde(rename = "R1")]
    R1,
    /// Coulomb conditional phase.
    #[serde(rename = "T")]
    T,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::T => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "RX",
            GateKind::R0 => "R0",
            GateKind::R1 => "R1",
            GateKind::T => "T",
        }
    }
}

/// `[[cos θ/2, i sin θ/2], [i sin θ/2, cos θ/2]]`
pub fn make_rx(theta: f64) -> DMatrix<C64> {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = C64::new(0.0, (theta / 2.0).sin());
    DMatrix::from_row_slice(2, 2, &[c, s, s, c])
}

/// Diagonal phase shifter: `e^{iφ}` on the selected wire, 1 on the other.
pub fn make_phase(wire: u8, phi: f64) -> DMatrix<C64> {
    let mut m = DMatrix::identity(2, 2);
    m[(wire as usize, wire as usize)] = C64::from_polar(1.0, phi);
    m
}

/// Index (in the `|ab⟩` basis, `a` most significant) of the component that
/// the conditional phase gate multiplies by `e^{iγ}`.
pub const T_PHASED_COMPONENT: usize = 0b01;

/// Conditional phase gate on an ordered pair `(a, b)`: `diag(1, e^{iγ}, 1, 1)`,
/// i.e. only the `a = 0, b = 1` component is phased.
pub fn make_t(gamma: f64) -> DMatrix<C64> {
    let mut m = DMatrix::identity(4, 4);
    m[(T_PHASED_COMPONENT, T_PHASED_COMPONENT)] = C64::from_polar(1.0, gamma);
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: GateKind,
    pub angle: f64,
    pub targets: Vec<String>,
}

impl GateSpec {
    pub fn new(kind: GateKind, angle: f64, targets: Vec<String>) -> Result<Self> {
        let gate = GateSpec {
            kind,
            angle,
            targets,
        };
        gate.validate()?;
        Ok(gate)
    }

    pub fn rx(target: &str, theta: f64) -> Self {
        GateSpec {
            kind: GateKind::Rx,
            angle: theta,
            targets: vec![target.to_string()],
        }
    }

    pub fn r0(target: &str, phi: f64) -> Self {
        GateSpec {
            kind: GateKind::R0,
            angle: phi,
            targets: vec![target.to_string()],
        }
    }

    pub fn r1(target: &str, phi: f64) -> Self {
        GateSpec {
            kind: GateKind::R1,
            angle: phi,
            targets: vec![target.to_string()],
        }
    }

    pub fn t(a: &str, b: &str, gamma: f64) -> Self {
        GateSpec {
            kind: GateKind::T,
            angle: gamma,
            targets: vec![a.to_string(), b.to_string()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.angle.is_finite() {
            return Err(Error::InvalidGate(format!(
                "{} angle is not finite",
                self.kind.name()
            )));
        }
        if self.targets.len() != self.kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{} expects {} target(s), got {}",
                self.kind.name(),
                self.kind.arity(),
                self.targets.len()
            )));
        }
        if self.kind == GateKind::T && self.targets[0] == self.targets[1] {
            return Err(Error::InvalidGate(
                "T targets must be two distinct qubits".into(),
            ));
        }
        Ok(())
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        match self.kind {
            GateKind::Rx => make_rx(self.angle),
            GateKind::R0 => make_phase(0, self.angle),
            GateKind::R1 => make_phase(1, self.angle),
            GateKind::T => make_t(self.angle),
        }
    }
}

/// Ordered gate list; the first listed gate acts first.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GateSequence {
    pub gates: Vec<GateSpec>,
}

impl GateSequence {
    pub fn new(gates: Vec<GateSpec>) -> Self {
        GateSequence { gates }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// Checks every gate and that all targets belong to `labels`.
    pub fn validate(&self, labels: &[String]) -> Result<()> {
        for gate in &self.gates {
            gate.validate()?;
            for t in &gate.targets {
                if !labels.contains(t) {
                    return Err(Error::UnknownQubit(t.clone()));
                }
            }
        }
        Ok(())
    }

    /// Full unitary on the register `labels` (first label most significant).
    pub fn unitary(&self, labels: &[String]) -> Result<DMatrix<C64>> {
        self.validate(labels)?;
        let dim = 1usize << labels.len();
        let mut u = DMatrix::<C64>::identity(dim, dim);
        for gate in &self.gates {
            u = embed(&gate.matrix(), &gate.targets, labels)? * u;
        }
        Ok(u)
    }
}

/// Embeds a gate matrix acting on `targets` into the full register.
pub fn embed(gate: &DMatrix<C64>, targets: &[String], labels: &[String]) -> Result<DMatrix<C64>> {
    let n = labels.len();
    let dim = 1usize << n;
    let positions = target_bits(targets, labels)?;
    let k = positions.len();
    if gate.nrows() != 1 << k {
        return Err(Error::DimensionMismatch {
            expected: 1 << k,
            found: gate.nrows(),
        });
    }
    let mut full = DMatrix::<C64>::zeros(dim, dim);
    for col in 0..dim {
        let sub_col = extract_bits(col, &positions);
        let base = clear_bits(col, &positions);
        for sub_row in 0..(1 << k) {
            let entry = gate[(sub_row, sub_col)];
            if entry != C64::new(0.0, 0.0) {
                full[(insert_bits(base, sub_row, &positions), col)] = entry;
            }
        }
    }
    Ok(full)
}

/// Bit positions (from the least significant end) of each target, in target order.
pub(crate) fn target_bits(targets: &[String], labels: &[String]) -> Result<Vec<usize>> {
    let n = labels.len();
    targets
        .iter()
        .map(|t| {
            labels
                .iter()
                .position(|l| l == t)
                .map(|i| n - 1 - i)
                .ok_or_else(|| Error::UnknownQubit(t.clone()))
        })
        .collect()
}

/// Packs the bits of `index` at `positions` into a sub-index, first position most significant.
pub(crate) fn extract_bits(index: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .fold(0, |acc, &p| (acc << 1) | ((index >> p) & 1))
}

pub(crate) fn clear_bits(index: usize, positions: &[usize]) -> usize {
    positions.iter().fold(index, |acc, &p| acc & !(1 << p))
}

pub(crate) fn insert_bits(base: usize, sub: usize, positions: &[usize]) -> usize {
    let k = positions.len();
    positions.iter().enumerate().fold(base, |acc, (j, &p)| {
        let bit = (sub >> (k - 1 - j)) & 1;
        acc | (bit << p)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn rx_zero_is_identity() {
        let m = make_rx(0.0);
        assert!((m - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn rx_half_pi_and_pi_on_zero() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = make_rx(PI / 2.0);
        assert!(close(m[(0, 0)], C64::new(s, 0.0)));
        assert!(close(m[(1, 0)], C64::new(0.0, s)));
        let m = make_rx(PI);
        assert!(close(m[(0, 0)], C64::new(0.0, 0.0)));
        assert!(close(m[(1, 0)], C64::new(0.0, 1.0)));
    }

    #[test]
    fn phase_shifters() {
        assert!((make_phase(0, 0.0) - DMatrix::identity(2, 2)).norm() < 1e-15);
        let m = make_phase(1, PI);
        assert!(close(m[(1, 1)], C64::new(-1.0, 0.0)));
        assert!(close(m[(0, 0)], C64::new(1.0, 0.0)));
        let m = make_phase(0, 0.92 * PI);
        assert!(close(m[(0, 0)], C64::from_polar(1.0, 0.92 * PI)));
        assert!(close(m[(1, 1)], C64::new(1.0, 0.0)));
    }

    #[test]
    fn t_gate_phases_only_the_01_component() {
        assert!((make_t(0.0) - DMatrix::identity(4, 4)).norm() < 1e-15);
        let m = make_t(0.88 * PI);
        for i in 0..4 {
            let expected = if i == 1 {
                C64::from_polar(1.0, 0.88 * PI)
            } else {
                C64::new(1.0, 0.0)
            };
            assert!(close(m[(i, i)], expected));
        }
    }

    #[test]
    fn gate_spec_arity_checks() {
        assert!(GateSpec::new(GateKind::T, PI, vec!["a".into()]).is_err());
        assert!(GateSpec::new(GateKind::T, PI, vec!["a".into(), "a".into()]).is_err());
        assert!(GateSpec::new(GateKind::Rx, PI, vec!["a".into(), "b".into()]).is_err());
        assert!(GateSpec::new(GateKind::R0, f64::NAN, vec!["a".into()]).is_err());
        assert!(GateSpec::new(GateKind::T, PI, vec!["a".into(), "b".into()]).is_ok());
    }

    #[test]
    fn bit_helpers_roundtrip() {
        let positions = [3, 0];
        for idx in 0..16 {
            let sub = extract_bits(idx, &positions);
            let base = clear_bits(idx, &positions);
            assert_eq!(insert_bits(base, sub, &positions), idx);
        }
    }

    #[test]
    fn embedding_respects_target_order() {
        let labels: Vec<String> = vec!["a".into(), "b".into()];
        let u_ab = embed(&make_t(PI), &["a".into(), "b".into()], &labels).unwrap();
        let u_ba = embed(&make_t(PI), &["b".into(), "a".into()], &labels).unwrap();
        // (a=0,b=1) is basis index 1; (a=1,b=0) is index 2.
        assert!(close(u_ab[(1, 1)], C64::new(-1.0, 0.0)));
        assert!(close(u_ba[(2, 2)], C64::new(-1.0, 0.0)));
        assert!(close(u_ba[(1, 1)], C64::new(1.0, 0.0)));
    }
}
