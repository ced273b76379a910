use serde::{Deserialize, Serialize};

use super::gates::{clear_bits, insert_bits, target_bits, GateSequence, GateSpec};
use crate::error::{Error, Result};
use crate::C64;

pub const MAX_QUBITS: usize = 4;

/// Pure logical state of a small register. Amplitude index bits follow the
/// label order: the first label is the most significant bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    labels: Vec<String>,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(labels: Vec<String>, amplitudes: Vec<C64>) -> Result<Self> {
        check_labels(&labels)?;
        let dim = 1usize << labels.len();
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "state is not normalized (squared norm {norm})"
            )));
        }
        Ok(StateVector { labels, amplitudes })
    }

    /// `|0…0⟩` on the given register.
    pub fn zero(labels: &[&str]) -> Result<Self> {
        Self::basis(labels, 0)
    }

    pub fn basis(labels: &[&str], index: usize) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        check_labels(&labels)?;
        let dim = 1usize << labels.len();
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range"
            )));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(StateVector { labels, amplitudes })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn n_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `gate` to the qubits it targets.
    pub fn apply_gate(&self, gate: &GateSpec) -> Result<Self> {
        gate.validate()?;
        let positions = target_bits(&gate.targets, &self.labels)?;
        let m = gate.matrix();
        let k = positions.len();
        let sub_dim = 1usize << k;
        let mut out = vec![C64::new(0.0, 0.0); self.amplitudes.len()];
        let mut block = vec![C64::new(0.0, 0.0); sub_dim];
        for base in 0..self.amplitudes.len() {
            if clear_bits(base, &positions) != base {
                continue;
            }
            for (s, b) in block.iter_mut().enumerate() {
                *b = self.amplitudes[insert_bits(base, s, &positions)];
            }
            for r in 0..sub_dim {
                let mut acc = C64::new(0.0, 0.0);
                for (s, b) in block.iter().enumerate() {
                    acc += m[(r, s)] * b;
                }
                out[insert_bits(base, r, &positions)] = acc;
            }
        }
        Ok(StateVector {
            labels: self.labels.clone(),
            amplitudes: out,
        })
    }

    pub fn run(&self, sequence: &GateSequence) -> Result<Self> {
        sequence.validate(&self.labels)?;
        sequence
            .gates
            .iter()
            .try_fold(self.clone(), |s, g| s.apply_gate(g))
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.labels != other.labels {
            return Err(Error::LabelMismatch(
                self.labels.clone(),
                other.labels.clone(),
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product with `self` as the more significant factor.
    pub fn tensor(&self, other: &StateVector) -> Result<Self> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        check_labels(&labels)?;
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * other.amplitudes.len());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(StateVector { labels, amplitudes })
    }

    /// Reorders the register to `order` (a permutation of the labels).
    pub fn permuted(&self, order: &[&str]) -> Result<Self> {
        let order: Vec<String> = order.iter().map(|s| s.to_string()).collect();
        if order.len() != self.labels.len() || !order.iter().all(|l| self.labels.contains(l)) {
            return Err(Error::LabelMismatch(self.labels.clone(), order));
        }
        let n = order.len();
        let src_pos: Vec<usize> = order
            .iter()
            .map(|l| n - 1 - self.labels.iter().position(|x| x == l).unwrap())
            .collect();
        let mut amplitudes = vec![C64::new(0.0, 0.0); self.amplitudes.len()];
        for (new_index, amp) in amplitudes.iter_mut().enumerate() {
            let mut old_index = 0;
            for (j, &p) in src_pos.iter().enumerate() {
                let bit = (new_index >> (n - 1 - j)) & 1;
                old_index |= bit << p;
            }
            *amp = self.amplitudes[old_index];
        }
        Ok(StateVector {
            labels: order,
            amplitudes,
        })
    }
}

fn check_labels(labels: &[String]) -> Result<()> {
    if labels.is_empty() || labels.len() > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "register must hold 1..={MAX_QUBITS} qubits, got {}",
            labels.len()
        )));
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::InvalidArgument(format!("duplicate label `{l}`")));
        }
    }
    Ok(())
}

/// Rotates the amplitudes so that the first one with magnitude above `1e-8`
/// is real and positive.
pub fn fix_global_phase(amplitudes: &[C64]) -> Vec<C64> {
    let phase = amplitudes
        .iter()
        .find(|a| a.norm() > 1e-8)
        .map(|a| a.conj() / a.norm())
        .unwrap_or(C64::new(1.0, 0.0));
    amplitudes.iter().map(|a| a * phase).collect()
}

/// Largest per-amplitude deviation after removing a single global phase.
pub fn distance_up_to_global_phase(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    fix_global_phase(a)
        .iter()
        .zip(fix_global_phase(b))
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn identity_gate_leaves_state() {
        let s = StateVector::zero(&["x0", "y0"]).unwrap();
        let out = s.apply_gate(&GateSpec::rx("x0", 0.0)).unwrap();
        assert_eq!(out.amplitudes(), s.amplitudes());
    }

    #[test]
    fn rx_embedding_on_first_qubit() {
        let s = StateVector::zero(&["x0", "y0"]).unwrap();
        let out = s.apply_gate(&GateSpec::rx("x0", PI / 2.0)).unwrap();
        let a = out.amplitudes();
        // |x0 y0⟩: index 0b00 and 0b10
        assert!((a[0] - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert!((a[2] - C64::new(0.0, FRAC_1_SQRT_2)).norm() < 1e-12);
        assert!(a[1].norm() < 1e-15 && a[3].norm() < 1e-15);
    }

    #[test]
    fn phase_flip_on_plus_state() {
        let s = StateVector::new(
            vec!["q".into()],
            vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)],
        )
        .unwrap();
        let out = s.apply_gate(&GateSpec::r1("q", PI)).unwrap();
        assert!((out.amplitudes()[1] + C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn t_pi_flips_only_the_01_amplitude_of_uniform_state() {
        let amp = C64::new(0.5, 0.0);
        let s = StateVector::new(vec!["x0".into(), "y0".into()], vec![amp; 4]).unwrap();
        let out = s.apply_gate(&GateSpec::t("x0", "y0", PI)).unwrap();
        let a = out.amplitudes();
        assert!((a[0] - amp).norm() < 1e-12);
        assert!((a[1] + amp).norm() < 1e-12);
        assert!((a[2] - amp).norm() < 1e-12);
        assert!((a[3] - amp).norm() < 1e-12);
    }

    #[test]
    fn unknown_target_is_an_error() {
        let s = StateVector::zero(&["x0"]).unwrap();
        assert!(matches!(
            s.apply_gate(&GateSpec::rx("y9", 1.0)),
            Err(Error::UnknownQubit(_))
        ));
    }

    #[test]
    fn rejects_unnormalized_and_oversized() {
        assert!(StateVector::new(vec!["a".into()], vec![C64::new(1.0, 0.0); 2]).is_err());
        assert!(StateVector::zero(&["a", "b", "c", "d", "e"]).is_err());
        assert!(StateVector::zero(&["a", "a"]).is_err());
    }

    #[test]
    fn permutation_moves_bits() {
        // |x=1, y=0⟩ → in order (y, x) it is index 0b01
        let s = StateVector::basis(&["x", "y"], 0b10).unwrap();
        let p = s.permuted(&["y", "x"]).unwrap();
        assert!((p.amplitudes()[0b01] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn global_phase_distance_ignores_global_phase_only() {
        let a = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let rot = C64::from_polar(1.0, 1.234);
        let b: Vec<C64> = a.iter().map(|x| x * rot).collect();
        assert!(distance_up_to_global_phase(&a, &b) < 1e-14);
        let c = vec![C64::new(0.6, 0.0), C64::new(0.0, -0.8)];
        assert!(distance_up_to_global_phase(&a, &c) > 1.0);
    }
}
