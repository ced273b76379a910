//! Density matrices, reduced states and the figures of merit used in the
//! reports: fidelity against a pure target, linear entropy, and the
//! computational-basis outcome table.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    labels: Vec<String>,
    entries: DMatrix<C64>,
}

/// Result of [`DensityMatrix::check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityDiagnostics {
    pub hermiticity_error: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl DensityDiagnostics {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.hermiticity_error <= tol && self.trace_error <= tol && self.min_eigenvalue >= -1e-10
    }
}

impl DensityMatrix {
    pub fn new(labels: Vec<String>, entries: DMatrix<C64>) -> Result<Self> {
        let dim = 1usize << labels.len();
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: entries.nrows(),
            });
        }
        Ok(DensityMatrix { labels, entries })
    }

    /// `|ψ⟩⟨ψ|`
    pub fn from_state(state: &StateVector) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        DensityMatrix {
            labels: state.labels().to_vec(),
            entries: &v * v.adjoint(),
        }
    }

    pub fn maximally_mixed(labels: &[&str]) -> Self {
        let dim = 1usize << labels.len();
        DensityMatrix {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            entries: DMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// `ρ / Tr ρ`; unchanged when the trace vanishes.
    pub fn normalized(&self) -> Self {
        let t = self.trace().re;
        if t <= 0.0 {
            return self.clone();
        }
        DensityMatrix {
            labels: self.labels.clone(),
            entries: &self.entries / C64::new(t, 0.0),
        }
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn check(&self) -> DensityDiagnostics {
        let herm = (&self.entries - self.entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let trace_error = (self.trace() - C64::new(1.0, 0.0)).norm();
        let sym = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::new(sym);
        let min_eigenvalue = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        DensityDiagnostics {
            hermiticity_error: herm,
            trace_error,
            min_eigenvalue,
        }
    }

    /// Sums out every qubit not in `keep`. The kept qubits stay in register order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        for k in keep {
            if !self.labels.iter().any(|l| l == k) {
                return Err(Error::UnknownQubit(k.to_string()));
            }
        }
        let n = self.labels.len();
        let kept: Vec<usize> = (0..n)
            .filter(|&i| keep.contains(&self.labels[i].as_str()))
            .collect();
        let traced: Vec<usize> = (0..n).filter(|i| !kept.contains(i)).collect();
        let kept_pos: Vec<usize> = kept.iter().map(|&i| n - 1 - i).collect();
        let traced_pos: Vec<usize> = traced.iter().map(|&i| n - 1 - i).collect();
        let kd = 1usize << kept.len();
        let mut out = DMatrix::<C64>::zeros(kd, kd);
        for r in 0..kd {
            for c in 0..kd {
                let mut acc = C64::new(0.0, 0.0);
                for e in 0..(1usize << traced.len()) {
                    let row = compose(r, &kept_pos) | compose(e, &traced_pos);
                    let col = compose(c, &kept_pos) | compose(e, &traced_pos);
                    acc += self.entries[(row, col)];
                }
                out[(r, c)] = acc;
            }
        }
        Ok(DensityMatrix {
            labels: kept.iter().map(|&i| self.labels[i].clone()).collect(),
            entries: out,
        })
    }

    /// Probability of each computational basis string, most significant label first.
    pub fn logical_probabilities(&self) -> Vec<(String, f64)> {
        let n = self.labels.len();
        (0..self.dim())
            .map(|i| {
                (
                    format!("{:0width$b}", i, width = n),
                    self.entries[(i, i)].re,
                )
            })
            .collect()
    }
}

fn compose(sub: usize, positions: &[usize]) -> usize {
    let k = positions.len();
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &p)| acc | (((sub >> (k - 1 - j)) & 1) << p))
}

/// `⟨Ψ|ρ|Ψ⟩`.
pub fn fidelity(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    if rho.dim() != target.amplitudes().len() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: target.amplitudes().len(),
        });
    }
    if rho.labels() != target.labels() {
        return Err(Error::LabelMismatch(
            rho.labels().to_vec(),
            target.labels().to_vec(),
        ));
    }
    let v = nalgebra::DVector::from_column_slice(target.amplitudes());
    let f = (v.adjoint() * rho.entries() * &v)[(0, 0)];
    Ok(f.re.clamp(0.0, 1.0))
}

/// Normalized linear entropy `d/(d-1) (1 - Tr ρ²)`; for a single qubit this
/// is `2(1 - Tr ρ²)`, and it reaches 1 for any maximally mixed register.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    let d = rho.dim() as f64;
    d / (d - 1.0) * (1.0 - rho.purity())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ghz() -> StateVector {
        let mut a = vec![C64::new(0.0, 0.0); 8];
        a[0] = C64::new(-FRAC_1_SQRT_2, 0.0);
        a[7] = C64::new(0.0, FRAC_1_SQRT_2);
        StateVector::new(vec!["x0".into(), "y3".into(), "y1".into()], a).unwrap()
    }

    #[test]
    fn pure_state_fidelity_is_one() {
        let s = ghz();
        let rho = DensityMatrix::from_state(&s);
        assert!((fidelity(&rho, &s).unwrap() - 1.0).abs() < 1e-12);
        assert!(rho.check().is_valid(1e-12));
    }

    #[test]
    fn mixed_state_fidelity_is_one_eighth() {
        let rho = DensityMatrix::maximally_mixed(&["x0", "y3", "y1"]);
        assert!((fidelity(&rho, &ghz()).unwrap() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        let rho = DensityMatrix::maximally_mixed(&["x0"]);
        assert!(matches!(
            fidelity(&rho, &ghz()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ghz_marginal_is_maximally_mixed() {
        let rho = DensityMatrix::from_state(&ghz());
        let r = rho.partial_trace(&["x0"]).unwrap();
        assert!((r.entries()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((r.entries()[(1, 1)].re - 0.5).abs() < 1e-12);
        assert!(r.entries()[(0, 1)].norm() < 1e-12);
        assert!((linear_entropy(&r) - 1.0).abs() < 1e-12);
        let probs = r.logical_probabilities();
        assert_eq!(probs[0].0, "0");
        assert!((probs[0].1 - 0.5).abs() < 1e-12 && (probs[1].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = StateVector::new(
            vec!["a".into()],
            vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)],
        )
        .unwrap();
        let b = StateVector::new(
            vec!["b".into()],
            vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0)],
        )
        .unwrap();
        let rho = DensityMatrix::from_state(&a.tensor(&b).unwrap());
        let ra = rho.partial_trace(&["a"]).unwrap();
        let rb = rho.partial_trace(&["b"]).unwrap();
        assert!((ra.entries() - DensityMatrix::from_state(&a).entries()).norm() < 1e-12);
        assert!((rb.entries() - DensityMatrix::from_state(&b).entries()).norm() < 1e-12);
        assert!(linear_entropy(&ra).abs() < 1e-12);
    }

    #[test]
    fn empty_keep_set_rejected() {
        let rho = DensityMatrix::maximally_mixed(&["a", "b"]);
        assert!(matches!(rho.partial_trace(&[]), Err(Error::EmptyKeepSet)));
        assert!(matches!(
            rho.partial_trace(&["z"]),
            Err(Error::UnknownQubit(_))
        ));
    }

    #[test]
    fn two_qubit_entropy_normalization() {
        let rho = DensityMatrix::maximally_mixed(&["a", "b"]);
        assert!((linear_entropy(&rho) - 1.0).abs() < 1e-12);
    }
}
