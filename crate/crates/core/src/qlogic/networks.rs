//! The two compiled order-finding networks for N = 15, their expected
//! outputs, and the native-gate decompositions of H and CNOT.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;

use super::gates::{GateSequence, GateSpec};
use super::state::StateVector;
use crate::C64;

/// Register of the C = 11 network, most significant first.
pub const C11_REGISTER: [&str; 3] = ["x0", "y3", "y1"];
/// Register of the C = 2 network, most significant first.
pub const C2_REGISTER: [&str; 4] = ["x1", "x0", "y1", "y0"];

pub const C11_ARGUMENT: [&str; 1] = ["x0"];
pub const C2_ARGUMENT: [&str; 2] = ["x1", "x0"];

/// Delay phase of the fabricated phase shifters.
pub const DETUNED_PHI: f64 = 0.92 * PI;
/// Conditional phase of the fabricated Coulomb couplers.
pub const DETUNED_GAMMA: f64 = 0.88 * PI;

/// C = 11 network with phase-shifter angle `phi` and coupler angle `gamma`.
pub fn network_c11_with(phi: f64, gamma: f64) -> GateSequence {
    let h = PI / 2.0;
    GateSequence::new(vec![
        GateSpec::rx("x0", h),
        GateSpec::rx("y1", h),
        GateSpec::t("x0", "y1", gamma),
        GateSpec::rx("y1", h),
        GateSpec::rx("y3", h),
        GateSpec::r0("y3", phi),
        GateSpec::t("y3", "x0", gamma),
        GateSpec::r1("x0", phi),
        GateSpec::rx("y3", h),
    ])
}

pub fn network_c11() -> GateSequence {
    network_c11_with(PI, PI)
}

/// C = 2 network with coupler angle `gamma`.
pub fn network_c2_with(gamma: f64) -> GateSequence {
    let h = PI / 2.0;
    GateSequence::new(vec![
        GateSpec::rx("x0", h),
        GateSpec::rx("y0", h),
        GateSpec::rx("x1", h),
        GateSpec::rx("y1", h),
        GateSpec::t("x0", "y0", gamma),
        GateSpec::t("x1", "y1", gamma),
        GateSpec::rx("y0", h),
        GateSpec::rx("y1", h),
    ])
}

pub fn network_c2() -> GateSequence {
    network_c2_with(PI)
}

/// `(−|000⟩ + i|111⟩)/√2` on [`C11_REGISTER`].
pub fn ghz_target() -> StateVector {
    let mut a = vec![C64::new(0.0, 0.0); 8];
    a[0] = C64::new(-FRAC_1_SQRT_2, 0.0);
    a[7] = C64::new(0.0, FRAC_1_SQRT_2);
    StateVector::new(labels(&C11_REGISTER), a).expect("normalized")
}

/// `½(|00⟩ − |11⟩)_{x1 y1} (|00⟩ − |11⟩)_{x0 y0}` on [`C2_REGISTER`].
pub fn bell_product_target() -> StateVector {
    let mut a = vec![C64::new(0.0, 0.0); 16];
    for x1 in 0..2usize {
        for x0 in 0..2usize {
            let sign = if (x1 ^ x0) == 1 { -0.5 } else { 0.5 };
            // order x1 x0 y1 y0 with y1 = x1, y0 = x0
            a[(x1 << 3) | (x0 << 2) | (x1 << 1) | x0] = C64::new(sign, 0.0);
        }
    }
    StateVector::new(labels(&C2_REGISTER), a).expect("normalized")
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// `H = R_0(3π/2) R_x(π/2) R_0(π/2) R_1(π)` on qubit `q`, listed as printed.
pub fn hadamard_decomposition() -> GateSequence {
    GateSequence::new(vec![
        GateSpec::r0("q", 3.0 * PI / 2.0),
        GateSpec::rx("q", PI / 2.0),
        GateSpec::r0("q", PI / 2.0),
        GateSpec::r1("q", PI),
    ])
}

/// CNOT with control `c` and target `t`, listed as printed. The conditional
/// phase acts on the (control = 1, target = 0) component, which in the
/// (a = 0, b = 1) convention of [`super::gates::make_t`] is the pair `(t, c)`.
pub fn cnot_decomposition() -> GateSequence {
    GateSequence::new(vec![
        GateSpec::r0("t", 3.0 * PI / 2.0),
        GateSpec::rx("t", 3.0 * PI / 2.0),
        GateSpec::t("t", "c", PI),
        GateSpec::rx("t", PI / 2.0),
        GateSpec::r0("t", PI / 2.0),
        GateSpec::r1("c", PI),
    ])
}

pub fn hadamard() -> DMatrix<C64> {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    DMatrix::from_row_slice(2, 2, &[s, s, s, -s])
}

/// CNOT on `(c, t)` with `c` most significant.
pub fn cnot() -> DMatrix<C64> {
    let o = C64::new(1.0, 0.0);
    let z = C64::new(0.0, 0.0);
    DMatrix::from_row_slice(4, 4, &[o, z, z, z, z, o, z, z, z, z, z, o, z, z, o, z])
}

/// Diagonal phases with `actual = diag(left) · ideal · diag(right)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCorrections {
    pub left: Vec<C64>,
    pub right: Vec<C64>,
}

impl PhaseCorrections {
    pub fn is_identity(&self, tol: f64) -> bool {
        // a global phase can sit in either factor; compare the products
        let g = self.left[0] * self.right[0];
        self.left
            .iter()
            .all(|l| self.right.iter().all(|r| (l * r - g).norm() < tol))
    }
}

/// Finds unit-modulus diagonal corrections relating `actual` to `ideal`, or
/// `None` when the magnitudes differ or no consistent phases exist.
pub fn phase_equivalence(
    actual: &DMatrix<C64>,
    ideal: &DMatrix<C64>,
    tol: f64,
) -> Option<PhaseCorrections> {
    let n = ideal.nrows();
    if actual.shape() != ideal.shape() || ideal.ncols() != n {
        return None;
    }
    for (a, b) in actual.iter().zip(ideal.iter()) {
        if (a.norm() - b.norm()).abs() > tol {
            return None;
        }
    }
    let mut left: Vec<Option<C64>> = vec![None; n];
    let mut right: Vec<Option<C64>> = vec![None; n];
    // spread phases over the bipartite graph of nonzero entries
    for start in 0..n {
        if right[start].is_some() {
            continue;
        }
        right[start] = Some(C64::new(1.0, 0.0));
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..n {
                for j in 0..n {
                    let v = ideal[(i, j)];
                    if v.norm() <= tol {
                        continue;
                    }
                    let ratio = actual[(i, j)] / v;
                    match (left[i], right[j]) {
                        (None, Some(r)) => {
                            left[i] = Some(ratio / r);
                            changed = true;
                        }
                        (Some(l), None) => {
                            right[j] = Some(ratio / l);
                            changed = true;
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    let one = C64::new(1.0, 0.0);
    let left: Vec<C64> = left.into_iter().map(|x| x.unwrap_or(one)).collect();
    let right: Vec<C64> = right.into_iter().map(|x| x.unwrap_or(one)).collect();
    for i in 0..n {
        for j in 0..n {
            if (actual[(i, j)] - left[i] * ideal[(i, j)] * right[j]).norm() > tol {
                return None;
            }
        }
    }
    Some(PhaseCorrections { left, right })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlogic::gates::GateKind;
    use crate::qlogic::state::distance_up_to_global_phase;

    #[test]
    fn c11_network_shape() {
        let net = network_c11();
        assert_eq!(net.len(), 9);
        assert_eq!(net.count(GateKind::T), 2);
        assert!(net.validate(&labels(&C11_REGISTER)).is_ok());
    }

    #[test]
    fn c11_reaches_ghz() {
        let out = StateVector::zero(&C11_REGISTER)
            .unwrap()
            .run(&network_c11())
            .unwrap();
        let d = distance_up_to_global_phase(out.amplitudes(), ghz_target().amplitudes());
        assert!(d < 1e-10, "distance {d}");
    }

    #[test]
    fn c2_reaches_bell_product() {
        let out = StateVector::zero(&C2_REGISTER)
            .unwrap()
            .run(&network_c2())
            .unwrap();
        let d = distance_up_to_global_phase(out.amplitudes(), bell_product_target().amplitudes());
        assert!(d < 1e-10, "distance {d}");
    }

    #[test]
    fn c2_pair_blocks_commute() {
        let g = network_c2().gates;
        let swapped = GateSequence::new(vec![
            g[2].clone(),
            g[3].clone(),
            g[0].clone(),
            g[1].clone(),
            g[5].clone(),
            g[4].clone(),
            g[7].clone(),
            g[6].clone(),
        ]);
        let z = StateVector::zero(&C2_REGISTER).unwrap();
        let a = z.run(&network_c2()).unwrap();
        let b = z.run(&swapped).unwrap();
        assert!(distance_up_to_global_phase(a.amplitudes(), b.amplitudes()) < 1e-14);
    }

    #[test]
    fn hadamard_decomposition_matches_up_to_phases() {
        let u = hadamard_decomposition().unitary(&["q".into()]).unwrap();
        for z in u.iter() {
            assert!((z.norm() - FRAC_1_SQRT_2).abs() < 1e-12);
        }
        let corr = phase_equivalence(&u, &hadamard(), 1e-12).expect("equivalent");
        assert!(!corr.is_identity(1e-9));
    }

    #[test]
    fn cnot_decomposition_matches_up_to_phases() {
        let u = cnot_decomposition()
            .unitary(&["c".into(), "t".into()])
            .unwrap();
        assert!(phase_equivalence(&u, &cnot(), 1e-12).is_some());
    }

    #[test]
    fn checker_on_identical_matrices() {
        let corr = phase_equivalence(&hadamard(), &hadamard(), 1e-12).unwrap();
        assert!(corr.is_identity(1e-12));
        assert!(phase_equivalence(&hadamard(), &cnot(), 1e-12).is_none());
    }
}
