//! Randomized checks of the gate engine invariants.

use crate::qlogic::gates::{make_phase, make_rx, make_t};
use crate::qlogic::{fidelity, linear_entropy, DensityMatrix, GateSequence, GateSpec, StateVector};
use crate::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;

const LABELS: [&str; 3] = ["q0", "q1", "q2"];

fn unitarity_error(u: &DMatrix<C64>) -> f64 {
    let id = DMatrix::<C64>::identity(u.nrows(), u.ncols());
    (u.adjoint() * u - id)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn gate_strategy() -> impl Strategy<Value = GateSpec> {
    (0usize..4, 0usize..3, 1usize..3, -10.0f64..10.0).prop_map(|(kind, a, off, angle)| {
        let q = LABELS[a];
        let r = LABELS[(a + off) % 3];
        match kind {
            0 => GateSpec::rx(q, angle),
            1 => GateSpec::r0(q, angle),
            2 => GateSpec::r1(q, angle),
            _ => GateSpec::t(q, r, angle),
        }
    })
}

fn random_state(gates: Vec<GateSpec>) -> StateVector {
    StateVector::zero(&LABELS)
        .unwrap()
        .run(&GateSequence::new(gates))
        .unwrap()
}

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn gate_matrices_are_unitary(angle in -20.0f64..20.0) {
        prop_assert!(unitarity_error(&make_rx(angle)) < 1e-12);
        prop_assert!(unitarity_error(&make_phase(0, angle)) < 1e-12);
        prop_assert!(unitarity_error(&make_phase(1, angle)) < 1e-12);
        prop_assert!(unitarity_error(&make_t(angle)) < 1e-12);
    }

    #[test]
    fn networks_preserve_the_norm(gates in prop::collection::vec(gate_strategy(), 0..60)) {
        let s = random_state(gates);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn network_unitary_matches_gate_by_gate_run(gates in prop::collection::vec(gate_strategy(), 1..12)) {
        let labels: Vec<String> = LABELS.iter().map(|s| s.to_string()).collect();
        let seq = GateSequence::new(gates);
        let u = seq.unitary(&labels).unwrap();
        prop_assert!(unitarity_error(&u) < 1e-12);
        let s = StateVector::zero(&LABELS).unwrap().run(&seq).unwrap();
        for (i, a) in s.amplitudes().iter().enumerate() {
            prop_assert!((u[(i, 0)] - a).norm() < 1e-12);
        }
    }

    #[test]
    fn density_matrices_are_valid(gates in prop::collection::vec(gate_strategy(), 0..30)) {
        let rho = DensityMatrix::from_state(&random_state(gates));
        prop_assert!(rho.check().is_valid(1e-12));
        for keep in [&["q0"][..], &["q1", "q2"][..], &["q2", "q0"][..]] {
            let r = rho.partial_trace(keep).unwrap();
            prop_assert!(r.check().is_valid(1e-12));
            let e = linear_entropy(&r);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&e));
        }
    }

    #[test]
    fn partial_trace_of_a_product_recovers_the_factor(
        a in prop::collection::vec(gate_strategy(), 0..20),
        b in -5.0f64..5.0,
    ) {
        let ab = random_state(a).permuted(&["q0", "q1", "q2"]).unwrap();
        let c = StateVector::zero(&["c"]).unwrap().apply_gate(&GateSpec::rx("c", b)).unwrap();
        let rho = DensityMatrix::from_state(&ab.tensor(&c).unwrap());
        let kept = rho.partial_trace(&LABELS).unwrap();
        prop_assert!(max_diff(kept.entries(), DensityMatrix::from_state(&ab).entries()) < 1e-12);
        let single = rho.partial_trace(&["c"]).unwrap();
        prop_assert!(linear_entropy(&single).abs() < 1e-10);
    }

    #[test]
    fn fidelity_is_bounded_and_linear(
        a in prop::collection::vec(gate_strategy(), 0..20),
        b in prop::collection::vec(gate_strategy(), 0..20),
        t in prop::collection::vec(gate_strategy(), 0..20),
        w in 0.0f64..1.0,
    ) {
        let target = random_state(t);
        let r1 = DensityMatrix::from_state(&random_state(a));
        let r2 = DensityMatrix::from_state(&random_state(b));
        let mix = DensityMatrix::new(
            r1.labels().to_vec(),
            r1.entries() * C64::new(w, 0.0) + r2.entries() * C64::new(1.0 - w, 0.0),
        ).unwrap();
        let f = fidelity(&mix, &target).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        let lin = w * fidelity(&r1, &target).unwrap() + (1.0 - w) * fidelity(&r2, &target).unwrap();
        prop_assert!((f - lin).abs() < 1e-12);
    }

}
