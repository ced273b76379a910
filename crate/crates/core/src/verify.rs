//! Invariant suite behind the `verify` subcommand. Each check is a
//! deterministic, self-contained computation reporting pass or fail.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::calibrate::{
    measure_barrier, measure_barrier_chain, measure_coupler_with, sweep_barrier, CouplerProbe,
    SweepAxis, SweepGrid,
};
use crate::classical::{
    classify_outcomes, coprimes, factors_from_order, gcd, mod_exp, order_from_measurement, table1,
    FactorStatus, ShorInstance,
};
use crate::error::Result;
use crate::qlogic::gates::{make_phase, make_rx, make_t};
use crate::qlogic::networks::{self, C11_REGISTER, C2_REGISTER};
use crate::qlogic::state::distance_up_to_global_phase;
use crate::qlogic::{fidelity, linear_entropy, DensityMatrix, GateSequence, GateSpec, StateVector};
use crate::wavesim::cn::{evolve_orbital, no_profile, Drive};
use crate::wavesim::device::{BarrierGeometry, CouplerGeometry};
use crate::wavesim::grid::norm_sqr;
use crate::wavesim::network::{run_physical_network, NetworkMode};
use crate::wavesim::orbital::{comoving_window, init_wavepacket};
use crate::wavesim::state::{CouplerOptions, SemiOneDState};
use crate::wavesim::{DeviceLayout, SimSettings};
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckResult {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Deterministic angles spread over `[−2π, 2π)`.
fn sample_angles(n: usize) -> Vec<f64> {
    let g = 0.618_033_988_749_895;
    (0..n)
        .map(|i| ((i as f64 * g).fract() - 0.5) * 4.0 * PI)
        .collect()
}

fn unitarity_error(u: &nalgebra::DMatrix<C64>) -> f64 {
    let id = nalgebra::DMatrix::<C64>::identity(u.nrows(), u.ncols());
    (u.adjoint() * u - id)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn check_unitarity() -> CheckResult {
    let worst = sample_angles(1000)
        .into_iter()
        .map(|a| {
            unitarity_error(&make_rx(a))
                .max(unitarity_error(&make_phase(0, a)))
                .max(unitarity_error(&make_phase(1, a)))
                .max(unitarity_error(&make_t(a)))
        })
        .fold(0.0, f64::max);
    CheckResult::new(
        "gate unitarity",
        worst < 1e-12,
        format!("max |U†U − I| = {worst:.2e}"),
    )
}

fn check_norm_over_gates() -> Result<CheckResult> {
    let labels = ["q0", "q1", "q2"];
    let angles = sample_angles(100);
    let gates: Vec<GateSpec> = angles
        .iter()
        .enumerate()
        .map(|(i, &a)| match i % 4 {
            0 => GateSpec::rx(labels[i % 3], a),
            1 => GateSpec::r0(labels[(i + 1) % 3], a),
            2 => GateSpec::r1(labels[(i + 2) % 3], a),
            _ => GateSpec::t(labels[i % 3], labels[(i + 1) % 3], a),
        })
        .collect();
    let s = StateVector::zero(&labels)?.run(&GateSequence::new(gates))?;
    let drift = (s.norm_sqr() - 1.0).abs();
    Ok(CheckResult::new(
        "norm over 100 gates",
        drift < 1e-12,
        format!("drift {drift:.2e}"),
    ))
}

fn check_networks() -> Result<Vec<CheckResult>> {
    let c11 = StateVector::zero(&C11_REGISTER)?.run(&networks::network_c11())?;
    let d11 = distance_up_to_global_phase(c11.amplitudes(), networks::ghz_target().amplitudes());
    let c2 = StateVector::zero(&C2_REGISTER)?.run(&networks::network_c2())?;
    let d2 = distance_up_to_global_phase(
        c2.amplitudes(),
        networks::bell_product_target().amplitudes(),
    );

    // the opposite T convention phases (a=1, b=0): swap each T's targets
    let flipped = GateSequence::new(
        networks::network_c11()
            .gates
            .into_iter()
            .map(|g| {
                if g.targets.len() == 2 {
                    GateSpec::t(&g.targets[1], &g.targets[0], g.angle)
                } else {
                    g
                }
            })
            .collect(),
    );
    let f = StateVector::zero(&C11_REGISTER)?.run(&flipped)?;
    let df = distance_up_to_global_phase(f.amplitudes(), networks::ghz_target().amplitudes());
    Ok(vec![
        CheckResult::new(
            "C=11 network output",
            d11 < 1e-10,
            format!("max amplitude error {d11:.2e}"),
        ),
        CheckResult::new(
            "C=2 network output",
            d2 < 1e-10,
            format!("max amplitude error {d2:.2e}"),
        ),
        CheckResult::new(
            "single T convention reproduces the GHZ output",
            d11 < 1e-10 && df > 1e-3,
            format!("pinned {d11:.2e}, flipped {df:.2e}"),
        ),
    ])
}

fn product_state(labels: &[&str], seed: usize) -> Result<StateVector> {
    let a = sample_angles(2 * labels.len() + seed + 1);
    let mut gates = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        gates.push(GateSpec::rx(l, a[seed + 2 * i]));
        gates.push(GateSpec::r0(l, a[seed + 2 * i + 1]));
    }
    StateVector::zero(labels)?.run(&GateSequence::new(gates))
}

fn check_density_identities() -> Result<Vec<CheckResult>> {
    let mut worst_pt: f64 = 0.0;
    let mut worst_lin: f64 = 0.0;
    let mut entropy_ok = true;
    for seed in 0..20 {
        let psi = product_state(&["a", "b"], seed)?;
        let chi = product_state(&["c"], seed + 7)?;
        let rho = DensityMatrix::from_state(&psi.tensor(&chi)?);
        let kept = rho.partial_trace(&["a", "b"])?;
        let direct = DensityMatrix::from_state(&psi);
        worst_pt = worst_pt.max(
            (kept.entries() - direct.entries())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max),
        );

        let target = networks::ghz_target();
        let r1 = DensityMatrix::from_state(&product_state(&C11_REGISTER, seed)?);
        let r2 = DensityMatrix::maximally_mixed(&C11_REGISTER);
        let w = (seed as f64 + 0.5) / 20.0;
        let mix = DensityMatrix::new(
            r1.labels().to_vec(),
            r1.entries() * C64::new(w, 0.0) + r2.entries() * C64::new(1.0 - w, 0.0),
        )?;
        let lhs = fidelity(&mix, &target)?;
        let rhs = w * fidelity(&r1, &target)? + (1.0 - w) * fidelity(&r2, &target)?;
        worst_lin = worst_lin.max((lhs - rhs).abs());
        if !(0.0..=1.0).contains(&lhs) {
            entropy_ok = false;
        }

        let single = rho.partial_trace(&["a"])?;
        let e = linear_entropy(&single);
        let pure = (single.purity() - 1.0).abs() < 1e-10;
        if !(-1e-12..=1.0 + 1e-12).contains(&e) || (pure != (e.abs() < 1e-9)) {
            entropy_ok = false;
        }
    }
    let mut valid = true;
    let gammas = sample_angles(20);
    for (seed, &g) in gammas.iter().enumerate() {
        let psi = product_state(&C2_REGISTER, seed)?.run(&networks::network_c2_with(g))?;
        let rho = DensityMatrix::from_state(&psi);
        valid &= rho.check().is_valid(1e-12);
        for keep in [&["x1"][..], &["x0", "y0"][..], &["y1", "x1", "y0"][..]] {
            valid &= rho.partial_trace(keep)?.check().is_valid(1e-12);
        }
    }
    let ghz_x0 = DensityMatrix::from_state(&networks::ghz_target()).partial_trace(&["x0"])?;
    let e_mixed = linear_entropy(&ghz_x0);
    Ok(vec![
        CheckResult::new(
            "density matrices Hermitian, unit trace, positive",
            valid,
            "full and reduced states of 20 registers".into(),
        ),
        CheckResult::new(
            "partial trace of product states",
            worst_pt < 1e-12,
            format!("max error {worst_pt:.2e}"),
        ),
        CheckResult::new(
            "fidelity linear in rho",
            worst_lin < 1e-12,
            format!("max error {worst_lin:.2e}"),
        ),
        CheckResult::new(
            "fidelity and linear entropy ranges",
            entropy_ok && (e_mixed - 1.0).abs() < 1e-12,
            format!("GHZ marginal entropy {e_mixed}"),
        ),
    ])
}

fn check_classical() -> Result<Vec<CheckResult>> {
    let expected: [[u64; 7]; 4] = [
        [1, 1, 1, 1, 1, 1, 1],
        [2, 4, 7, 8, 11, 13, 14],
        [4, 1, 4, 4, 1, 4, 1],
        [1, 1, 1, 1, 1, 1, 1],
    ];
    let t = table1();
    let table_ok = t
        .iter()
        .zip(expected.iter())
        .all(|((_, row), e)| row.as_slice() == e);

    let statuses = |c: u64| -> Result<Vec<(String, FactorStatus, Option<u64>)>> {
        Ok(classify_outcomes(&ShorInstance::compiled(c)?)?
            .into_iter()
            .map(|o| (o.outcome.reported_string(), o.result.status, o.result.order))
            .collect())
    };
    let s11 = statuses(11)?;
    let s2 = statuses(2)?;
    let class_ok =
        s11 == vec![
            ("00".into(), FactorStatus::Failure, None),
            ("10".into(), FactorStatus::Success, Some(2)),
        ] && s2.iter().map(|(_, s, _)| *s).collect::<Vec<_>>()
            == vec![
                FactorStatus::Failure,
                FactorStatus::Success,
                FactorStatus::Trivial,
                FactorStatus::Success,
            ];

    let mut brute_ok = true;
    for n in 3..=50u64 {
        for c in coprimes(n) {
            let r = (1..=n)
                .find(|&r| mod_exp(c, r, n).unwrap_or(0) == 1)
                .unwrap_or(0);
            let res = factors_from_order(c, r, n)?;
            let h = mod_exp(c, r / 2, n)?;
            let expect = r % 2 == 0 && {
                let p = gcd(h + n - 1, n);
                let q = gcd(h + 1, n);
                (1 < p && p < n) || (1 < q && q < n)
            };
            if (res.status == FactorStatus::Success) != expect {
                brute_ok = false;
            }
            if let Some((p, q)) = res.factors {
                brute_ok &= p * q == n;
            }
        }
    }
    let mut divides = true;
    for n in 1..=6u32 {
        for z in 0..(1u64 << n) {
            if let Some(r) = order_from_measurement(z, n)? {
                divides &= (1u64 << n) % r == 0;
            }
        }
    }
    Ok(vec![
        CheckResult::new(
            "modular exponentiation table",
            table_ok,
            "7 co-primes × 4 exponents".into(),
        ),
        CheckResult::new("outcome classification", class_ok, format!("C=11 {s11:?}")),
        CheckResult::new(
            "brute-force orders for N ≤ 50",
            brute_ok && divides,
            "linear-scan oracle".into(),
        ),
    ])
}

fn check_free_norm(settings: &SimSettings) -> Result<CheckResult> {
    let g = &settings.grid;
    let (w, _) = comoving_window(&settings.saw, 0.0, 0.0, g.spacing, g.points)?;
    let psi = init_wavepacket(&settings.saw, &w, &settings.material, 0, 0.0)?;
    let (out, _) = evolve_orbital(
        &psi,
        &w,
        &Drive::Static,
        &no_profile,
        &settings.cn()?,
        0.0,
        1000,
    )?;
    let drift = (norm_sqr(&out, w.spacing) - norm_sqr(&psi, w.spacing)).abs();
    Ok(CheckResult::new(
        "free norm over 1000 steps",
        drift < 1e-10,
        format!("drift {drift:.2e}"),
    ))
}

fn check_configuration_decoupling(settings: &SimSettings) -> Result<CheckResult> {
    let g = &settings.grid;
    let (w, d) = comoving_window(&settings.saw, 0.0, 0.0, g.spacing, g.points)?;
    let psi = init_wavepacket(&settings.saw, &w, &settings.material, 0, 0.0)?;
    let s = SemiOneDState::product(&["a", "b"], &[0, 0], psi, w, d, 0.0)?
        .apply_logical_rx("a", 1.0)?
        .apply_logical_rx("b", 2.0)?;
    let before = SemiOneDState::config_overlaps(&s, &s)?;
    let after_state = s.propagate_free(2000, settings)?;
    let after = SemiOneDState::config_overlaps(&after_state, &after_state)?;
    let worst = (0..4)
        .map(|x| (after[(x, x)] - before[(x, x)]).norm())
        .fold(0.0, f64::max);
    Ok(CheckResult::new(
        "configuration norms conserved without couplers",
        worst < 1e-10,
        format!("max change {worst:.2e}"),
    ))
}

fn check_phase_additivity(settings: &SimSettings) -> Result<CheckResult> {
    let a = BarrierGeometry {
        height: 1.5,
        length: 8.0,
    };
    let b = BarrierGeometry {
        height: 2.82,
        length: 8.0,
    };
    let pa = measure_barrier(settings, &a, 0)?.arg;
    let pb = measure_barrier(settings, &b, 0)?.arg;
    let pab = measure_barrier_chain(settings, &[a, b], 0)?.arg;
    Ok(match (pa, pb, pab) {
        (Some(x), Some(y), Some(z)) => {
            let err = crate::wavesim::state::wrap_phase(z - x - y).abs();
            CheckResult::new(
                "barrier phase additivity",
                err < 2e-2,
                format!("|φ_ab − φ_a − φ_b| = {err:.2e} rad"),
            )
        }
        _ => CheckResult::new(
            "barrier phase additivity",
            false,
            "ill-defined phase".into(),
        ),
    })
}

fn check_coupler_symmetry(
    settings: &SimSettings,
    geometry: &CouplerGeometry,
) -> Result<CheckResult> {
    let forward = CouplerProbe {
        particles: ["a", "b"],
        wires: [0, 1],
        pair: ("a", "b"),
    };
    let swapped = CouplerProbe {
        particles: ["b", "a"],
        wires: [1, 0],
        pair: ("b", "a"),
    };
    let p1 = measure_coupler_with(settings, geometry, &forward, CouplerOptions::default())?.arg;
    let p2 = measure_coupler_with(settings, geometry, &swapped, CouplerOptions::default())?.arg;
    Ok(match (p1, p2) {
        (Some(x), Some(y)) => {
            let err = crate::wavesim::state::wrap_phase(x - y).abs();
            CheckResult::new(
                "coupler symmetry",
                err < 1e-3,
                format!("|γ − γ_swapped| = {err:.2e} rad"),
            )
        }
        _ => CheckResult::new("coupler symmetry", false, "ill-defined phase".into()),
    })
}

fn check_ideal_phase_equivalence(settings: &SimSettings) -> Result<CheckResult> {
    let (phi, gamma) = (0.92 * PI, 0.88 * PI);
    let run = run_physical_network(
        &networks::network_c11(),
        &C11_REGISTER,
        &DeviceLayout::reference(),
        settings,
        NetworkMode::IdealPhases { phi, gamma },
        CouplerOptions::default(),
    )?;
    let rho = run.state.logical_density_matrix(&C11_REGISTER)?;
    let logical = StateVector::zero(&C11_REGISTER)?.run(&networks::network_c11_with(phi, gamma))?;
    let err = (rho.entries() - DensityMatrix::from_state(&logical).entries())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    Ok(CheckResult::new(
        "exact phases reproduce the logical network",
        err < 1e-10,
        format!("max entry difference {err:.2e}"),
    ))
}

fn check_calibration_determinism(settings: &SimSettings) -> Result<CheckResult> {
    let grid = SweepGrid {
        axes: vec![SweepAxis::new("height", 2.0, 3.0, 0.5)],
        target: 0.92 * PI,
        tolerance: PI,
    };
    let base = BarrierGeometry {
        height: 0.0,
        length: 8.0,
    };
    let r1 = sweep_barrier(&grid, &base, 0, settings)?;
    let r2 = sweep_barrier(&grid, &base, 0, settings)?;
    let argmin_ok = r1
        .table
        .iter()
        .filter(|r| r.feasible())
        .all(|r| r.phase_error.unwrap_or(f64::INFINITY) >= r1.phase_error);
    let same = serde_json::to_string(&r1)? == serde_json::to_string(&r2)?;
    Ok(CheckResult::new(
        "calibration deterministic and argmin",
        same && argmin_ok,
        format!("best {:?}", r1.best),
    ))
}

/// Settings used by the physical checks: the default material and SAW on a
/// coarse grid.
pub fn verify_settings() -> SimSettings {
    SimSettings::coarse()
}

/// Runs every invariant check. The coupler checks use `coupler`.
pub fn run_all(settings: &SimSettings, coupler: &CouplerGeometry) -> Result<Vec<CheckResult>> {
    let mut out = vec![check_unitarity(), check_norm_over_gates()?];
    out.extend(check_networks()?);
    out.extend(check_density_identities()?);
    out.extend(check_classical()?);
    out.push(check_free_norm(settings)?);
    out.push(check_configuration_decoupling(settings)?);
    out.push(check_phase_additivity(settings)?);
    out.push(check_coupler_symmetry(settings, coupler)?);
    out.push(check_ideal_phase_equivalence(settings)?);
    out.push(check_calibration_determinism(settings)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logical_and_classical_checks_pass() {
        let mut all = vec![check_unitarity(), check_norm_over_gates().unwrap()];
        all.extend(check_networks().unwrap());
        all.extend(check_density_identities().unwrap());
        all.extend(check_classical().unwrap());
        for c in all {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
