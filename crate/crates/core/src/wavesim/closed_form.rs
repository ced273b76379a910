//! Wavepacket solver against closed-form results.

use crate::calibrate::{measure_barrier, measure_coupler};
use crate::wavesim::cn::{evolve_orbital, no_profile, CnParams, Drive};
use crate::wavesim::device::{structure_segment, BarrierGeometry};
use crate::wavesim::grid::{inner, norm_sqr, Window};
use crate::wavesim::orbital::{centroid, comoving_window, gaussian, init_wavepacket, spread};
use crate::wavesim::state::{wrap_phase, CouplerOptions};
use crate::wavesim::{CouplerSpec, DeviceLayout, MaterialParams, SemiOneDState, SimSettings};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn free_norm_conserved_over_1000_steps(
        sigma in 3.0f64..20.0,
        k in -0.3f64..0.3,
        centre in -20.0f64..20.0,
        dt in 0.001f64..0.02,
    ) {
        let m = MaterialParams::gaas();
        let w = Window::around(0.0, 1.0, 256).unwrap();
        let psi = gaussian(&w, centre, sigma, k);
        let p = CnParams::new(&m, 1.0, dt).unwrap();
        let (out, _) = evolve_orbital(&psi, &w, &Drive::Static, &no_profile, &p, 0.0, 1000).unwrap();
        prop_assert!((norm_sqr(&out, 1.0) - norm_sqr(&psi, 1.0)).abs() < 1e-10);
    }

    #[test]
    fn saw_norm_conserved(phase_origin in -3.0f64..3.0) {
        let mut s = SimSettings::coarse();
        s.saw.phase_origin = phase_origin;
        let g = &s.grid;
        let (w, d) = comoving_window(&s.saw, 0.0, 0.0, g.spacing, g.points).unwrap();
        let m = s.saw.nearest_minimum(0.0, 0.0);
        let psi = init_wavepacket(&s.saw, &w, &s.material, m, 0.0).unwrap();
        let (out, w2) = evolve_orbital(&psi, &w, &d, &no_profile, &s.cn().unwrap(), 0.0, 1000).unwrap();
        prop_assert!((norm_sqr(&out, w2.spacing) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn free_gaussian_spreads_by_the_analytic_law() {
    let m = MaterialParams::gaas();
    let (sigma0, t, dt) = (20.0, 10.0, 0.005);
    let w = Window::around(0.0, 1.0, 8192).unwrap();
    let psi = gaussian(&w, 0.0, sigma0, 0.0);
    let p = CnParams::new(&m, 1.0, dt).unwrap();
    let steps = (t / dt).round() as usize;
    let (out, w) = evolve_orbital(&psi, &w, &Drive::Static, &no_profile, &p, 0.0, steps).unwrap();
    // ħ/2m* = K/ħ
    let s = m.kinetic_prefactor / m.hbar * t / (sigma0 * sigma0);
    let expected = sigma0 * (1.0 + s * s).sqrt();
    let got = spread(&out, &w);
    assert!(
        (got / expected - 1.0).abs() < 0.01,
        "spread {got} vs {expected}"
    );
}

#[test]
fn trapped_packet_moves_with_the_wave() {
    let s = SimSettings::default();
    let g = &s.grid;
    let (w, d) = comoving_window(&s.saw, 0.0, 0.0, g.spacing, g.points).unwrap();
    let m = s.saw.nearest_minimum(0.0, 0.0);
    let psi = init_wavepacket(&s.saw, &w, &s.material, m, 0.0).unwrap();
    let y0 = centroid(&psi, &w);
    let steps = (10.0 / g.dt).round() as usize;
    let (out, w2) =
        evolve_orbital(&psi, &w, &d, &no_profile, &s.cn().unwrap(), 0.0, steps).unwrap();
    let moved = centroid(&out, &w2) - y0;
    let expected = s.saw.velocity * 10.0;
    assert!(
        (moved - expected).abs() < 2.0,
        "moved {moved} nm, expected {expected} nm"
    );
}

#[test]
fn uniform_potential_only_rotates_the_phase() {
    let m = MaterialParams::gaas();
    let (v0, dt, steps) = (0.2, 0.005, 1000);
    let w = Window::around(0.0, 1.0, 2048).unwrap();
    let psi = gaussian(&w, 0.0, 30.0, 0.0);
    let p = CnParams::new(&m, 1.0, dt).unwrap();
    let flat = move |_: f64| v0;
    let (free, _) = evolve_orbital(&psi, &w, &Drive::Static, &no_profile, &p, 0.0, steps).unwrap();
    let (lifted, _) = evolve_orbital(&psi, &w, &Drive::Static, &flat, &p, 0.0, steps).unwrap();
    let o = inner(&free, &lifted, 1.0);
    let expected = -v0 * dt * steps as f64 / m.hbar;
    // CN turns a constant shift into an energy-dependent phase at O(dt²)
    assert!((o.norm() - 1.0).abs() < 1e-9, "{}", o.norm());
    assert!(
        wrap_phase(o.arg() - expected).abs() < 1e-5,
        "{} vs {expected}",
        o.arg()
    );
}

#[test]
fn weak_barrier_phase_doubles_with_length() {
    let s = SimSettings::default();
    let delay = |length: f64| {
        measure_barrier(
            &s,
            &BarrierGeometry {
                height: 0.3,
                length,
            },
            0,
        )
        .unwrap()
        .delay()
        .unwrap()
    };
    let (one, two) = (delay(4.0), delay(8.0));
    assert!(one > 0.0);
    assert!((two / one - 2.0).abs() < 0.05, "{one} then {two}");
}

#[test]
fn barrier_phase_ignores_the_wave_phase_origin() {
    let geometry = DeviceLayout::reference().barrier;
    let mut s = SimSettings::coarse();
    let a = measure_barrier(&s, &geometry, 0).unwrap().delay().unwrap();
    s.saw.phase_origin = 1.3;
    let b = measure_barrier(&s, &geometry, 0).unwrap().delay().unwrap();
    assert!(wrap_phase(a - b).abs() < 1e-3, "{a} vs {b}");
}

#[test]
fn coupler_without_coulomb_keeps_rank_and_phase() {
    let mut s = SimSettings::coarse();
    s.material = s.material.without_coulomb();
    let geometry = DeviceLayout::calibrated().coupler;
    let g = &s.grid;
    let (w, d) = comoving_window(&s.saw, 0.0, 0.0, g.spacing, g.points).unwrap();
    let m = s.saw.nearest_minimum(0.0, 0.0);
    let psi = init_wavepacket(&s.saw, &w, &s.material, m, 0.0).unwrap();
    let state = SemiOneDState::product(&["a", "b"], &[0, 0], psi, w, d, 0.0)
        .unwrap()
        .apply_logical_rx("a", std::f64::consts::FRAC_PI_2)
        .unwrap()
        .apply_logical_rx("b", std::f64::consts::FRAC_PI_2)
        .unwrap();
    let (start, steps) = structure_segment(&s.saw, m, 0.0, geometry.region_length, g.spacing, g.dt);
    let coupler = CouplerSpec {
        region_length: geometry.region_length,
        near_distance: geometry.near_distance,
        far_distance: geometry.far_distance,
        debye_k: geometry.debye_k,
        start,
        pair: ("a".into(), "b".into()),
        interacting_config: (0, 1),
    };
    let (product, _) = state
        .propagate_coupler(&coupler, steps, &s, CouplerOptions::default())
        .unwrap();
    assert_eq!(product.rank(), state.rank());
    let force = CouplerOptions {
        force_pair_grid: true,
    };
    let (gridded, report) = state.propagate_coupler(&coupler, steps, &s, force).unwrap();
    assert!(report.max_discarded < 1e-12, "{}", report.max_discarded);
    let keep = ["a", "b"];
    let diff = (product.logical_density_matrix(&keep).unwrap().entries()
        - gridded.logical_density_matrix(&keep).unwrap().entries())
    .camax();
    assert!(diff < 1e-8, "{diff}");

    let gamma = measure_coupler(&s, &geometry).unwrap().delay().unwrap();
    assert!(gamma.abs() < 1e-6, "{gamma}");
}
