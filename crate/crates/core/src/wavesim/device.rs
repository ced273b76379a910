//! Gate structures placed along the wires, the screened Coulomb coupling,
//! and the schedule that maps a gate network onto the device.

use serde::{Deserialize, Serialize};

use super::cn::{CnParams, PairInteraction};
use super::grid::Window;
use super::material::{MaterialParams, SawPotential};
use crate::error::{Error, Result};
use crate::qlogic::{GateKind, GateSequence};
use crate::C64;

/// Rectangular barrier covering `center − length/2 <= y < center + length/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    /// meV
    pub height: f64,
    /// nm
    pub length: f64,
    pub wire: u8,
    /// nm, lab frame
    pub center: f64,
    pub qubit: String,
}

impl BarrierSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.height >= 0.0 && self.height.is_finite()) || !(self.length > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "barrier needs height >= 0 and length > 0 (got {}, {})",
                self.height, self.length
            )));
        }
        if self.wire > 1 {
            return Err(Error::InvalidArgument(format!(
                "wire must be 0 or 1, got {}",
                self.wire
            )));
        }
        Ok(())
    }

    pub fn start(&self) -> f64 {
        self.center - 0.5 * self.length
    }

    pub fn profile(&self) -> impl Fn(f64) -> f64 + Sync + '_ {
        let start = self.start();
        let end = start + self.length;
        let eps = 1e-9;
        move |y| {
            if y >= start - eps && y < end - eps {
                self.height
            } else {
                0.0
            }
        }
    }
}

/// Coupling region `start <= y < start + region_length` where the wires of
/// `interacting_config` run `near_distance` apart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplerSpec {
    /// nm
    pub region_length: f64,
    /// nm
    pub near_distance: f64,
    /// nm
    pub far_distance: f64,
    /// nm⁻¹
    pub debye_k: f64,
    /// nm, lab frame
    pub start: f64,
    pub pair: (String, String),
    /// Wires `(x_a, x_b)` brought close together.
    pub interacting_config: (u8, u8),
}

impl CouplerSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.region_length > 0.0) {
            return Err(Error::InvalidArgument(
                "coupler region length must be positive".into(),
            ));
        }
        if !(self.near_distance > 0.0 && self.near_distance < self.far_distance) {
            return Err(Error::InvalidArgument(format!(
                "coupler needs 0 < near_distance < far_distance (got {}, {})",
                self.near_distance, self.far_distance
            )));
        }
        if !(self.debye_k >= 0.0) {
            return Err(Error::InvalidArgument(
                "Debye wave vector must be >= 0".into(),
            ));
        }
        if self.pair.0 == self.pair.1 {
            return Err(Error::InvalidArgument(
                "coupler pair must be two qubits".into(),
            ));
        }
        if self.interacting_config.0 > 1 || self.interacting_config.1 > 1 {
            return Err(Error::InvalidArgument("wire index must be 0 or 1".into()));
        }
        Ok(())
    }

    pub fn end(&self) -> f64 {
        self.start + self.region_length
    }
}

/// Largest pair potential, meV, at separation `d`.
pub fn screened_coulomb(prefactor: f64, debye_k: f64, r: f64) -> f64 {
    prefactor * (-debye_k * r).exp() / r
}

/// Screened Coulomb coupling of one wire configuration of the pair.
#[derive(Clone, Debug)]
pub struct CoulombCoupling {
    pub prefactor: f64,
    pub debye_k: f64,
    pub far_distance: f64,
    /// `(near_distance, start, length)` for the interacting configuration.
    pub near: Option<(f64, f64, f64)>,
}

impl CoulombCoupling {
    pub fn for_config(coupler: &CouplerSpec, material: &MaterialParams, interacting: bool) -> Self {
        CoulombCoupling {
            prefactor: material.coulomb_prefactor,
            debye_k: coupler.debye_k,
            far_distance: coupler.far_distance,
            near: interacting.then_some((
                coupler.near_distance,
                coupler.start,
                coupler.region_length,
            )),
        }
    }

    /// Upper bound on the accumulated interaction phase, rad, over `duration` ps
    /// inside (`near`) or outside the region.
    pub fn phase_bound(&self, near: bool, duration: f64, hbar: f64) -> f64 {
        let d = match (near, self.near) {
            (true, Some((d, _, _))) => d,
            _ => self.far_distance,
        };
        screened_coulomb(self.prefactor, self.debye_k, d) * duration / hbar
    }
}

impl PairInteraction for CoulombCoupling {
    fn half_phases(&self, window: &Window, params: &CnParams) -> Vec<C64> {
        let n = window.points;
        let h = window.spacing;
        let scale = -params.dt / (2.0 * params.hbar);
        let table = |d: f64| -> Vec<C64> {
            (0..n)
                .map(|k| {
                    let r = ((k as f64 * h).powi(2) + d * d).sqrt();
                    C64::from_polar(
                        1.0,
                        scale * screened_coulomb(self.prefactor, self.debye_k, r),
                    )
                })
                .collect()
        };
        let far = table(self.far_distance);
        let (near, mask) = match self.near {
            Some((d, start, length)) => (table(d), window.mask(start, length)),
            None => (far.clone(), vec![false; n]),
        };
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let k = i.abs_diff(j);
                out.push(if mask[i] && mask[j] { near[k] } else { far[k] });
            }
        }
        out
    }
}

/// Geometry of the fabricated phase shifters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierGeometry {
    pub height: f64,
    pub length: f64,
}

/// Geometry of the fabricated Coulomb couplers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplerGeometry {
    pub region_length: f64,
    pub near_distance: f64,
    #[serde(default = "default_far_distance")]
    pub far_distance: f64,
    #[serde(default = "default_debye_k")]
    pub debye_k: f64,
}

fn default_far_distance() -> f64 {
    200.0
}

fn default_debye_k() -> f64 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceLayout {
    pub barrier: BarrierGeometry,
    pub coupler: CouplerGeometry,
}

impl DeviceLayout {
    /// 2.82 meV × 8 nm barriers and 150 nm × 5 nm couplers.
    pub fn reference() -> Self {
        DeviceLayout {
            barrier: BarrierGeometry {
                height: 2.82,
                length: 8.0,
            },
            coupler: CouplerGeometry {
                region_length: 150.0,
                near_distance: 5.0,
                far_distance: default_far_distance(),
                debye_k: default_debye_k(),
            },
        }
    }

    /// Reference barriers with the coupler gap calibrated to the 0.88π
    /// interaction phase on the default grid.
    pub fn calibrated() -> Self {
        let mut d = Self::reference();
        d.coupler.near_distance = 21.0;
        d
    }
}

/// Every structure of a placed device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialStack {
    pub saw: SawPotential,
    pub barriers: Vec<BarrierSpec>,
    pub couplers: Vec<CouplerSpec>,
}

impl PotentialStack {
    /// Structures must be valid and two couplers serving the same pair may
    /// not overlap along the wire.
    pub fn validate(&self) -> Result<()> {
        self.saw.validate()?;
        for b in &self.barriers {
            b.validate()?;
        }
        for (i, c) in self.couplers.iter().enumerate() {
            c.validate()?;
            for d in &self.couplers[..i] {
                let same = (c.pair.0 == d.pair.0 && c.pair.1 == d.pair.1)
                    || (c.pair.0 == d.pair.1 && c.pair.1 == d.pair.0);
                if same && c.start < d.end() && d.start < c.end() {
                    return Err(Error::InvalidArgument(format!(
                        "two couplers for pair {:?} overlap",
                        c.pair
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SlotAction {
    Rx { qubit: String, theta: f64 },
    PhaseShifter(BarrierSpec),
    Coupler(CouplerSpec),
}

/// One gate of a network on the device timeline. Propagating gates start
/// at `t_start` and last `steps` time steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSlot {
    pub index: usize,
    pub action: SlotAction,
    pub t_start: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DevicePlan {
    pub stack: PotentialStack,
    pub slots: Vec<GateSlot>,
    pub t_end: f64,
}

/// Timing of a structure of length `length` whose leading edge sits one
/// wavelength ahead of the tracked minimum at `t_start`: the segment ends
/// when the minimum is one wavelength past the trailing edge.
pub fn structure_segment(
    saw: &SawPotential,
    minimum: i64,
    t_start: f64,
    length: f64,
    spacing: f64,
    dt: f64,
) -> (f64, usize) {
    let lead = saw.minimum(minimum, t_start) + saw.wavelength;
    let start = (lead / spacing).round() * spacing;
    let duration = (2.0 * saw.wavelength + length) / saw.velocity;
    (start, (duration / dt).round() as usize)
}

/// Places one structure per R0/R1/T gate along the path of minimum
/// `minimum`, in network order.
pub fn plan_network(
    network: &GateSequence,
    layout: &DeviceLayout,
    saw: &SawPotential,
    minimum: i64,
    spacing: f64,
    dt: f64,
) -> Result<DevicePlan> {
    let mut t = 0.0;
    let mut slots = Vec::new();
    let mut barriers = Vec::new();
    let mut couplers = Vec::new();
    for (index, gate) in network.gates.iter().enumerate() {
        gate.validate()?;
        let (action, steps) = match gate.kind {
            GateKind::Rx => (
                SlotAction::Rx {
                    qubit: gate.targets[0].clone(),
                    theta: gate.angle,
                },
                0,
            ),
            GateKind::R0 | GateKind::R1 => {
                let length = layout.barrier.length;
                let (start, steps) = structure_segment(saw, minimum, t, length, spacing, dt);
                let spec = BarrierSpec {
                    height: layout.barrier.height,
                    length,
                    wire: if gate.kind == GateKind::R0 { 0 } else { 1 },
                    center: start + 0.5 * length,
                    qubit: gate.targets[0].clone(),
                };
                barriers.push(spec.clone());
                (SlotAction::PhaseShifter(spec), steps)
            }
            GateKind::T => {
                let g = &layout.coupler;
                let (start, steps) =
                    structure_segment(saw, minimum, t, g.region_length, spacing, dt);
                let spec = CouplerSpec {
                    region_length: g.region_length,
                    near_distance: g.near_distance,
                    far_distance: g.far_distance,
                    debye_k: g.debye_k,
                    start,
                    pair: (gate.targets[0].clone(), gate.targets[1].clone()),
                    interacting_config: (0, 1),
                };
                couplers.push(spec.clone());
                (SlotAction::Coupler(spec), steps)
            }
        };
        slots.push(GateSlot {
            index,
            action,
            t_start: t,
            steps,
        });
        t += steps as f64 * dt;
    }
    let stack = PotentialStack {
        saw: saw.clone(),
        barriers,
        couplers,
    };
    stack.validate()?;
    Ok(DevicePlan {
        stack,
        slots,
        t_end: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlogic::networks::{network_c11, network_c2};

    #[test]
    fn barrier_profile_is_half_open() {
        let b = BarrierSpec {
            height: 2.0,
            length: 8.0,
            wire: 0,
            center: 4.0,
            qubit: "x0".into(),
        };
        let p = b.profile();
        assert_eq!(p(0.0), 2.0);
        assert_eq!(p(7.0), 2.0);
        assert_eq!(p(8.0), 0.0);
        assert_eq!(p(-1.0), 0.0);
    }

    #[test]
    fn coupler_validation() {
        let mut c = CouplerSpec {
            region_length: 150.0,
            near_distance: 5.0,
            far_distance: 200.0,
            debye_k: 0.2,
            start: 0.0,
            pair: ("a".into(), "b".into()),
            interacting_config: (0, 1),
        };
        c.validate().unwrap();
        c.near_distance = 250.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn interaction_phase_tables() {
        let m = MaterialParams::gaas();
        let c = CouplerSpec {
            region_length: 4.0,
            near_distance: 5.0,
            far_distance: 200.0,
            debye_k: 0.2,
            start: 0.0,
            pair: ("a".into(), "b".into()),
            interacting_config: (0, 1),
        };
        let w = Window::around(0.0, 1.0, 8).unwrap();
        let p = CnParams::new(&m, 1.0, 0.005).unwrap();
        let ph = CoulombCoupling::for_config(&c, &m, true).half_phases(&w, &p);
        // index 4 is y = 0, inside the region
        let v = screened_coulomb(m.coulomb_prefactor, 0.2, 5.0);
        assert!((ph[4 * 8 + 4].arg() + v * 0.005 / (2.0 * m.hbar)).abs() < 1e-12);
        let far = CoulombCoupling::for_config(&c, &m, false).half_phases(&w, &p);
        assert!(far[4 * 8 + 4].arg().abs() < 1e-15);
        assert!(far.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn far_coupling_is_negligible() {
        let m = MaterialParams::gaas();
        let v = screened_coulomb(m.coulomb_prefactor, 0.2, 200.0);
        assert!(v < 1e-17);
    }

    #[test]
    fn plans_place_one_structure_per_phase_gate() {
        let saw = SawPotential::default();
        let plan = plan_network(
            &network_c11(),
            &DeviceLayout::reference(),
            &saw,
            -1,
            1.0,
            0.005,
        )
        .unwrap();
        assert_eq!(plan.stack.barriers.len(), 2);
        assert_eq!(plan.stack.couplers.len(), 2);
        assert_eq!(plan.slots.len(), 9);
        let t = &plan.slots[2];
        assert_eq!(t.steps, ((550.0 / 3.3) / 0.005f64).round() as usize);
        if let SlotAction::Coupler(c) = &t.action {
            assert_eq!(c.start, (saw.minimum(-1, 0.0) + 200.0).round());
            assert_eq!(c.pair, ("x0".to_string(), "y1".to_string()));
        } else {
            panic!("slot 2 should be a coupler");
        }
        let plan2 = plan_network(
            &network_c2(),
            &DeviceLayout::reference(),
            &saw,
            -1,
            1.0,
            0.005,
        )
        .unwrap();
        assert_eq!(plan2.stack.couplers.len(), 2);
        assert!(plan2.stack.couplers[1].start > plan2.stack.couplers[0].end());
    }
}
