//! Device-level execution of a gate network: beam splitters act on the
//! wire amplitudes, phase shifters and couplers are propagated in time.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::dense::DenseState;
use super::device::{plan_network, DeviceLayout, DevicePlan, SlotAction};
use super::orbital::{comoving_window, init_wavepacket};
use super::settings::SimSettings;
use super::state::{CouplerOptions, SemiOneDState};
use crate::error::Result;
use crate::qlogic::{DensityMatrix, GateSequence};
use crate::wavesim::grid::Window;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkMode {
    /// Product terms with truncated re-factorization after couplers.
    RankLimited,
    /// Full grids per configuration; at most three particles.
    DenseOracle,
    /// Free transport with the structures replaced by exact phase factors
    /// `e^{i phi}` on the barrier wire and `e^{i gamma}` on the interacting
    /// configuration.
    IdealPhases { phi: f64, gamma: f64 },
}

#[derive(Clone, Debug)]
pub enum PhysicalState {
    LowRank(SemiOneDState),
    Dense(DenseState),
}

impl PhysicalState {
    pub fn particles(&self) -> &[String] {
        match self {
            PhysicalState::LowRank(s) => s.particles(),
            PhysicalState::Dense(s) => s.particles(),
        }
    }

    pub fn window(&self) -> &Window {
        match self {
            PhysicalState::LowRank(s) => s.window(),
            PhysicalState::Dense(s) => s.window(),
        }
    }

    /// Trace-normalized: population lost from the window is not a logical outcome.
    pub fn logical_density_matrix(&self, keep: &[&str]) -> Result<DensityMatrix> {
        let rho = match self {
            PhysicalState::LowRank(s) => s.logical_density_matrix(keep)?,
            PhysicalState::Dense(s) => s.logical_density_matrix(keep)?,
        };
        Ok(rho.normalized())
    }

    pub fn total_norm(&self) -> Result<f64> {
        match self {
            PhysicalState::LowRank(s) => s.total_norm(),
            PhysicalState::Dense(s) => Ok(s.total_norm()),
        }
    }

    pub fn positional_density(&self, qubit: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            PhysicalState::LowRank(s) => s.positional_density(qubit),
            PhysicalState::Dense(s) => s.positional_density(qubit),
        }
    }

    fn rank(&self) -> usize {
        match self {
            PhysicalState::LowRank(s) => s.rank(),
            PhysicalState::Dense(_) => 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotDiagnostics {
    pub index: usize,
    pub action: String,
    pub steps: usize,
    pub transmitted: Option<f64>,
    pub pair_runs: Option<usize>,
    pub max_discarded: Option<f64>,
    /// Product terms after the slot; 0 for dense states.
    pub rank: usize,
    pub norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub mode: String,
    pub grid_points: usize,
    pub grid_spacing: f64,
    pub dt: f64,
    pub initial_norm: f64,
    pub final_norm: f64,
    pub norm_drift: f64,
    pub max_rank: usize,
    pub max_discarded: f64,
    pub min_transmitted: f64,
    pub wall_seconds: f64,
    pub slots: Vec<SlotDiagnostics>,
}

#[derive(Clone, Debug)]
pub struct PhysicalRun {
    pub state: PhysicalState,
    pub plan: DevicePlan,
    pub diagnostics: RunDiagnostics,
}

fn mode_name(mode: &NetworkMode) -> &'static str {
    match mode {
        NetworkMode::RankLimited => "rank_limited",
        NetworkMode::DenseOracle => "dense_oracle",
        NetworkMode::IdealPhases { .. } => "ideal_phases",
    }
}

/// Runs `network` on `register` (every particle injected in wire 0 of the
/// SAW minimum at the origin) through a device built from `layout`.
pub fn run_physical_network(
    network: &GateSequence,
    register: &[&str],
    layout: &DeviceLayout,
    settings: &SimSettings,
    mode: NetworkMode,
    options: CouplerOptions,
) -> Result<PhysicalRun> {
    settings.validate()?;
    let labels: Vec<String> = register.iter().map(|s| s.to_string()).collect();
    network.validate(&labels)?;
    let started = Instant::now();
    let g = &settings.grid;
    let (window, drive) = comoving_window(&settings.saw, 0.0, 0.0, g.spacing, g.points)?;
    let minimum = settings.saw.nearest_minimum(0.0, 0.0);
    let psi = init_wavepacket(&settings.saw, &window, &settings.material, minimum, 0.0)?;
    let wires = vec![0u8; register.len()];
    let plan = plan_network(network, layout, &settings.saw, minimum, g.spacing, g.dt)?;

    let mut state = match mode {
        NetworkMode::DenseOracle => PhysicalState::Dense(DenseState::product(
            register, &wires, &psi, window, drive, 0.0,
        )?),
        _ => PhysicalState::LowRank(SemiOneDState::product(
            register, &wires, psi, window, drive, 0.0,
        )?),
    };
    let initial_norm = state.total_norm()?;
    let mut diag = RunDiagnostics {
        mode: mode_name(&mode).into(),
        grid_points: g.points,
        grid_spacing: g.spacing,
        dt: g.dt,
        initial_norm,
        min_transmitted: 1.0,
        ..Default::default()
    };

    for slot in &plan.slots {
        let mut sd = SlotDiagnostics {
            index: slot.index,
            steps: slot.steps,
            ..Default::default()
        };
        state = match (&slot.action, &state, mode) {
            (SlotAction::Rx { qubit, theta }, PhysicalState::LowRank(s), _) => {
                sd.action = format!("rx {qubit}");
                PhysicalState::LowRank(s.apply_logical_rx(qubit, *theta)?)
            }
            (SlotAction::Rx { qubit, theta }, PhysicalState::Dense(s), _) => {
                sd.action = format!("rx {qubit}");
                PhysicalState::Dense(s.apply_logical_rx(qubit, *theta)?)
            }
            (
                SlotAction::PhaseShifter(b),
                PhysicalState::LowRank(s),
                NetworkMode::IdealPhases { phi, .. },
            ) => {
                sd.action = format!("phase shifter {} wire {}", b.qubit, b.wire);
                let free = s.propagate_free(slot.steps, settings)?;
                PhysicalState::LowRank(free.apply_conditional_phase(&[(&b.qubit, b.wire)], phi)?)
            }
            (SlotAction::PhaseShifter(b), PhysicalState::LowRank(s), _) => {
                sd.action = format!("phase shifter {} wire {}", b.qubit, b.wire);
                let (out, report) = s.propagate_phase_shifter(b, slot.steps, settings)?;
                sd.transmitted = Some(report.transmitted);
                diag.min_transmitted = diag.min_transmitted.min(report.transmitted);
                PhysicalState::LowRank(out)
            }
            (SlotAction::PhaseShifter(b), PhysicalState::Dense(s), _) => {
                sd.action = format!("phase shifter {} wire {}", b.qubit, b.wire);
                PhysicalState::Dense(s.propagate(Some(b), slot.steps, settings)?)
            }
            (
                SlotAction::Coupler(c),
                PhysicalState::LowRank(s),
                NetworkMode::IdealPhases { gamma, .. },
            ) => {
                sd.action = format!("coupler {} {}", c.pair.0, c.pair.1);
                let free = s.propagate_free(slot.steps, settings)?;
                let cond = [
                    (c.pair.0.as_str(), c.interacting_config.0),
                    (c.pair.1.as_str(), c.interacting_config.1),
                ];
                PhysicalState::LowRank(free.apply_conditional_phase(&cond, gamma)?)
            }
            (SlotAction::Coupler(c), PhysicalState::LowRank(s), _) => {
                sd.action = format!("coupler {} {}", c.pair.0, c.pair.1);
                let (out, report) = s.propagate_coupler(c, slot.steps, settings, options)?;
                sd.pair_runs = Some(report.pair_runs);
                sd.max_discarded = Some(report.max_discarded);
                diag.max_discarded = diag.max_discarded.max(report.max_discarded);
                PhysicalState::LowRank(out)
            }
            (SlotAction::Coupler(c), PhysicalState::Dense(s), _) => {
                sd.action = format!("coupler {} {}", c.pair.0, c.pair.1);
                PhysicalState::Dense(s.propagate_coupler(c, slot.steps, settings)?)
            }
        };
        sd.rank = state.rank();
        sd.norm = state.total_norm()?;
        diag.max_rank = diag.max_rank.max(sd.rank);
        diag.slots.push(sd);
    }
    diag.final_norm = state.total_norm()?;
    diag.norm_drift = (diag.final_norm - initial_norm).abs();
    diag.wall_seconds = started.elapsed().as_secs_f64();
    Ok(PhysicalRun {
        state,
        plan,
        diagnostics: diag,
    })
}
