//! Grid-search calibration of phase-shifter and coupler geometries.
//!
//! Phases are reported as delays: a structure that multiplies its
//! configuration by `e^{iα}` relative to free transport has delay `−α`,
//! wrapped into `(−π, π]`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavesim::device::{
    structure_segment, BarrierGeometry, BarrierSpec, CouplerGeometry, CouplerSpec,
};
use crate::wavesim::orbital::{comoving_window, init_wavepacket};
use crate::wavesim::state::{
    extract_phase, wrap_phase, CouplerOptions, SemiOneDState, TRANSMISSION_THRESHOLD,
};
use crate::wavesim::SimSettings;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl SweepAxis {
    pub fn new(name: &str, min: f64, max: f64, step: f64) -> Self {
        SweepAxis {
            name: name.to_string(),
            min,
            max,
            step,
        }
    }

    /// A single value.
    pub fn fixed(name: &str, value: f64) -> Self {
        SweepAxis::new(name, value, value, 1.0)
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.min + i as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axes: Vec<SweepAxis>,
    /// Target delay phase, rad.
    pub target: f64,
    /// Largest accepted |phase − target|, rad.
    pub tolerance: f64,
}

impl SweepGrid {
    pub fn validate(&self, allowed: &[&str]) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::InvalidArgument("a sweep has one or two axes".into()));
        }
        for a in &self.axes {
            if !allowed.contains(&a.name.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "unknown sweep parameter `{}` (expected one of {allowed:?})",
                    a.name
                )));
            }
            if !(a.min <= a.max) || !(a.step > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "axis `{}` needs min <= max and step > 0",
                    a.name
                )));
            }
        }
        if self.axes.len() == 2 && self.axes[0].name == self.axes[1].name {
            return Err(Error::InvalidArgument("sweep axes must differ".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidArgument("tolerance must be >= 0".into()));
        }
        Ok(())
    }

    /// Grid points in lexicographic ascending order, first axis outermost.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for axis in &self.axes {
            let vals = axis.values();
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn names(&self) -> Vec<String> {
        self.axes.iter().map(|a| a.name.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: Vec<f64>,
    /// Delay phase, rad; `None` when the phase is ill-defined.
    pub phase: Option<f64>,
    pub phase_error: Option<f64>,
    pub transmitted: f64,
    /// Normalized overlap with the free reference.
    pub overlap: f64,
    pub transmitted_ok: bool,
    pub within_tolerance: bool,
}

impl SweepRow {
    pub fn feasible(&self) -> bool {
        self.transmitted_ok && self.within_tolerance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub parameters: Vec<String>,
    pub best: Vec<f64>,
    pub achieved_phase: f64,
    pub phase_error: f64,
    pub transmitted_norm: f64,
    pub target: f64,
    pub table: Vec<SweepRow>,
}

/// One measured structure traversal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMeasurement {
    /// `arg ⟨free|structure⟩`, rad.
    pub arg: Option<f64>,
    pub overlap: f64,
    pub transmitted: f64,
}

impl PhaseMeasurement {
    pub fn delay(&self) -> Option<f64> {
        self.arg.map(|a| wrap_phase(-a))
    }
}

const SINGLE: [&str; 1] = ["q"];
const PAIR: [&str; 2] = ["a", "b"];

fn start_state(
    settings: &SimSettings,
    particles: &[&str],
    wires: &[u8],
) -> Result<(SemiOneDState, i64)> {
    settings.validate()?;
    let g = &settings.grid;
    let (window, drive) = comoving_window(&settings.saw, 0.0, 0.0, g.spacing, g.points)?;
    let minimum = match &drive {
        crate::wavesim::cn::Drive::Saw { minimum, .. } => *minimum,
        crate::wavesim::cn::Drive::Static => 0,
    };
    let psi = init_wavepacket(&settings.saw, &window, &settings.material, minimum, 0.0)?;
    Ok((
        SemiOneDState::product(particles, wires, psi, window, drive, 0.0)?,
        minimum,
    ))
}

fn segment(settings: &SimSettings, minimum: i64, t: f64, length: f64) -> (f64, usize) {
    structure_segment(
        &settings.saw,
        minimum,
        t,
        length,
        settings.grid.spacing,
        settings.grid.dt,
    )
}

fn compare(
    state: &SemiOneDState,
    reference: &SemiOneDState,
    config: &[u8],
) -> Result<(Option<f64>, f64)> {
    let x = config
        .iter()
        .fold(0usize, |acc, &w| (acc << 1) | w as usize);
    let cross = SemiOneDState::config_overlaps(reference, state)?[(x, x)];
    let ns = SemiOneDState::config_overlaps(state, state)?[(x, x)].re;
    let nr = SemiOneDState::config_overlaps(reference, reference)?[(x, x)].re;
    let overlap = cross.norm() / (ns * nr).sqrt();
    match extract_phase(state, reference, config) {
        Ok(a) => Ok((Some(a), overlap)),
        Err(Error::IllDefinedPhase(_)) => Ok((None, overlap)),
        Err(e) => Err(e),
    }
}

/// Free transport of one packet over the schedules of consecutive
/// structures of the given lengths.
pub fn single_reference(
    settings: &SimSettings,
    lengths: &[f64],
    wire: u8,
) -> Result<SemiOneDState> {
    let (mut state, minimum) = start_state(settings, &SINGLE, &[wire])?;
    for &length in lengths {
        let (_, steps) = segment(settings, minimum, state.time(), length);
        state = state.propagate_free(steps, settings)?;
    }
    Ok(state)
}

/// Free transport of two packets over a coupler schedule.
pub fn pair_reference(
    settings: &SimSettings,
    particles: [&str; 2],
    wires: [u8; 2],
    region_length: f64,
) -> Result<SemiOneDState> {
    let (state, minimum) = start_state(settings, &particles, &wires)?;
    let (_, steps) = segment(settings, minimum, 0.0, region_length);
    state.propagate_free(steps, settings)
}

fn barrier_with_reference(
    settings: &SimSettings,
    geometries: &[BarrierGeometry],
    wire: u8,
    reference: &SemiOneDState,
) -> Result<PhaseMeasurement> {
    let (mut state, minimum) = start_state(settings, &SINGLE, &[wire])?;
    let mut transmitted: f64 = 1.0;
    for geometry in geometries {
        let (start, steps) = segment(settings, minimum, state.time(), geometry.length);
        let barrier = BarrierSpec {
            height: geometry.height,
            length: geometry.length,
            wire,
            center: start + 0.5 * geometry.length,
            qubit: SINGLE[0].into(),
        };
        let (out, report) = state.traverse_barrier(&barrier, steps, settings)?;
        transmitted = transmitted.min(report.transmitted);
        state = out;
    }
    let (arg, overlap) = compare(&state, reference, &[wire])?;
    Ok(PhaseMeasurement {
        arg,
        overlap,
        transmitted,
    })
}

/// Phase imprinted by phase shifters traversed one after another.
pub fn measure_barrier_chain(
    settings: &SimSettings,
    geometries: &[BarrierGeometry],
    wire: u8,
) -> Result<PhaseMeasurement> {
    let lengths: Vec<f64> = geometries.iter().map(|g| g.length).collect();
    let reference = single_reference(settings, &lengths, wire)?;
    barrier_with_reference(settings, geometries, wire, &reference)
}

/// Phase imprinted by one phase shifter on a packet in `wire`.
pub fn measure_barrier(
    settings: &SimSettings,
    geometry: &BarrierGeometry,
    wire: u8,
) -> Result<PhaseMeasurement> {
    measure_barrier_chain(settings, std::slice::from_ref(geometry), wire)
}

/// Two particles and the coupler between them. `wires[p]` is the wire of
/// `particles[p]`; the coupler serves `pair` and its interacting
/// configuration is the one the particles start in.
#[derive(Clone, Copy, Debug)]
pub struct CouplerProbe<'a> {
    pub particles: [&'a str; 2],
    pub wires: [u8; 2],
    pub pair: (&'a str, &'a str),
}

impl Default for CouplerProbe<'_> {
    fn default() -> Self {
        CouplerProbe {
            particles: PAIR,
            wires: [0, 1],
            pair: (PAIR[0], PAIR[1]),
        }
    }
}

impl CouplerProbe<'_> {
    fn wire_of(&self, q: &str) -> u8 {
        if q == self.particles[0] {
            self.wires[0]
        } else {
            self.wires[1]
        }
    }
}

fn coupler_with_reference(
    settings: &SimSettings,
    geometry: &CouplerGeometry,
    probe: &CouplerProbe,
    reference: &SemiOneDState,
    options: CouplerOptions,
) -> Result<PhaseMeasurement> {
    let (state, minimum) = start_state(settings, &probe.particles, &probe.wires)?;
    let (start, steps) = segment(settings, minimum, 0.0, geometry.region_length);
    let coupler = CouplerSpec {
        region_length: geometry.region_length,
        near_distance: geometry.near_distance,
        far_distance: geometry.far_distance,
        debye_k: geometry.debye_k,
        start,
        pair: (probe.pair.0.into(), probe.pair.1.into()),
        interacting_config: (probe.wire_of(probe.pair.0), probe.wire_of(probe.pair.1)),
    };
    let (out, _) = state.propagate_coupler(&coupler, steps, settings, options)?;
    let (arg, overlap) = compare(&out, reference, &probe.wires)?;
    let transmitted = out
        .transmitted_fraction(probe.particles[0], probe.wires[0])?
        .min(out.transmitted_fraction(probe.particles[1], probe.wires[1])?);
    Ok(PhaseMeasurement {
        arg,
        overlap,
        transmitted,
    })
}

/// Conditional phase picked up by the interacting configuration of one coupler.
pub fn measure_coupler(
    settings: &SimSettings,
    geometry: &CouplerGeometry,
) -> Result<PhaseMeasurement> {
    measure_coupler_with(
        settings,
        geometry,
        &CouplerProbe::default(),
        CouplerOptions::default(),
    )
}

pub fn measure_coupler_with(
    settings: &SimSettings,
    geometry: &CouplerGeometry,
    probe: &CouplerProbe,
    options: CouplerOptions,
) -> Result<PhaseMeasurement> {
    let reference = pair_reference(
        settings,
        probe.particles,
        probe.wires,
        geometry.region_length,
    )?;
    coupler_with_reference(settings, geometry, probe, &reference, options)
}

fn row(params: Vec<f64>, m: &PhaseMeasurement, grid: &SweepGrid) -> SweepRow {
    let phase = m.delay();
    let phase_error = phase.map(|p| wrap_phase(p - grid.target).abs());
    SweepRow {
        params,
        phase,
        phase_error,
        transmitted: m.transmitted,
        overlap: m.overlap,
        transmitted_ok: m.transmitted >= TRANSMISSION_THRESHOLD,
        within_tolerance: phase_error.is_some_and(|e| e <= grid.tolerance),
    }
}

/// First row of minimal phase error among feasible rows.
pub fn select_best(grid: &SweepGrid, table: Vec<SweepRow>) -> Result<CalibrationResult> {
    let mut best: Option<usize> = None;
    for (i, r) in table.iter().enumerate() {
        if !r.feasible() {
            continue;
        }
        let e = r.phase_error.expect("feasible rows have a phase");
        if best.map_or(true, |b| e < table[b].phase_error.expect("feasible")) {
            best = Some(i);
        }
    }
    match best {
        None => Err(Error::NoFeasiblePoint { table }),
        Some(b) => {
            let r = &table[b];
            Ok(CalibrationResult {
                parameters: grid.names(),
                best: r.params.clone(),
                achieved_phase: r.phase.expect("feasible"),
                phase_error: r.phase_error.expect("feasible"),
                transmitted_norm: r.transmitted,
                target: grid.target,
                table,
            })
        }
    }
}

fn barrier_at(base: &BarrierGeometry, names: &[String], p: &[f64]) -> BarrierGeometry {
    let mut g = base.clone();
    for (n, v) in names.iter().zip(p) {
        match n.as_str() {
            "height" => g.height = *v,
            _ => g.length = *v,
        }
    }
    g
}

fn coupler_at(base: &CouplerGeometry, names: &[String], p: &[f64]) -> CouplerGeometry {
    let mut g = base.clone();
    for (n, v) in names.iter().zip(p) {
        match n.as_str() {
            "region_length" => g.region_length = *v,
            _ => g.near_distance = *v,
        }
    }
    g
}

/// Barrier sweep over `height` and/or `length`; unswept values come from `base`.
pub fn sweep_barrier(
    grid: &SweepGrid,
    base: &BarrierGeometry,
    wire: u8,
    settings: &SimSettings,
) -> Result<CalibrationResult> {
    grid.validate(&["height", "length"])?;
    let names = grid.names();
    let points = grid.points();
    let geoms: Vec<BarrierGeometry> = points.iter().map(|p| barrier_at(base, &names, p)).collect();
    let lengths: Vec<u64> = geoms.iter().map(|g| g.length.to_bits()).collect();
    let mut distinct: Vec<u64> = lengths.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let refs: BTreeMap<u64, SemiOneDState> = distinct
        .par_iter()
        .map(|&l| Ok((l, single_reference(settings, &[f64::from_bits(l)], wire)?)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();
    let table: Vec<SweepRow> = geoms
        .par_iter()
        .zip(&points)
        .map(|(g, p)| {
            let m = barrier_with_reference(
                settings,
                std::slice::from_ref(g),
                wire,
                &refs[&g.length.to_bits()],
            )?;
            Ok(row(p.clone(), &m, grid))
        })
        .collect::<Result<_>>()?;
    select_best(grid, table)
}

/// Coupler sweep over `region_length` and/or `near_distance`.
pub fn sweep_coupler(
    grid: &SweepGrid,
    base: &CouplerGeometry,
    settings: &SimSettings,
) -> Result<CalibrationResult> {
    grid.validate(&["region_length", "near_distance"])?;
    let names = grid.names();
    let points = grid.points();
    let geoms: Vec<CouplerGeometry> = points.iter().map(|p| coupler_at(base, &names, p)).collect();
    let mut distinct: Vec<u64> = geoms.iter().map(|g| g.region_length.to_bits()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let refs: BTreeMap<u64, SemiOneDState> = distinct
        .par_iter()
        .map(|&l| {
            Ok((
                l,
                pair_reference(settings, PAIR, [0, 1], f64::from_bits(l))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();
    let table: Vec<SweepRow> = geoms
        .par_iter()
        .zip(&points)
        .map(|(g, p)| {
            let probe = CouplerProbe::default();
            let m = coupler_with_reference(
                settings,
                g,
                &probe,
                &refs[&g.region_length.to_bits()],
                CouplerOptions::default(),
            )?;
            Ok(row(p.clone(), &m, grid))
        })
        .collect::<Result<_>>()?;
    select_best(grid, table)
}

/// Writes a sweep table as CSV: swept parameters, then phase diagnostics.
pub fn write_table_csv(path: &Path, names: &[String], table: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = names.to_vec();
    header.extend(
        [
            "phase_rad",
            "phase_over_pi",
            "phase_error_rad",
            "transmitted_norm",
            "overlap",
            "transmitted_ok",
            "within_tolerance",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    w.write_record(&header)?;
    for r in table {
        let mut rec: Vec<String> = r.params.iter().map(|v| format!("{v}")).collect();
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        rec.push(opt(r.phase));
        rec.push(opt(r.phase.map(|p| p / std::f64::consts::PI)));
        rec.push(opt(r.phase_error));
        rec.push(format!("{}", r.transmitted));
        rec.push(format!("{}", r.overlap));
        rec.push(r.transmitted_ok.to_string());
        rec.push(r.within_tolerance.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_result_json(path: &Path, result: &CalibrationResult) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, result)?;
    writeln!(f)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_with(params: Vec<f64>, err: Option<f64>, ok: bool) -> SweepRow {
        SweepRow {
            params,
            phase: err,
            phase_error: err,
            transmitted: if ok { 1.0 } else { 0.5 },
            overlap: 1.0,
            transmitted_ok: ok,
            within_tolerance: err.is_some(),
        }
    }

    #[test]
    fn axis_values_include_endpoints() {
        assert_eq!(SweepAxis::new("h", 1.0, 2.0, 0.25).values().len(), 5);
        assert_eq!(SweepAxis::fixed("h", 3.0).values(), vec![3.0]);
    }

    #[test]
    fn points_are_lexicographic() {
        let g = SweepGrid {
            axes: vec![
                SweepAxis::new("height", 0.0, 1.0, 1.0),
                SweepAxis::new("length", 7.0, 8.0, 1.0),
            ],
            target: 0.0,
            tolerance: 1.0,
        };
        assert_eq!(
            g.points(),
            vec![
                vec![0.0, 7.0],
                vec![0.0, 8.0],
                vec![1.0, 7.0],
                vec![1.0, 8.0]
            ]
        );
        assert!(g.validate(&["height", "length"]).is_ok());
        assert!(g.validate(&["region_length"]).is_err());
    }

    #[test]
    fn best_is_first_minimal_feasible_row() {
        let g = SweepGrid {
            axes: vec![SweepAxis::new("height", 0.0, 3.0, 1.0)],
            target: 0.0,
            tolerance: 1.0,
        };
        let table = vec![
            row_with(vec![0.0], Some(0.0), false),
            row_with(vec![1.0], Some(0.2), true),
            row_with(vec![2.0], Some(0.1), true),
            row_with(vec![3.0], Some(0.1), true),
        ];
        let r = select_best(&g, table).unwrap();
        assert_eq!(r.best, vec![2.0]);
        assert_eq!(r.table.len(), 4);
    }

    #[test]
    fn infeasible_table_is_returned_with_the_error() {
        let g = SweepGrid {
            axes: vec![SweepAxis::new("height", 0.0, 1.0, 1.0)],
            target: 0.0,
            tolerance: 1.0,
        };
        let table = vec![
            row_with(vec![0.0], None, true),
            row_with(vec![1.0], Some(0.0), false),
        ];
        match select_best(&g, table) {
            Err(Error::NoFeasiblePoint { table }) => assert_eq!(table.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
