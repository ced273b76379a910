//! End-to-end N = 15 experiments and their JSON / CSV reports.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classical::{classify_reported, FactorStatus, ShorInstance};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::qlogic::networks::{self, DETUNED_GAMMA, DETUNED_PHI};
use crate::qlogic::{fidelity, linear_entropy, DensityMatrix, GateSequence, StateVector};
use crate::wavesim::network::{run_physical_network, NetworkMode, PhysicalState, RunDiagnostics};
use crate::wavesim::state::CouplerOptions;
use crate::wavesim::SimSettings;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Ideal,
    Detuned,
    Physical,
}

impl std::str::FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(RunMode::Ideal),
            "detuned" => Ok(RunMode::Detuned),
            "physical" => Ok(RunMode::Physical),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

/// Square complex matrix as rows of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<[f64; 2]>>,
}

impl ComplexMatrix {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let n = rho.dim();
        let e = rho.entries();
        ComplexMatrix {
            labels: rho.labels().to_vec(),
            rows: (0..n)
                .map(|i| (0..n).map(|j| [e[(i, j)].re, e[(i, j)].im]).collect())
                .collect(),
        }
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        let n = self.rows.len();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            crate::C64::new(self.rows[i][j][0], self.rows[i][j][1])
        });
        DensityMatrix::new(self.labels.clone(), m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEntry {
    pub qubits: Vec<String>,
    pub linear_entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeEntry {
    /// Bit-reversed readout, as used for `z`.
    pub reported: String,
    /// Argument register in ket order (x1 x0).
    pub raw: String,
    pub z: u64,
    pub probability: f64,
    pub status: FactorStatus,
    pub order: Option<u64>,
    pub factors: Option<(u64, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GatePhases {
    pub phi: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionalDensity {
    pub qubit: String,
    pub y: Vec<f64>,
    pub wire0: Vec<f64>,
    pub wire1: Vec<f64>,
}

/// Coarse-grid comparison of the rank-limited and dense representations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub grid_points: usize,
    pub grid_spacing: f64,
    pub max_abs_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub instance: ShorInstance,
    pub mode: RunMode,
    /// Register order; the first label is the most significant bit.
    pub register: Vec<String>,
    pub argument_qubits: Vec<String>,
    pub phases: Option<GatePhases>,
    pub register_density: ComplexMatrix,
    pub argument_density: ComplexMatrix,
    pub fidelity: f64,
    pub linear_entropies: Vec<EntropyEntry>,
    pub outcomes: Vec<OutcomeEntry>,
    pub success_probability: f64,
    pub positional_densities: Vec<PositionalDensity>,
    pub diagnostics: Option<RunDiagnostics>,
    pub cross_check: Option<CrossCheck>,
}

struct Circuit {
    instance: ShorInstance,
    register: Vec<&'static str>,
    argument: Vec<&'static str>,
    target: StateVector,
}

fn circuit(c: u64) -> Result<Circuit> {
    let instance = ShorInstance::compiled(c)?;
    Ok(match c {
        11 => Circuit {
            instance,
            register: networks::C11_REGISTER.to_vec(),
            argument: networks::C11_ARGUMENT.to_vec(),
            target: networks::ghz_target(),
        },
        _ => Circuit {
            instance,
            register: networks::C2_REGISTER.to_vec(),
            argument: networks::C2_ARGUMENT.to_vec(),
            target: networks::bell_product_target(),
        },
    })
}

fn network(c: u64, phi: f64, gamma: f64) -> GateSequence {
    if c == 11 {
        networks::network_c11_with(phi, gamma)
    } else {
        networks::network_c2_with(gamma)
    }
}

/// Options of physical runs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhysicalOptions {
    /// Also run the network at coarse resolution in both representations.
    pub dense_cross_check: bool,
    pub coupler: CouplerOptions,
}

/// Outcome table over the full argument register; argument qubits absent
/// from the circuit register are in wire 0.
fn outcomes(
    instance: &ShorInstance,
    circuit_arg: &[&str],
    rho: &DensityMatrix,
) -> Result<Vec<OutcomeEntry>> {
    let width = instance.arg_bits as usize;
    // argument qubit x_i sits at raw position width-1-i
    let names: Vec<String> = (0..width).rev().map(|i| format!("x{i}")).collect();
    let probs = rho.logical_probabilities();
    let mut out = Vec::new();
    for raw_index in 0..1usize << width {
        let raw: String = format!("{:0width$b}", raw_index, width = width);
        let mut p = 0.0;
        let mut reachable = true;
        for (name, bit) in names.iter().zip(raw.chars()) {
            if !circuit_arg.contains(&name.as_str()) && bit != '0' {
                reachable = false;
            }
        }
        if reachable {
            let sub: String = circuit_arg
                .iter()
                .map(|q| {
                    raw.as_bytes()[names.iter().position(|n| n == q).expect("argument qubit")]
                        as char
                })
                .collect();
            p = probs
                .iter()
                .find(|(s, _)| *s == sub)
                .map(|(_, v)| *v)
                .unwrap_or(0.0);
        }
        let reported: String = raw.chars().rev().collect();
        if !reachable {
            continue;
        }
        let c = classify_reported(instance, &reported)?;
        out.push(OutcomeEntry {
            reported,
            raw,
            z: c.outcome.z,
            probability: p,
            status: c.result.status,
            order: c.result.order,
            factors: c.result.factors,
        });
    }
    out.sort_by(|a, b| a.reported.cmp(&b.reported));
    Ok(out)
}

fn entropies(rho_register: &DensityMatrix, argument: &[&str]) -> Result<Vec<EntropyEntry>> {
    let mut out: Vec<EntropyEntry> = argument
        .iter()
        .map(|q| {
            Ok(EntropyEntry {
                qubits: vec![q.to_string()],
                linear_entropy: linear_entropy(&rho_register.partial_trace(&[q])?),
            })
        })
        .collect::<Result<_>>()?;
    if argument.len() > 1 {
        out.push(EntropyEntry {
            qubits: argument.iter().map(|s| s.to_string()).collect(),
            linear_entropy: linear_entropy(&rho_register.partial_trace(argument)?),
        });
    }
    Ok(out)
}

fn assemble(
    c: &Circuit,
    mode: RunMode,
    phases: Option<GatePhases>,
    rho: DensityMatrix,
    positional_densities: Vec<PositionalDensity>,
    diagnostics: Option<RunDiagnostics>,
    cross_check: Option<CrossCheck>,
) -> Result<RunReport> {
    let arg_rho = rho.partial_trace(&c.argument)?;
    let outcomes = outcomes(&c.instance, &c.argument, &arg_rho)?;
    let success_probability = outcomes
        .iter()
        .filter(|o| o.status == FactorStatus::Success)
        .map(|o| o.probability)
        .sum();
    Ok(RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        instance: c.instance.clone(),
        mode,
        register: c.register.iter().map(|s| s.to_string()).collect(),
        argument_qubits: c.argument.iter().map(|s| s.to_string()).collect(),
        phases,
        fidelity: fidelity(&rho, &c.target)?,
        linear_entropies: entropies(&rho, &c.argument)?,
        register_density: ComplexMatrix::from_density(&rho),
        argument_density: ComplexMatrix::from_density(&arg_rho),
        outcomes,
        success_probability,
        positional_densities,
        diagnostics,
        cross_check,
    })
}

/// Runs the compiled circuit for co-prime `c` (11 or 2).
pub fn run_shor15(
    c: u64,
    mode: RunMode,
    config: &RunConfig,
    options: PhysicalOptions,
) -> Result<RunReport> {
    let circ = circuit(c)?;
    match mode {
        RunMode::Ideal | RunMode::Detuned => {
            let (phi, gamma) = if mode == RunMode::Ideal {
                (std::f64::consts::PI, std::f64::consts::PI)
            } else {
                (DETUNED_PHI, DETUNED_GAMMA)
            };
            let state = StateVector::zero(&circ.register)?.run(&network(c, phi, gamma))?;
            let rho = DensityMatrix::from_state(&state);
            assemble(
                &circ,
                mode,
                Some(GatePhases { phi, gamma }),
                rho,
                Vec::new(),
                None,
                None,
            )
        }
        RunMode::Physical => {
            let layout = config.layout()?;
            let settings = config.settings()?;
            let net = network(c, std::f64::consts::PI, std::f64::consts::PI);
            let run = run_physical_network(
                &net,
                &circ.register,
                layout,
                &settings,
                NetworkMode::RankLimited,
                options.coupler,
            )?;
            let rho = run.state.logical_density_matrix(&circ.register)?;
            let window = *run.state.window();
            let densities = circ
                .argument
                .iter()
                .map(|q| {
                    let (w0, w1) = run.state.positional_density(q)?;
                    Ok(PositionalDensity {
                        qubit: q.to_string(),
                        y: window.positions(),
                        wire0: w0,
                        wire1: w1,
                    })
                })
                .collect::<Result<_>>()?;
            let cross_check = if options.dense_cross_check {
                Some(cross_check(
                    &net,
                    &circ.register,
                    layout,
                    &settings,
                    options.coupler,
                )?)
            } else {
                None
            };
            assemble(
                &circ,
                mode,
                None,
                rho,
                densities,
                Some(run.diagnostics),
                cross_check,
            )
        }
    }
}

/// Largest entrywise difference between the rank-limited and dense logical
/// density matrices on the coarse grid.
pub fn cross_check(
    net: &GateSequence,
    register: &[&str],
    layout: &crate::wavesim::DeviceLayout,
    settings: &SimSettings,
    coupler: CouplerOptions,
) -> Result<CrossCheck> {
    let mut coarse = settings.clone();
    coarse.grid = crate::wavesim::GridSettings {
        rank_cap: settings.grid.rank_cap,
        truncation_tol: settings.grid.truncation_tol,
        dt: settings.grid.dt,
        ..crate::wavesim::GridSettings::coarse()
    };
    let a = run_physical_network(
        net,
        register,
        layout,
        &coarse,
        NetworkMode::RankLimited,
        coupler,
    )?;
    let b = run_physical_network(
        net,
        register,
        layout,
        &coarse,
        NetworkMode::DenseOracle,
        coupler,
    )?;
    let ra = a.state.logical_density_matrix(register)?;
    let rb = b.state.logical_density_matrix(register)?;
    Ok(CrossCheck {
        grid_points: coarse.grid.points,
        grid_spacing: coarse.grid.spacing,
        max_abs_difference: (ra.entries() - rb.entries())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
    })
}

/// Largest entrywise difference of two physical states' logical density matrices.
pub fn density_difference(a: &PhysicalState, b: &PhysicalState, keep: &[&str]) -> Result<f64> {
    let ra = a.logical_density_matrix(keep)?;
    let rb = b.logical_density_matrix(keep)?;
    Ok((ra.entries() - rb.entries())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

pub fn to_json(report: &RunReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<RunReport> {
    let r: RunReport = serde_json::from_str(text)?;
    if r.schema_version != REPORT_SCHEMA_VERSION {
        return Err(Error::InvalidArgument(format!(
            "unsupported report schema version {}",
            r.schema_version
        )));
    }
    Ok(r)
}

pub fn write_json(report: &RunReport, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(report)?)?;
    Ok(())
}

fn write_matrix(path: &Path, m: &ComplexMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row", "col", "re", "im"])?;
    for (i, row) in m.rows.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            w.write_record([
                i.to_string(),
                j.to_string(),
                z[0].to_string(),
                z[1].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV bundle in `dir`: density matrices, probabilities, classified
/// outcomes, entropies and one positional-density file per argument qubit.
pub fn write_csv_bundle(report: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_matrix(&dir.join("density_matrix.csv"), &report.argument_density)?;
    write_matrix(
        &dir.join("register_density_matrix.csv"),
        &report.register_density,
    )?;

    let mut w = csv::Writer::from_path(dir.join("probabilities.csv"))?;
    w.write_record(["reported", "raw", "probability"])?;
    for o in &report.outcomes {
        w.write_record([o.reported.clone(), o.raw.clone(), o.probability.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("outcomes.csv"))?;
    w.write_record([
        "reported",
        "z",
        "probability",
        "status",
        "order",
        "factor_p",
        "factor_q",
    ])?;
    for o in &report.outcomes {
        let status = serde_json::to_value(o.status)?;
        let (p, q) = o
            .factors
            .map(|(p, q)| (p.to_string(), q.to_string()))
            .unwrap_or_default();
        w.write_record([
            o.reported.clone(),
            o.z.to_string(),
            o.probability.to_string(),
            status.as_str().unwrap_or_default().to_string(),
            o.order.map(|r| r.to_string()).unwrap_or_default(),
            p,
            q,
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("entropies.csv"))?;
    w.write_record(["qubits", "linear_entropy"])?;
    for e in &report.linear_entropies {
        w.write_record([e.qubits.join(" "), e.linear_entropy.to_string()])?;
    }
    w.flush()?;

    for d in &report.positional_densities {
        let mut w =
            csv::Writer::from_path(dir.join(format!("positional_density_{}.csv", d.qubit)))?;
        w.write_record(["y_nm", "wire0", "wire1"])?;
        for i in 0..d.y.len() {
            w.write_record([
                d.y[i].to_string(),
                d.wire0[i].to_string(),
                d.wire1[i].to_string(),
            ])?;
        }
        w.flush()?;
    }

    let mut f = std::fs::File::create(dir.join("summary.csv"))?;
    writeln!(f, "quantity,value")?;
    writeln!(f, "fidelity,{}", report.fidelity)?;
    writeln!(f, "success_probability,{}", report.success_probability)?;
    if let Some(d) = &report.diagnostics {
        writeln!(f, "norm_drift,{}", d.norm_drift)?;
        writeln!(f, "max_discarded,{}", d.max_discarded)?;
        writeln!(f, "max_rank,{}", d.max_rank)?;
    }
    if let Some(c) = &report.cross_check {
        writeln!(
            f,
            "dense_cross_check_max_abs_difference,{}",
            c.max_abs_difference
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal(c: u64) -> RunReport {
        run_shor15(
            c,
            RunMode::Ideal,
            &RunConfig::default(),
            PhysicalOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn ideal_c11_report() {
        let r = ideal(11);
        assert!((r.fidelity - 1.0).abs() < 1e-12);
        let rep: Vec<&str> = r.outcomes.iter().map(|o| o.reported.as_str()).collect();
        assert_eq!(rep, vec!["00", "10"]);
        assert!((r.outcomes[0].probability - 0.5).abs() < 1e-12);
        assert_eq!(r.outcomes[1].order, Some(2));
        assert_eq!(r.outcomes[1].factors, Some((3, 5)));
        assert!((r.success_probability - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ideal_c2_report() {
        let r = ideal(2);
        assert_eq!(r.outcomes.len(), 4);
        for o in &r.outcomes {
            assert!((o.probability - 0.25).abs() < 1e-12);
        }
        assert!((r.success_probability - 0.5).abs() < 1e-12);
        let pair = r.linear_entropies.last().unwrap();
        assert_eq!(pair.qubits, vec!["x1", "x0"]);
        assert!((pair.linear_entropy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_stability() {
        let r = run_shor15(
            11,
            RunMode::Detuned,
            &RunConfig::default(),
            PhysicalOptions::default(),
        )
        .unwrap();
        let a = to_json(&r).unwrap();
        assert_eq!(a, to_json(&r).unwrap());
        let back = from_json(&a).unwrap();
        assert_eq!(back, r);
        let rho = back.register_density.to_density().unwrap();
        assert!(rho.check().is_valid(1e-12));
    }

    #[test]
    fn physical_mode_needs_layout() {
        let e = run_shor15(
            11,
            RunMode::Physical,
            &RunConfig::default(),
            PhysicalOptions::default(),
        );
        assert!(matches!(e, Err(Error::MissingLayout)));
        assert!(matches!(
            run_shor15(
                7,
                RunMode::Ideal,
                &RunConfig::default(),
                PhysicalOptions::default()
            ),
            Err(Error::NotCompiled(7))
        ));
    }

    #[test]
    fn csv_bundle_files() {
        let dir = tempfile::tempdir().unwrap();
        write_csv_bundle(&ideal(2), dir.path()).unwrap();
        for f in [
            "density_matrix.csv",
            "probabilities.csv",
            "outcomes.csv",
            "entropies.csv",
            "summary.csv",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let text = std::fs::read_to_string(dir.path().join("outcomes.csv")).unwrap();
        assert!(text.contains("10,2,"));
        assert!(text.contains("trivial"));
    }
}
