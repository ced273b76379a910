use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use shorwire::calibrate::{
    sweep_barrier, sweep_coupler, write_result_json, write_table_csv, CalibrationResult,
};
use shorwire::classical::table1;
use shorwire::config::RunConfig;
use shorwire::report::{self, PhysicalOptions, RunMode};
use shorwire::verify;
use shorwire::wavesim::DeviceLayout;

#[derive(Parser)]
#[command(
    name = "shorwire",
    version,
    about = "Compiled Shor factoring of 15 on flying electron qubits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the compiled circuit and write a JSON report plus CSV bundle.
    Run {
        #[arg(long, value_parser = ["11", "2"], default_value = "11")]
        co_prime: String,
        #[arg(long, default_value = "ideal", value_parser = ["ideal", "detuned", "physical"])]
        mode: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also compare rank-limited and dense propagation on a coarse grid.
        #[arg(long)]
        dense_oracle: bool,
        /// Accepted for interface stability; the simulator has no stochastic parts.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep device geometry for the phase shifter and/or coupler phase.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the invariant suite; exits nonzero if any check fails.
    Verify {
        /// Supplies the coupler geometry and material; grids are always coarse.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print C^x mod 15 for every co-prime and x in {0, 1, 2, 4}.
    Table1,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn run(
    co_prime: &str,
    mode: &str,
    config: Option<&Path>,
    out: &Path,
    dense_oracle: bool,
) -> Result<()> {
    let c: u64 = co_prime.parse()?;
    let mode: RunMode = mode.parse()?;
    let config = load_config(config)?;
    let options = PhysicalOptions {
        dense_cross_check: dense_oracle,
        ..Default::default()
    };
    let r = report::run_shor15(c, mode, &config, options)?;
    std::fs::create_dir_all(out)?;
    report::write_json(&r, &out.join("report.json"))?;
    report::write_csv_bundle(&r, out)?;

    println!("N=15 C={c} mode={mode:?}");
    println!("fidelity {:.6}", r.fidelity);
    for e in &r.linear_entropies {
        println!(
            "linear entropy {} {:.6}",
            e.qubits.join(","),
            e.linear_entropy
        );
    }
    for o in &r.outcomes {
        println!(
            "outcome {} p={:.6} {:?} r={} factors={}",
            o.reported,
            o.probability,
            o.status,
            o.order.map(|r| r.to_string()).unwrap_or("-".into()),
            o.factors
                .map(|(p, q)| format!("{p}x{q}"))
                .unwrap_or("-".into()),
        );
    }
    println!("success probability {:.6}", r.success_probability);
    if let Some(d) = &r.diagnostics {
        println!(
            "norm drift {:.3e}, max rank {}, max discarded {:.3e}, wall {:.1} s",
            d.norm_drift, d.max_rank, d.max_discarded, d.wall_seconds
        );
    }
    if let Some(x) = &r.cross_check {
        println!("dense cross-check max |Δρ| {:.3e}", x.max_abs_difference);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn print_result(kind: &str, r: &CalibrationResult) {
    let pi = std::f64::consts::PI;
    println!(
        "{kind}: best {:?} = {:?}, phase {:.4}π (target {:.4}π, error {:.3e} rad)",
        r.parameters,
        r.best,
        r.achieved_phase / pi,
        r.target / pi,
        r.phase_error
    );
}

fn calibrate(config: &Path, out: &Path) -> Result<bool> {
    let config = load_config(Some(config))?;
    let settings = config.settings()?;
    let Some(cal) = &config.calibration else {
        bail!("config has no `calibration` section");
    };
    std::fs::create_dir_all(out)?;
    let mut all_ok = true;
    let mut emit =
        |kind: &str, names: Vec<String>, r: shorwire::Result<CalibrationResult>| -> Result<()> {
            let r = match r {
                Ok(r) => r,
                Err(shorwire::Error::NoFeasiblePoint { table }) => {
                    write_table_csv(&out.join(format!("{kind}_sweep.csv")), &names, &table)?;
                    println!("{kind}: no feasible point, table written");
                    all_ok = false;
                    return Ok(());
                }
                Err(e) => return Err(e.into()),
            };
            write_table_csv(&out.join(format!("{kind}_sweep.csv")), &names, &r.table)?;
            write_result_json(&out.join(format!("{kind}_calibration.json")), &r)?;
            print_result(kind, &r);
            Ok(())
        };
    if let Some(b) = &cal.barrier {
        let names = b.grid.axes.iter().map(|a| a.name.clone()).collect();
        emit(
            "barrier",
            names,
            sweep_barrier(&b.grid, &b.base, b.wire, &settings),
        )?;
    }
    if let Some(c) = &cal.coupler {
        let names = c.grid.axes.iter().map(|a| a.name.clone()).collect();
        emit("coupler", names, sweep_coupler(&c.grid, &c.base, &settings))?;
    }
    println!("wrote {}", out.display());
    Ok(all_ok)
}

fn run_verify(config: Option<&Path>) -> Result<bool> {
    let config = load_config(config)?;
    let mut settings = verify::verify_settings();
    settings.material = config.settings()?.material;
    let layout = config
        .device
        .clone()
        .unwrap_or_else(DeviceLayout::calibrated);
    let checks = verify::run_all(&settings, &layout.coupler)?;
    let mut failed = Vec::new();
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        if !c.passed {
            failed.push(c.name.clone());
        }
    }
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        Ok(true)
    } else {
        eprintln!("failing checks: {}", failed.join("; "));
        Ok(false)
    }
}

fn print_table1() {
    let cs = shorwire::classical::coprimes(15);
    let header: Vec<String> = cs.iter().map(|c| format!("{c:>3}")).collect();
    println!("C^x mod 15, C = {}", header.join(" "));
    for (x, row) in table1() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>3}")).collect();
        println!("x = {x}{:>10}{}", "", cells.join(" "));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run {
            co_prime,
            mode,
            config,
            out,
            dense_oracle,
            seed: _,
        } => run(co_prime, mode, config.as_deref(), out, *dense_oracle).map(|_| true),
        Command::Calibrate {
            config,
            out,
            seed: _,
        } => calibrate(config, out),
        Command::Verify { config, seed: _ } => run_verify(config.as_deref()),
        Command::Table1 => {
            print_table1();
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
