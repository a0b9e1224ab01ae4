//! Command-line front end: synthesize, verify, simulate, export-region.
//!
//! Exit codes: 0 success; 1 config/usage/i-o errors; 2 empty bank from
//! synthesis; 3 verification failure; 4 simulation start outside the safe
//! set; 5 a constraint violation during simulation (the safety claim
//! failed, reported even though outputs are still written).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DVector;

use minquad_core::barrier::MinQuadraticBarrier;
use minquad_core::plant::{Pendulum, Plant, SpringMass};
use minquad_core::sim::{
    edge_start_states, plane_projections, run_edge_trajectory, run_scenario, ScenarioResult,
    SimError, ViolationReport,
};

use crate::bank::{BankError, BankFile};
use crate::config::{JobConfig, PlantSpec};
use crate::csvio::write_trajectory_csv;
use crate::region::{parse_projection, write_region_csv};
use crate::scenario::{builtin, EdgeSpec, ScenarioSpec, DEFAULT_EPS_HI, DEFAULT_EPS_LO};
use crate::synth::{
    synthesize_bank, verify_certificate, Certificate, EquilibriumStatus, MarginReport, SynthError,
};

#[derive(Parser)]
#[command(
    name = "minquad",
    about = "Min-quadratic barrier synthesis, verification, and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Synthesize a barrier bank from a JSON job config.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-verify every pair of a bank against freshly rebuilt LDI models.
    Verify {
        #[arg(long)]
        bank: PathBuf,
    },
    /// Run a named scenario (position, velocity, no-return,
    /// edge-trajectories) and export trajectory CSVs plus a summary.
    Simulate {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        eps_hi: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        eps_lo: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Keep every n-th CSV row (the final row is always kept).
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Export projected safe-region boundary loops as CSV.
    ExportRegion {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        proj: String,
        #[arg(long)]
        out: PathBuf,
    },
}

pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

type CmdResult = Result<(), Failure>;

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Synthesize { config, out } => cmd_synthesize(&config, &out),
        Command::Verify { bank } => cmd_verify(&bank),
        Command::Simulate {
            bank,
            scenario,
            out,
            eps_hi,
            eps_lo,
            step,
            stride,
        } => cmd_simulate(&bank, &scenario, &out, eps_hi, eps_lo, step, stride),
        Command::ExportRegion { bank, proj, out } => cmd_export_region(&bank, &proj, &out),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn config_err(message: impl Into<String>) -> Failure {
    Failure::new(1, message)
}

// ---------------------------------------------------------------------------
// synthesize
// ---------------------------------------------------------------------------

fn cmd_synthesize(config_path: &Path, out_path: &Path) -> CmdResult {
    let text = fs::read_to_string(config_path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", config_path.display())))?;
    let job = JobConfig::from_json(&text)
        .map_err(|e| config_err(format!("cannot parse {}: {e}", config_path.display())))?;
    job.synthesis
        .validate()
        .map_err(|e| config_err(e.to_string()))?;
    let plant = job.plant.build();
    let equilibria = job.plant.equilibria(&job.grid);
    if equilibria.is_empty() {
        return Err(config_err("grid produced no equilibria"));
    }
    let result = match synthesize_bank(plant.as_ref(), &equilibria, &job.synthesis) {
        Ok(r) => r,
        Err(SynthError::EmptyBank) => {
            return Err(Failure::new(2, "no equilibrium was feasible (empty bank)"))
        }
        Err(e) => return Err(config_err(e.to_string())),
    };

    println!(
        "{:>5}  {:>12}  {:<10}  {:>12}  {:>12}  {:>5}",
        "index",
        plant.state_names()[0],
        "status",
        "log_det",
        "min_margin",
        "iters"
    );
    for (i, outcome) in result.outcomes.iter().enumerate() {
        match &outcome.status {
            EquilibriumStatus::Feasible {
                log_det,
                min_margin,
                outer_iters,
            } => println!(
                "{:>5}  {:>12.6}  {:<10}  {:>12.6}  {:>12.3e}  {:>5}",
                i, outcome.x_e[0], "feasible", log_det, min_margin, outer_iters
            ),
            EquilibriumStatus::Skipped { reason } => println!(
                "{:>5}  {:>12.6}  {:<10}  {reason}",
                i, outcome.x_e[0], "skipped"
            ),
        }
    }
    let feasible = result.bank.len();
    println!("feasible pairs: {feasible} / {}", equilibria.len());

    let file = BankFile::from_synthesis(job.plant.clone(), job.synthesis, &result);
    file.save(out_path)
        .map_err(|e| config_err(format!("cannot write {}: {e}", out_path.display())))?;
    println!("bank written to {}", out_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn load_bank(path: &Path) -> Result<BankFile, Failure> {
    BankFile::load(path).map_err(|e| match e {
        BankError::Io(_) | BankError::Parse(_) | BankError::SchemaVersion(_) => {
            config_err(format!("cannot load {}: {e}", path.display()))
        }
        other => config_err(format!("invalid bank {}: {other}", path.display())),
    })
}

fn cmd_verify(bank_path: &Path) -> CmdResult {
    let file = load_bank(bank_path)?;
    let plant = file.plant.build();
    let mut failing: Vec<(usize, String)> = Vec::new();
    println!(
        "{:>5}  {:>12}  {:>12}  worst_constraint",
        "pair",
        plant.state_names()[0],
        "min_margin"
    );
    for (i, rec) in file.pairs.iter().enumerate() {
        let x_e = DVector::from_row_slice(&rec.x_e);
        let outcome = verify_pair(plant.as_ref(), rec, &x_e, &file);
        match outcome {
            Ok(report) => {
                let worst = report.worst().map(|w| w.label.clone()).unwrap_or_default();
                println!(
                    "{:>5}  {:>12.6}  {:>12.3e}  {}",
                    i,
                    x_e[0],
                    report.min(),
                    worst
                );
            }
            Err(reason) => {
                println!("{:>5}  {:>12.6}  {:<12}  {}", i, x_e[0], "FAIL", reason);
                failing.push((i, reason));
            }
        }
    }
    if file.pairs.is_empty() {
        return Err(Failure::new(3, "bank contains no pairs"));
    }
    if failing.is_empty() {
        println!("all {} pairs verified", file.pairs.len());
        Ok(())
    } else {
        let list = failing
            .iter()
            .map(|(i, _)| i.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        Err(Failure::new(
            3,
            format!("verification failed for pairs [{list}]"),
        ))
    }
}

fn verify_pair(
    plant: &dyn Plant,
    rec: &crate::bank::PairRecord,
    x_e: &DVector<f64>,
    file: &BankFile,
) -> Result<MarginReport, String> {
    let ldi = plant.linearize(x_e).map_err(|e| e.to_string())?;
    let q = nalgebra::DMatrix::from_fn(rec.q.len(), rec.q[0].len(), |r, c| rec.q[r][c]);
    let k = nalgebra::DMatrix::from_fn(rec.k.len(), rec.k[0].len(), |r, c| rec.k[r][c]);
    let y = &k * &q;
    let cert =
        Certificate::new(q, y, rec.log_det, MarginReport::default()).map_err(|e| e.to_string())?;
    verify_certificate(&cert, &ldi, &file.synthesis).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    bank_path: &Path,
    scenario_name: &str,
    out_dir: &Path,
    eps_hi: Option<f64>,
    eps_lo: Option<f64>,
    step: Option<f64>,
    stride: Option<usize>,
) -> CmdResult {
    let file = load_bank(bank_path)?;
    let (_, bank) = file
        .build()
        .map_err(|e| config_err(format!("invalid bank: {e}")))?;
    fs::create_dir_all(out_dir)
        .map_err(|e| config_err(format!("cannot create {}: {e}", out_dir.display())))?;
    match scenario_name {
        "position" | "velocity" | "no-return" => {
            let pendulum = match &file.plant {
                PlantSpec::Pendulum(p) => {
                    Pendulum::new(p.m, p.l, p.g, p.theta_c, p.omega_max, p.tau_max)
                }
                other => {
                    return Err(config_err(format!(
                        "scenario `{scenario_name}` needs a pendulum bank, got `{}`",
                        other.name()
                    )))
                }
            };
            let mut spec = builtin(scenario_name).expect("known scenario");
            if let Some(v) = eps_hi {
                spec.eps_hi = v;
            }
            if let Some(v) = eps_lo {
                spec.eps_lo = v;
            }
            if let Some(v) = step {
                spec.step = v;
            }
            run_pendulum_scenario(&pendulum, &bank, &spec, out_dir, stride.unwrap_or(1))
        }
        "edge-trajectories" => {
            let spring_mass = match &file.plant {
                PlantSpec::SpringMass(p) => SpringMass::new(
                    p.m1,
                    p.m2,
                    p.k,
                    p.pos_max,
                    p.vel_max,
                    p.deflection_max,
                    p.u_max,
                ),
                other => {
                    return Err(config_err(format!(
                        "edge-trajectories needs a spring-mass bank, got `{}`",
                        other.name()
                    )))
                }
            };
            let mut spec = EdgeSpec::default();
            if let Some(v) = step {
                spec.step = v;
            }
            if let Some(v) = eps_lo {
                spec.start_level = v;
            }
            let _ = eps_hi;
            run_edge_batch(&spring_mass, &bank, &spec, out_dir, stride.unwrap_or(10))
        }
        other => Err(config_err(format!(
            "unknown scenario `{other}` (expected position, velocity, no-return, edge-trajectories)"
        ))),
    }
}

fn map_sim_error(e: SimError) -> Failure {
    match e {
        SimError::StartOutsideSafeSet { .. } => Failure::new(4, e.to_string()),
        other => config_err(other.to_string()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))
}

fn run_pendulum_scenario(
    pendulum: &Pendulum,
    bank: &MinQuadraticBarrier,
    spec: &ScenarioSpec,
    out_dir: &Path,
    stride: usize,
) -> CmdResult {
    let scenario = spec
        .to_scenario()
        .ok_or_else(|| config_err("invalid scenario timing or reference"))?;
    let supervisor = spec
        .supervisor()
        .ok_or_else(|| config_err("invalid supervisor thresholds"))?;
    let result =
        run_scenario(pendulum, bank, &scenario, supervisor, spec.gains()).map_err(map_sim_error)?;

    let csv_path = out_dir.join(format!("{}.csv", spec.name));
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, &result.trajectory, stride)
        .map_err(|e| config_err(e.to_string()))?;
    write_text(&csv_path, std::str::from_utf8(&buf).expect("csv utf-8"))?;

    let echo = serde_json::to_string_pretty(spec).expect("scenario echo");
    write_text(&out_dir.join(format!("{}_scenario.json", spec.name)), &echo)?;

    let summary = scenario_summary(pendulum, &result);
    write_text(
        &out_dir.join(format!("{}_summary.txt", spec.name)),
        &summary,
    )?;
    print!("{summary}");

    if !result.violations.is_clean() {
        return Err(Failure::new(
            5,
            format!(
                "constraint violations during `{}`: {:?}",
                spec.name, result.violations.first
            ),
        ));
    }
    Ok(())
}

fn scenario_summary(pendulum: &Pendulum, result: &ScenarioResult) -> String {
    let max_state = result.trajectory.max_abs_state();
    let max_input = result.trajectory.max_abs_input();
    let names = pendulum.state_names();
    let mut out = String::new();
    for (i, name) in names.iter().enumerate() {
        out.push_str(&format!("max_abs_{name} = {:.6}\n", max_state[i]));
    }
    out.push_str(&format!("max_abs_tau_applied = {:.6}\n", max_input[0]));
    out.push_str(&format!(
        "state_violations = {}\ninput_violations = {}\nrequested_input_violations = {}\n",
        result.violations.state, result.violations.input, result.violations.requested_input
    ));
    out.push_str(&format!("mode_switches = {}\n", result.mode_switches));
    out.push_str(&format!(
        "final_barrier = {:.6}\n",
        result
            .trajectory
            .barrier_values()
            .last()
            .copied()
            .unwrap_or(f64::NAN)
    ));
    out
}

fn run_edge_batch(
    plant: &SpringMass,
    bank: &MinQuadraticBarrier,
    spec: &EdgeSpec,
    out_dir: &Path,
    stride: usize,
) -> CmdResult {
    let names = plant.state_names();
    let echo = serde_json::to_string_pretty(spec).expect("edge echo");
    write_text(&out_dir.join("edge_spec.json"), &echo)?;

    let mut runs = 0usize;
    let mut max_barrier = f64::NEG_INFINITY;
    let mut worst_terminal = f64::NEG_INFINITY;
    let mut converged = 0usize;
    let mut violations = ViolationReport::default();
    for (i, j) in plane_projections(plant.state_dim()) {
        let starts = edge_start_states(bank, (i, j), spec.count_per_projection, spec.start_level);
        for (k, x0) in starts.into_iter().enumerate() {
            let (trajectory, report) =
                run_edge_trajectory(plant, bank, x0, spec.horizon, spec.step, spec.stop_level)
                    .map_err(map_sim_error)?;
            let peak = trajectory
                .barrier_values()
                .iter()
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let terminal = *trajectory.barrier_values().last().expect("nonempty run");
            max_barrier = max_barrier.max(peak);
            worst_terminal = worst_terminal.max(terminal);
            if terminal <= -0.99 {
                converged += 1;
            }
            violations.state += report.state;
            violations.input += report.input;
            if violations.first.is_none() {
                violations.first = report.first;
            }
            let path = out_dir.join(format!("edge_{}-{}_{k:02}.csv", names[i], names[j]));
            let mut buf = Vec::new();
            write_trajectory_csv(&mut buf, &trajectory, stride)
                .map_err(|e| config_err(e.to_string()))?;
            write_text(&path, std::str::from_utf8(&buf).expect("csv utf-8"))?;
            runs += 1;
        }
    }
    let mut summary = String::new();
    summary.push_str(&format!("runs = {runs}\n"));
    summary.push_str(&format!("max_barrier_along_runs = {max_barrier:.6}\n"));
    summary.push_str(&format!("worst_terminal_barrier = {worst_terminal:.6}\n"));
    summary.push_str(&format!("converged_runs = {converged}\n"));
    summary.push_str(&format!(
        "state_violations = {}\ninput_violations = {}\n",
        violations.state, violations.input
    ));
    write_text(&out_dir.join("edge_summary.txt"), &summary)?;
    print!("{summary}");
    if !violations.is_clean() {
        return Err(Failure::new(
            5,
            format!(
                "constraint violations during edge runs: {:?}",
                violations.first
            ),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// export-region
// ---------------------------------------------------------------------------

fn cmd_export_region(bank_path: &Path, proj: &str, out_path: &Path) -> CmdResult {
    let file = load_bank(bank_path)?;
    let (plant, bank) = file
        .build()
        .map_err(|e| config_err(format!("invalid bank: {e}")))?;
    let names = plant.state_names();
    let projection = parse_projection(proj, names).map_err(|e| config_err(e.to_string()))?;
    let mut buf = Vec::new();
    write_region_csv(
        &mut buf,
        &bank,
        projection,
        (names[projection.0], names[projection.1]),
    )
    .map_err(|e| config_err(e.to_string()))?;
    let mut out = fs::File::create(out_path)
        .map_err(|e| config_err(format!("cannot create {}: {e}", out_path.display())))?;
    out.write_all(&buf)
        .map_err(|e| config_err(format!("cannot write {}: {e}", out_path.display())))?;
    println!(
        "region written to {} ({} pairs x {} points)",
        out_path.display(),
        bank.len(),
        crate::region::POINTS_PER_PAIR
    );
    Ok(())
}

/// Default hysteresis thresholds used when flags are absent.
pub fn default_thresholds() -> (f64, f64) {
    (DEFAULT_EPS_HI, DEFAULT_EPS_LO)
}
