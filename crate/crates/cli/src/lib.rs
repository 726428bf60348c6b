//! Command implementations for the `seaopt` binary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use seaopt_core::actuator::fastest_frequency;
use seaopt_core::lp::{build_subproblem, write_cplex_lp, RowFamily, Subproblem};
use seaopt_core::oracle::{replay_energy, simulate_nonlinear, tune_pseudomass};
use seaopt_core::robot::joint_velocity;
use seaopt_core::slp::{ndjson_progress, IterationRecord, TimingSummary};
use seaopt_core::{
    linearize_trajectory, optimize, ActuatorVariant, BackendKind, Baseline, Error,
    OptimizationResult, Scenario, SlpProblem, Trajectory,
};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INVALID: i32 = 1;
    pub const LP_FAILURE: i32 = 2;
    pub const NOT_CONVERGED: i32 = 3;
    pub const INTERNAL: i32 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "seaopt", version, about = "Trajectory optimization for series elastic actuated robots")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the SLP loop for one actuator model.
    Optimize(OptimizeArgs),
    /// Optimize with the compliant and the rigid model and report the gain.
    Compare(CommonArgs),
    /// Sweep the pseudo-mass and report the linearization error.
    Tune(TuneArgs),
    /// Forward-simulate the nonlinear coupled system under a current profile.
    Simulate(SimulateArgs),
    /// Print the actuator spectrum and the aliasing check.
    Eigs(EigsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Compliant,
    Rigid,
}

impl From<VariantArg> for ActuatorVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Compliant => ActuatorVariant::Compliant,
            VariantArg::Rigid => ActuatorVariant::Rigid,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScenarioArg {
    /// Scenario TOML file.
    #[arg(value_name = "SCENARIO", required_unless_present = "scenario")]
    pub path: Option<PathBuf>,
    #[arg(long = "scenario", value_name = "FILE", conflicts_with = "path")]
    pub scenario: Option<PathBuf>,
}

impl ScenarioArg {
    pub fn path(&self) -> &Path {
        self.scenario.as_deref().or(self.path.as_deref()).expect("clap enforces a scenario")
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[command(flatten)]
    pub scenario: ScenarioArg,
    /// Output directory (defaults to the scenario's `output_dir`, then `out/<name>`).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub backend: Option<BackendKind>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Build the first subproblem, print its size and exit.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "compliant")]
    pub variant: VariantArg,
    /// Write the first subproblem in CPLEX LP format.
    #[arg(long, value_name = "FILE")]
    pub export_lp: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub scenario: ScenarioArg,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated pseudo-mass grid (kg); overrides the scenario.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArg,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// CSV with `u_a_<j>` columns, one row per coarse step. Without it the
    /// holding current is applied over the horizon.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "compliant")]
    pub variant: VariantArg,
}

#[derive(Debug, Args)]
pub struct EigsArgs {
    #[command(flatten)]
    pub scenario: ScenarioArg,
    #[arg(long, value_enum, default_value = "compliant")]
    pub variant: VariantArg,
}

/// Maps a library error to a process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Iteration { source, .. } | Error::AtStep { source, .. } => exit_code(source),
        Error::LpInfeasible { .. } | Error::LpUnbounded => exit::LP_FAILURE,
        Error::Scenario(_)
        | Error::Contract(_)
        | Error::InvalidParams { .. }
        | Error::InfeasibleBounds(_)
        | Error::Io(_) => exit::INVALID,
        _ => exit::INTERNAL,
    }
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Optimize(a) => cmd_optimize(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Tune(a) => cmd_tune(&a).map(|_| exit::OK),
        Command::Simulate(a) => cmd_simulate(&a).map(|_| exit::OK),
        Command::Eigs(a) => cmd_eigs(&a).map(|_| exit::OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load(arg: &ScenarioArg) -> Result<Scenario, Error> {
    Scenario::load(arg.path())
}

fn out_dir(scenario: &Scenario, explicit: Option<&Path>) -> Result<PathBuf, Error> {
    let dir = explicit
        .map(Path::to_path_buf)
        .or_else(|| scenario.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&scenario.name));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn apply_overrides(problem: &mut SlpProblem, args: &CommonArgs) {
    if let Some(b) = args.backend {
        problem.config.backend = b;
    }
    if let Some(t) = args.tol {
        problem.config.tol = t;
    }
    if let Some(m) = args.max_iter {
        problem.config.max_iter = m;
    }
}

/// Size of the first subproblem.
#[derive(Debug, Serialize)]
pub struct DryRun {
    pub variables: usize,
    pub constraints: usize,
    pub equalities: usize,
    pub rows_by_family: Vec<(String, usize)>,
}

pub fn dry_run(problem: &SlpProblem) -> Result<DryRun, Error> {
    let sub = first_subproblem(problem)?;
    let families = [
        RowFamily::Dynamics,
        RowFamily::InitialState,
        RowFamily::FinalPosition,
        RowFamily::FinalComVelocity,
        RowFamily::Contact,
        RowFamily::IntensityNonnegative,
        RowFamily::TrustRegion,
        RowFamily::SpringDeflection,
        RowFamily::LengthBounds,
        RowFamily::MotorVelocity,
        RowFamily::CurrentBounds,
        RowFamily::InputDeviation,
    ];
    Ok(DryRun {
        variables: sub.lp.num_vars(),
        constraints: sub.lp.rows.len(),
        equalities: sub.lp.equality_count(),
        rows_by_family: families
            .iter()
            .map(|f| (f.as_str().to_string(), sub.lp.count_family(*f)))
            .filter(|(_, n)| *n > 0)
            .collect(),
    })
}

fn first_subproblem(problem: &SlpProblem) -> Result<Subproblem, Error> {
    problem.validate()?;
    let base = problem.initial_baseline();
    let baseline = Baseline::from_states(&problem.model, &base.x, problem.config.baseline_velocity);
    let steps = linearize_trajectory(&problem.model, problem.plant.as_ref(), &baseline, problem.config.dt)?;
    build_subproblem(&problem.context(), &steps, &baseline.z)
}

fn print_dry_run(label: &str, d: &DryRun) {
    println!("{label}: {} variables, {} constraints ({} equalities)", d.variables, d.constraints, d.equalities);
    for (f, n) in &d.rows_by_family {
        println!("  {f:<24} {n}");
    }
}

pub fn cmd_optimize(args: &OptimizeArgs) -> Result<i32, Error> {
    let scenario = load(&args.common.scenario)?;
    let mut problem = scenario.problem(args.variant.into())?;
    apply_overrides(&mut problem, &args.common);
    if let Some(path) = &args.export_lp {
        let sub = first_subproblem(&problem)?;
        write_cplex_lp(&sub.lp, &mut create(path)?)?;
    }
    if args.common.dry_run {
        print_dry_run(&scenario.name, &dry_run(&problem)?);
        return Ok(exit::OK);
    }
    let dir = out_dir(&scenario, args.common.out_dir.as_deref())?;
    let result = run_and_write(&scenario, &problem, &dir)?;
    print_summary(&result);
    Ok(if result.converged { exit::OK } else { exit::NOT_CONVERGED })
}

fn print_summary(r: &OptimizationResult) {
    println!(
        "{:?}: {} iterations, converged = {}, final velocity {:.5} m/s, {:.2} s",
        r.variant,
        r.iterations(),
        r.converged,
        r.final_velocity(),
        r.timing.total_s
    );
}

/// Per-run report written next to the trajectory.
#[derive(Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub variant: ActuatorVariant,
    pub converged: bool,
    pub iterations: usize,
    pub final_velocity_m_per_s: f64,
    pub objective: f64,
    pub final_residual: f64,
    pub max_violation: f64,
    pub energy_variation: Option<f64>,
    pub timing: TimingSummary,
}

/// Optimizes `problem` and writes progress, trajectory, plots and report to `dir`.
pub fn run_and_write(scenario: &Scenario, problem: &SlpProblem, dir: &Path) -> Result<OptimizationResult, Error> {
    fs::create_dir_all(dir)?;
    let mut progress_file = create(&dir.join("progress.ndjson"))?;
    let mut sink = ndjson_progress(&mut progress_file);
    let mut echo = |r: &IterationRecord| {
        log::info!(
            "iter {:>3}  residual {:.3e}  objective {:.6e}  v_N {:.5}",
            r.iteration,
            r.residual,
            r.objective,
            r.final_velocity
        );
        sink(r);
    };
    let result = optimize(problem, &mut echo)?;
    drop(sink);
    progress_file.flush()?;
    write_outputs(scenario, problem, &result, dir)?;
    Ok(result)
}

pub fn write_outputs(
    scenario: &Scenario,
    problem: &SlpProblem,
    result: &OptimizationResult,
    dir: &Path,
) -> Result<(), Error> {
    let traj = &result.trajectory;
    write_trajectory_csv(problem, traj, create(&dir.join("trajectory.csv"))?)?;
    write_plots(problem, result, dir)?;
    let energy_variation = match replay_energy(&problem.model, problem.plant.as_ref(), traj) {
        Ok(r) => Some(r.variation),
        Err(e) => {
            log::warn!("energy replay failed: {e}");
            None
        }
    };
    let last = result.records.last();
    let report = Report {
        scenario: scenario.name.clone(),
        variant: result.variant,
        converged: result.converged,
        iterations: result.iterations(),
        final_velocity_m_per_s: result.final_velocity(),
        objective: last.map(|r| r.objective).unwrap_or(f64::NAN),
        final_residual: last.map(|r| r.residual).unwrap_or(f64::NAN),
        max_violation: last.map(|r| r.max_violation).unwrap_or(f64::NAN),
        energy_variation,
        timing: result.timing.clone(),
    };
    let mut f = create(&dir.join("report.json"))?;
    serde_json::to_writer_pretty(&mut f, &report).map_err(|e| Error::Io(e.into()))?;
    writeln!(f)?;
    Ok(())
}

/// One row per trajectory point. The current of the last point is empty.
pub fn write_trajectory_csv(problem: &SlpProblem, traj: &Trajectory, w: impl Write) -> Result<(), Error> {
    let model = &problem.model;
    let p = model.joints();
    let k = traj.phi.first().map(|v| v.len()).unwrap_or(0);
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["time_s".to_string()];
    for j in 0..p {
        for f in ["delta_m", "delta_dot_m_per_s", "y_m", "y_dot_m_per_s", "z_m", "z_dot_m_per_s", "u_a"] {
            header.push(format!("{f}_{j}"));
        }
    }
    header.extend((0..k).map(|i| format!("phi_n_{i}")));
    out.write_record(&header).map_err(csv_err)?;
    for n in 0..traj.len() {
        let mut rec = vec![format!("{:.9e}", traj.time(n))];
        for j in 0..p {
            let s = model.joint_state(&traj.x[n], j);
            for v in [s.delta, s.delta_dot, s.y, s.y_dot, s.z(), s.z_dot()] {
                rec.push(format!("{v:.9e}"));
            }
            rec.push(traj.u.get(n).map(|u| format!("{:.9e}", u[j])).unwrap_or_default());
        }
        for i in 0..k {
            rec.push(traj.phi.get(n).map(|f| format!("{:.9e}", f[i])).unwrap_or_default());
        }
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Upward velocity per trajectory point: COM for a plant with contacts,
/// otherwise the actuator output velocity of the objective joint.
pub fn upward_velocity(problem: &SlpProblem, traj: &Trajectory) -> Result<Vec<f64>, Error> {
    let plant = problem.plant.as_ref();
    (0..traj.len())
        .map(|n| {
            if problem.contact.is_some() {
                let q = plant.joint_from_length(&traj.z[n])?;
                let qd = joint_velocity(plant, &q, &traj.z_dot[n])?;
                Ok((plant.com_jacobians(&q).1 * qd)[0])
            } else {
                let c = problem.cost.final_velocity_row(plant, &traj.z[n])?;
                Ok((c * &traj.z_dot[n])[0])
            }
        })
        .collect()
}

fn write_plots(problem: &SlpProblem, result: &OptimizationResult, dir: &Path) -> Result<(), Error> {
    let model = &problem.model;
    let traj = &result.trajectory;
    let p = model.joints();
    let joint_header = |name: &str| {
        let mut h = vec!["time_s".to_string()];
        h.extend((0..p).map(|j| format!("{name}_{j}")));
        h
    };

    let mut w = csv::Writer::from_writer(create(&dir.join("spring_deflection.csv"))?);
    w.write_record(joint_header("delta_m")).map_err(csv_err)?;
    for n in 0..traj.len() {
        let mut rec = vec![traj.time(n)];
        rec.extend((0..p).map(|j| model.joint_state(&traj.x[n], j).delta));
        w.write_record(rec.iter().map(|v| format!("{v:.9e}"))).map_err(csv_err)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(&dir.join("currents.csv"))?);
    w.write_record(joint_header("u_a")).map_err(csv_err)?;
    for (n, u) in traj.u.iter().enumerate() {
        let mut rec = vec![traj.time(n)];
        rec.extend(u.iter().copied());
        w.write_record(rec.iter().map(|v| format!("{v:.9e}"))).map_err(csv_err)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(&dir.join("z_iterates.csv"))?);
    let mut h = vec!["iteration".to_string()];
    h.extend(joint_header("z_m"));
    w.write_record(h).map_err(csv_err)?;
    for (i, it) in result.iterates.iter().enumerate() {
        for n in 0..it.len() {
            let mut rec = vec![format!("{}", i + 1), format!("{:.9e}", it.time(n))];
            rec.extend(it.z[n].iter().map(|v| format!("{v:.9e}")));
            w.write_record(rec).map_err(csv_err)?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(&dir.join("upward_velocity.csv"))?);
    w.write_record(["time_s", "velocity_m_per_s"]).map_err(csv_err)?;
    for (n, v) in upward_velocity(problem, traj)?.iter().enumerate() {
        w.write_record([format!("{:.9e}", traj.time(n)), format!("{v:.9e}")]).map_err(csv_err)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(&dir.join("residuals.csv"))?);
    w.write_record(["iteration", "residual", "objective", "final_velocity_m_per_s"]).map_err(csv_err)?;
    for r in &result.records {
        w.write_record([
            r.iteration.to_string(),
            format!("{:.9e}", r.residual),
            format!("{:.9e}", r.objective),
            format!("{:.9e}", r.final_velocity),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct VariantTiming {
    variant: ActuatorVariant,
    iterations: usize,
    converged: bool,
    final_velocity_m_per_s: f64,
    mean_linearization_s: f64,
    mean_solve_s: f64,
    total_s: f64,
}

#[derive(Debug, Serialize)]
struct ComparisonReport {
    scenario: String,
    gain: f64,
    runs: Vec<VariantTiming>,
}

pub fn cmd_compare(args: &CommonArgs) -> Result<i32, Error> {
    let scenario = load(&args.scenario)?;
    let mut compliant = scenario.problem(ActuatorVariant::Compliant)?;
    let mut rigid = scenario.problem(ActuatorVariant::Rigid)?;
    apply_overrides(&mut compliant, args);
    apply_overrides(&mut rigid, args);
    if args.dry_run {
        print_dry_run("compliant", &dry_run(&compliant)?);
        print_dry_run("rigid", &dry_run(&rigid)?);
        return Ok(exit::OK);
    }
    let dir = out_dir(&scenario, args.out_dir.as_deref())?;
    let c = run_and_write(&scenario, &compliant, &dir.join("compliant"))?;
    print_summary(&c);
    let r = run_and_write(&scenario, &rigid, &dir.join("rigid"))?;
    print_summary(&r);
    let gain = c.final_velocity() / r.final_velocity();
    let runs = [&c, &r]
        .iter()
        .map(|x| VariantTiming {
            variant: x.variant,
            iterations: x.iterations(),
            converged: x.converged,
            final_velocity_m_per_s: x.final_velocity(),
            mean_linearization_s: x.timing.mean_linearization_s,
            mean_solve_s: x.timing.mean_solve_s,
            total_s: x.timing.total_s,
        })
        .collect();
    let report = ComparisonReport {
        scenario: scenario.name.clone(),
        gain,
        runs,
    };
    let mut f = create(&dir.join("comparison.json"))?;
    serde_json::to_writer_pretty(&mut f, &report).map_err(|e| Error::Io(e.into()))?;
    writeln!(f)?;
    println!("{:<10} {:>6} {:>10} {:>14} {:>12} {:>10}", "variant", "iters", "v_N", "lin s/iter", "LP s/iter", "total s");
    for x in &report.runs {
        println!(
            "{:<10} {:>6} {:>10.5} {:>14.4} {:>12.4} {:>10.2}",
            format!("{:?}", x.variant).to_lowercase(),
            x.iterations,
            x.final_velocity_m_per_s,
            x.mean_linearization_s,
            x.mean_solve_s,
            x.total_s
        );
    }
    println!("gain (compliant / rigid): {gain:.4}");
    Ok(if c.converged && r.converged { exit::OK } else { exit::NOT_CONVERGED })
}

pub fn cmd_tune(args: &TuneArgs) -> Result<(), Error> {
    let scenario = load(&args.scenario)?;
    let tune = scenario
        .tune
        .as_ref()
        .ok_or_else(|| Error::Scenario(format!("scenario '{}' has no [tune] section", scenario.name)))?;
    let grid = args.grid.clone().unwrap_or_else(|| tune.pseudo_mass_grid_kg.clone());
    let plant = scenario.plant.build()?;
    let points: Vec<DVector<f64>> = tune.operating_q_rad.iter().map(|q| DVector::from_column_slice(q)).collect();
    let input = scenario.tune_input()?;
    let report = tune_pseudomass(&scenario.actuator_params(), plant.as_ref(), &points, &grid, &input)?;
    let dir = out_dir(&scenario, args.out_dir.as_deref())?;
    report.write_csv(create(&dir.join("pseudo_mass_sweep.csv"))?)?;
    report.write_operating_points_csv(create(&dir.join("operating_points.csv"))?)?;
    println!("{:>12} {:>16} {:>14}", "M_p kg", "A1 freq rad/s", "sigma_z^2 m^2");
    for i in 0..report.pseudo_mass_kg.len() {
        println!(
            "{:>12} {:>16.2} {:>14.4e}",
            report.pseudo_mass_kg[i], report.a1_frequency[i], report.sigma_z2[i]
        );
    }
    for (q, f) in report.operating_points.iter().zip(&report.continuous_frequency) {
        println!("coupled frequency at q = {q:?}: {f:.2} rad/s");
    }
    println!("recommended pseudo-mass: {} kg", report.recommended_kg);
    Ok(())
}

/// Reads `u_a_<j>` columns; rows with empty cells are skipped.
pub fn read_currents(path: &Path, joints: usize) -> Result<Vec<DVector<f64>>, Error> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let cols = (0..joints)
        .map(|j| {
            let name = format!("u_a_{j}");
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Scenario(format!("{}: missing column {name}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let cells: Vec<&str> = cols.iter().map(|&c| rec.get(c).unwrap_or("").trim()).collect();
        if cells.iter().any(|c| c.is_empty()) {
            continue;
        }
        let vals = cells
            .iter()
            .map(|c| c.parse::<f64>().map_err(|e| Error::Scenario(format!("{}: {e}", path.display()))))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(DVector::from_vec(vals));
    }
    Ok(out)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let scenario = load(&args.scenario)?;
    let model = scenario.model(args.variant.into())?;
    let plant = scenario.plant.build()?;
    let (x0, u_ref) = scenario.initial_state(&model, plant.as_ref())?;
    let u = match &args.input {
        Some(path) => read_currents(path, model.joints())?,
        None => vec![u_ref; scenario.slp.steps.saturating_sub(1)],
    };
    let trace = simulate_nonlinear(&model, plant.as_ref(), &x0, &u, scenario.slp.dt_s, scenario.simulate.substeps)?;
    let dir = out_dir(&scenario, args.out_dir.as_deref())?;
    trace.write_csv(&model, create(&dir.join("simulation.csv"))?)?;
    let audit = seaopt_core::oracle::energy_audit(&trace.energy);
    println!(
        "simulated {:.4} s ({} samples), energy audit {:.3e}",
        trace.time.last().copied().unwrap_or(0.0),
        trace.time.len(),
        audit
    );
    if let Some(exit) = &trace.exit {
        println!("stopped early: {exit}");
    }
    Ok(())
}

pub fn cmd_eigs(args: &EigsArgs) -> Result<(), Error> {
    let scenario = load(&args.scenario)?;
    let model = scenario.model(args.variant.into())?;
    let mut eigs: Vec<_> = model.a1.clone().complex_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    println!("eigenvalues of A1 ({:?}):", model.variant);
    for l in &eigs {
        println!("  {:>14.4} {:+14.4}i", l.re, l.im);
    }
    let freq = fastest_frequency(&model.a1);
    let dt = scenario.slp.dt_s;
    let phase = freq * dt;
    println!("fastest mode: {freq:.3} rad/s, dt = {dt} s, phase per step {phase:.4} rad");
    if phase > std::f64::consts::PI {
        println!("aliasing: fastest mode exceeds the Nyquist rate of the step");
    } else {
        println!("no aliasing");
    }
    Ok(())
}
