//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.
//! Criteria listed in `EXPECTED_RED` are known to miss their targets with
//! the shipped scenarios; every other criterion must pass.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use seaopt_cli::{cmd_compare, CommonArgs, ScenarioArg};
use seaopt_core::lp::{build_subproblem, Sense};
use seaopt_core::oracle::{energy_audit, replay_energy, simulate_nonlinear, tune_pseudomass};
use seaopt_core::{
    compare_rigid_compliant, linearize_trajectory, max_eigenvalue_frequency, optimize, solve_lp, zoh_discretize,
    ActuatorVariant, BackendKind, Baseline, LinearProgram, Scenario, SlpProblem, Trajectory,
};

const EXPECTED_RED: &[usize] = &[3, 4, 6];

const DRACO_MIN_GAIN: f64 = 1.10;
const DRACO_MAX_RUNTIME_S: f64 = 120.0;
const DRACO_REFERENCE_COMPLIANT: f64 = 1.92;
const DRACO_REFERENCE_RIGID: f64 = 1.65;
const MAX_ITER_COMPLIANT: usize = 30;
const MAX_ITER_RIGID: usize = 35;
const MAX_ITER_ZERO_INPUT: usize = 20;
const MONOTONE_AFTER: usize = 3;
const P170_MIN_GAIN: f64 = 1.30;
const P170_REFERENCE_COMPLIANT: f64 = 0.07671;
const P170_VELOCITY_BAND: f64 = 0.15;
const P170_MAX_ITER: usize = 10;
const DRACO_A1_TARGET: f64 = 35.0;
const DRACO_A1_BAND: f64 = 0.10;
const REPLAY_ENERGY_MAX: f64 = 0.05;
const FINE_ENERGY_MAX: f64 = 0.001;
const ZOH_TOL: f64 = 1e-9;
const ONE_STEP_MAX: f64 = 1e-3;
const ROW_TOL: f64 = 1e-6;
const ENUMERATION_TOL: f64 = 1e-9;
const LTI_ITERATIONS: usize = 2;
const LTI_ZERO_RESIDUAL: f64 = 1e-8;
const LTI_MATCH: f64 = 1e-8;

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn scenario(name: &str) -> Scenario {
    Scenario::load(scenario_path(name)).unwrap()
}

fn report(id: usize, pass: bool, what: &str, detail: String) -> (usize, bool) {
    println!("criterion {id} {}: {what}: {detail}", if pass { "PASS" } else { "FAIL" });
    (id, pass)
}

fn monotone_after(residuals: &[f64], k: usize) -> bool {
    residuals.windows(2).skip(k.saturating_sub(1)).all(|w| w[1] < w[0])
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let head = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (head, rows)
}

fn column(head: &[String], name: &str) -> usize {
    head.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn residuals_from(dir: &Path) -> Vec<f64> {
    let (head, rows) = read_csv(&dir.join("residuals.csv"));
    let c = column(&head, "residual");
    rows.iter().map(|r| r[c].parse().unwrap()).collect()
}

/// Rebuilds states and currents from a written trajectory.
fn trajectory_from(dir: &Path, joints: usize) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let (head, rows) = read_csv(&dir.join("trajectory.csv"));
    let fields = ["delta_m", "delta_dot_m_per_s", "y_m", "y_dot_m_per_s"];
    let x = rows
        .iter()
        .map(|r| {
            DVector::from_fn(4 * joints, |i, _| r[column(&head, &format!("{}_{}", fields[i % 4], i / 4))].parse().unwrap())
        })
        .collect();
    let u = rows
        .iter()
        .filter(|r| !r[column(&head, "u_a_0")].is_empty())
        .map(|r| DVector::from_fn(joints, |j, _| r[column(&head, &format!("u_a_{j}"))].parse().unwrap()))
        .collect();
    (x, u)
}

/// Worst violation of any row, evaluated here rather than by the LP module.
fn row_residual(lp: &LinearProgram, v: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for row in &lp.rows {
        let mut a = 0.0;
        for &(j, c) in &row.coeffs {
            a += c * v[j];
        }
        let r = match row.sense {
            Sense::Le => a - row.rhs,
            Sense::Ge => row.rhs - a,
            Sense::Eq => (a - row.rhs).abs(),
        };
        worst = worst.max(r);
    }
    worst
}

/// Replays the SLP loop, checking every LP solution. Returns the worst row
/// residual and the number of solutions checked.
fn audit_solutions(problem: &SlpProblem) -> (f64, usize) {
    let cfg = &problem.config;
    let mut prev: Trajectory = problem.initial_baseline();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..cfg.max_iter {
        let bl = Baseline::from_states(&problem.model, &prev.x, cfg.baseline_velocity);
        let steps = linearize_trajectory(&problem.model, problem.plant.as_ref(), &bl, cfg.dt).unwrap();
        let sub = build_subproblem(&problem.context(), &steps, &bl.z).unwrap();
        let sol = solve_lp(&sub.lp, cfg.backend).unwrap();
        worst = worst.max(row_residual(&sub.lp, &sol.values));
        count += 1;
        let traj = sub.extract(&problem.model, cfg.dt, &sol.values);
        let residual = traj.state_distance(&prev);
        prev = traj;
        if residual < cfg.tol {
            break;
        }
    }
    (worst, count)
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for last in (k - 1)..m {
        for mut c in combinations(last, k - 1) {
            c.push(last);
            out.push(c);
        }
    }
    out
}

/// Optimal value by enumerating every basic feasible point.
fn enumerate_vertices(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let dense = |i: usize| {
        let mut a = vec![0.0; n];
        for &(j, c) in &lp.rows[i].coeffs {
            a[j] += c;
        }
        a
    };
    let eq: Vec<usize> = (0..lp.rows.len()).filter(|&i| lp.rows[i].sense == Sense::Eq).collect();
    let ineq: Vec<usize> = (0..lp.rows.len()).filter(|&i| lp.rows[i].sense != Sense::Eq).collect();
    let eq_rank = DMatrix::from_fn(eq.len(), n, |i, j| dense(eq[i])[j]).rank(1e-10);
    let mut best: Option<f64> = None;
    for subset in combinations(ineq.len(), n - eq_rank) {
        let active: Vec<usize> = eq.iter().copied().chain(subset.iter().map(|&s| ineq[s])).collect();
        let a = DMatrix::from_fn(active.len(), n, |i, j| dense(active[i])[j]);
        if a.rank(1e-10) < n {
            continue;
        }
        let b = DVector::from_iterator(active.len(), active.iter().map(|&i| lp.rows[i].rhs));
        let Ok(x) = a.clone().svd(true, true).solve(&b, 1e-12) else {
            continue;
        };
        if (&a * &x - &b).amax() > 1e-8 || row_residual(lp, x.as_slice()) > 1e-8 {
            continue;
        }
        let obj = lp.objective(x.as_slice());
        best = Some(best.map_or(obj, |b: f64| b.min(obj)));
    }
    best
}

fn criterion_1_and_2(out: &Path) -> Vec<(usize, bool)> {
    let args = CommonArgs {
        scenario: ScenarioArg {
            path: Some(scenario_path("draco_jump.toml")),
            scenario: None,
        },
        out_dir: Some(out.to_path_buf()),
        backend: None,
        tol: None,
        max_iter: None,
        dry_run: false,
    };
    let t = Instant::now();
    let code = cmd_compare(&args).unwrap();
    let runtime = t.elapsed().as_secs_f64();
    let cmp: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("comparison.json")).unwrap()).unwrap();
    let gain = cmp["gain"].as_f64().unwrap();
    let v = |i: usize| cmp["runs"][i]["final_velocity_m_per_s"].as_f64().unwrap();
    let (vc, vr) = (v(0), v(1));
    let c1 = report(
        1,
        gain >= DRACO_MIN_GAIN && runtime < DRACO_MAX_RUNTIME_S,
        "Draco compliant-vs-rigid gain",
        format!(
            "gain {gain:.4} (min {DRACO_MIN_GAIN}), runtime {runtime:.1} s (max {DRACO_MAX_RUNTIME_S}); \
             COM velocity compliant {vc:.3} m/s ({:+.0}% vs {DRACO_REFERENCE_COMPLIANT}), \
             rigid {vr:.3} m/s ({:+.0}% vs {DRACO_REFERENCE_RIGID}), not gated",
            100.0 * (vc / DRACO_REFERENCE_COMPLIANT - 1.0),
            100.0 * (vr / DRACO_REFERENCE_RIGID - 1.0)
        ),
    );

    let rc = residuals_from(&out.join("compliant"));
    let rr = residuals_from(&out.join("rigid"));
    let zi = scenario("draco_zero_input.toml").problem(ActuatorVariant::Compliant).unwrap();
    let rz = optimize(&zi, &mut |_| {}).unwrap();
    let ok = code == 0
        && rz.converged
        && rc.len() <= MAX_ITER_COMPLIANT
        && rr.len() <= MAX_ITER_RIGID
        && rz.iterations() <= MAX_ITER_ZERO_INPUT
        && monotone_after(&rc, MONOTONE_AFTER)
        && monotone_after(&rr, MONOTONE_AFTER)
        && monotone_after(&rz.residuals(), MONOTONE_AFTER);
    let c2 = report(
        2,
        ok,
        "SLP convergence",
        format!(
            "compliant {} iterations (max {MAX_ITER_COMPLIANT}, monotone {}), rigid {} (max {MAX_ITER_RIGID}, monotone {}), \
             zero-input {} (max {MAX_ITER_ZERO_INPUT}, monotone {})",
            rc.len(),
            monotone_after(&rc, MONOTONE_AFTER),
            rr.len(),
            monotone_after(&rr, MONOTONE_AFTER),
            rz.iterations(),
            monotone_after(&rz.residuals(), MONOTONE_AFTER)
        ),
    );
    vec![c1, c2]
}

fn criterion_3() -> (usize, bool) {
    let s = scenario("p170_max_vel.toml");
    let c = s.problem(ActuatorVariant::Compliant).unwrap();
    let r = s.problem(ActuatorVariant::Rigid).unwrap();
    let cmp = compare_rigid_compliant(&c, &r, &mut |_, _| {}).unwrap();
    let vc = cmp.compliant.final_velocity();
    let dev = vc / P170_REFERENCE_COMPLIANT - 1.0;
    let iters = |x: &seaopt_core::OptimizationResult| if x.converged { x.iterations() } else { usize::MAX };
    let ok = cmp.gain() >= P170_MIN_GAIN
        && dev.abs() <= P170_VELOCITY_BAND
        && iters(&cmp.compliant) <= P170_MAX_ITER
        && iters(&cmp.rigid) <= P170_MAX_ITER;
    let tail = cmp.compliant.residuals().iter().rev().take(2).map(|r| format!("{r:.2e}")).collect::<Vec<_>>().join(", ");
    report(
        3,
        ok,
        "P170 ideal velocity",
        format!(
            "gain {:.3} (min {P170_MIN_GAIN}), compliant {vc:.5} m/s ({:+.1}% vs {P170_REFERENCE_COMPLIANT}, band {:.0}%), \
             iterations compliant {} converged {} (last residuals {tail}), rigid {} converged {} (max {P170_MAX_ITER})",
            cmp.gain(),
            100.0 * dev,
            100.0 * P170_VELOCITY_BAND,
            cmp.compliant.iterations(),
            cmp.compliant.converged,
            cmp.rigid.iterations(),
            cmp.rigid.converged
        ),
    )
}

fn criterion_4() -> (usize, bool) {
    let mut ok = true;
    let mut detail = Vec::new();
    for name in ["draco_jump.toml", "p170_max_vel.toml"] {
        let s = scenario(name);
        let t = s.tune.clone().unwrap();
        let plant = s.plant.build().unwrap();
        let ops: Vec<_> = t.operating_q_rad.iter().map(|q| DVector::from_column_slice(q)).collect();
        let mp = t.tuned_pseudo_mass_kg;
        let mut grid = t.pseudo_mass_grid_kg.clone();
        for extra in [0.0, mp, 10.0 * mp] {
            if !grid.contains(&extra) {
                grid.push(extra);
            }
        }
        let rep = tune_pseudomass(&s.actuator_params(), plant.as_ref(), &ops, &grid, &s.tune_input().unwrap()).unwrap();
        let (s0, st, s10) = (rep.sigma_at(0.0).unwrap(), rep.sigma_at(mp).unwrap(), rep.sigma_at(10.0 * mp).unwrap());
        ok &= s0 > st && s10 > st;
        detail.push(format!(
            "{}: sigma(0) {s0:.3e} {} sigma({mp}) {st:.3e} {} sigma({}) {s10:.3e}",
            s.name,
            if s0 > st { ">" } else { "<=" },
            if s10 > st { "<" } else { ">=" },
            10.0 * mp
        ));
    }
    let mut s = scenario("draco_jump.toml");
    for a in s.actuators.iter_mut() {
        a.pseudo_mass_kg = 580.0;
    }
    let freq = max_eigenvalue_frequency(&s.model(ActuatorVariant::Compliant).unwrap());
    let freq_ok = (freq / DRACO_A1_TARGET - 1.0).abs() <= DRACO_A1_BAND;
    ok &= freq_ok;
    detail.push(format!("Draco A1 fastest mode at 580 kg {freq:.2} rad/s (target {DRACO_A1_TARGET} +/- {:.0}%)", 100.0 * DRACO_A1_BAND));
    report(4, ok, "pseudo-mass sweep", detail.join("; "))
}

fn criterion_5() -> (usize, bool) {
    let s = scenario("draco_zero_input.toml");
    let p = s.problem(ActuatorVariant::Compliant).unwrap();
    let r = optimize(&p, &mut |_| {}).unwrap();
    let replay = replay_energy(&p.model, p.plant.as_ref(), &r.trajectory).unwrap().variation;
    let sim = simulate_nonlinear(&p.model, p.plant.as_ref(), &r.trajectory.x[0], &r.trajectory.u, p.config.dt, s.simulate.substeps).unwrap();
    let fine = energy_audit(&sim.energy);
    let mp: Vec<f64> = s.actuators.iter().map(|a| a.pseudo_mass_kg).collect();
    report(
        5,
        r.converged && sim.exit.is_none() && replay <= REPLAY_ENERGY_MAX && fine <= FINE_ENERGY_MAX,
        "energy audit",
        format!(
            "zero-input plan at dt {} s, M_p {mp:?} kg: replay variation {:.2}% (max {:.0}%), fine-step balance {:.1e} (max {FINE_ENERGY_MAX:.0e})",
            p.config.dt,
            100.0 * replay,
            100.0 * REPLAY_ENERGY_MAX,
            fine
        ),
    )
}

/// Largest one-step relative error of the linearized map against the
/// nonlinear oracle, linearizing about `x` itself.
fn one_step_error(p: &SlpProblem, x: &[DVector<f64>], u: &[DVector<f64>], dt: f64) -> f64 {
    let bl = Baseline::from_states(&p.model, x, p.config.baseline_velocity);
    let steps = linearize_trajectory(&p.model, p.plant.as_ref(), &bl, dt).unwrap();
    let mut worst: f64 = 0.0;
    for (n, st) in steps.iter().enumerate() {
        let pred = st.predict(&x[n], &u[n]);
        let sim = simulate_nonlinear(&p.model, p.plant.as_ref(), &x[n], &u[n..=n], dt, 40).unwrap();
        let truth = sim.x.last().unwrap();
        worst = worst.max((&pred - truth).norm() / truth.norm());
    }
    worst
}

fn criterion_6(draco_out: &Path) -> (usize, bool) {
    let s = scenario("draco_jump.toml");
    let p = s.problem(ActuatorVariant::Compliant).unwrap();
    let dt = p.config.dt;
    let rel = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).norm() / b.norm();

    let one = zoh_discretize(&p.model, dt).unwrap();
    let two = zoh_discretize(&p.model, 2.0 * dt).unwrap();
    let semigroup = rel(&(&one.a * &one.a), &two.a).max(rel(&(&one.a * &one.b + &one.b), &two.b));
    let discrete = one.a.clone().complex_eigenvalues();
    let eig_map = p
        .model
        .a1
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|l| {
            let target = (l * dt).exp();
            discrete.iter().map(|m| (m - target).norm()).fold(f64::INFINITY, f64::min) / target.norm().max(1.0)
        })
        .fold(0.0, f64::max);
    let (a, b) = (-3.7, 2.5);
    let (ad, bd) = seaopt_core::discretization::zoh_pair(&DMatrix::from_element(1, 1, a), &DMatrix::from_element(1, 1, b), dt).unwrap();
    let scalar = ((ad[(0, 0)] - (a * dt).exp()).abs() / (a * dt).exp())
        .max((bd[(0, 0)] - b / a * ((a * dt).exp() - 1.0)).abs() / (b / a * ((a * dt).exp() - 1.0)).abs());
    let zoh_ok = semigroup <= ZOH_TOL && eig_map <= ZOH_TOL && scalar <= ZOH_TOL;

    let (x, u) = trajectory_from(&draco_out.join("compliant"), p.model.joints());
    let worst = one_step_error(&p, &x, &u, dt);
    let hold = &p.cost.u_baseline[0];
    let stance = one_step_error(
        &p,
        &[p.constraints.x_init.clone(), p.constraints.x_init.clone()],
        &[hold.add_scalar(0.5), hold.add_scalar(-0.5)],
        dt,
    );
    report(
        6,
        zoh_ok && worst < ONE_STEP_MAX,
        "discretization correctness",
        format!(
            "semigroup {semigroup:.1e}, eigenvalue map {eig_map:.1e}, scalar {scalar:.1e} (max {ZOH_TOL:.0e}); \
             one-step prediction along the converged jump plan {worst:.2e} (max {ONE_STEP_MAX:.0e}); \
             from the stance with +/-0.5 A {stance:.1e}, not gated"
        ),
    )
}

fn criterion_7() -> (usize, bool) {
    let mut worst: f64 = 0.0;
    let mut solutions = 0;
    for name in ["draco_jump.toml", "draco_zero_input.toml", "p170_max_vel.toml", "lti.toml"] {
        let s = scenario(name);
        for variant in [ActuatorVariant::Compliant, ActuatorVariant::Rigid] {
            if name == "draco_zero_input.toml" && variant == ActuatorVariant::Rigid {
                continue;
            }
            let (w, n) = audit_solutions(&s.problem(variant).unwrap());
            worst = worst.max(w);
            solutions += n;
        }
    }

    let mut toy = scenario("lti.toml");
    toy.slp.steps = 2;
    toy.constraints.final_q_rad = None;
    toy.constraints.ydot_bar_m_per_s = 0.005;
    toy.cost.sigma = 1e-3;
    let p = toy.problem(ActuatorVariant::Rigid).unwrap();
    let bl = Baseline::from_states(&p.model, &p.initial_baseline().x, p.config.baseline_velocity);
    let steps = linearize_trajectory(&p.model, p.plant.as_ref(), &bl, p.config.dt).unwrap();
    let lp = build_subproblem(&p.context(), &steps, &bl.z).unwrap().lp;
    let oracle = enumerate_vertices(&lp).unwrap();
    let mut toy_err: f64 = 0.0;
    for backend in [BackendKind::Dense, BackendKind::Sparse, BackendKind::Interior] {
        let sol = solve_lp(&lp, backend).unwrap();
        toy_err = toy_err.max((sol.objective - oracle).abs() / oracle.abs().max(1.0));
    }
    report(
        7,
        worst < ROW_TOL && toy_err <= ENUMERATION_TOL,
        "LP integrity",
        format!(
            "worst row residual {worst:.1e} over {solutions} solutions (max {ROW_TOL:.0e}); \
             toy {}-variable LP vs vertex enumeration {toy_err:.1e} (max {ENUMERATION_TOL:.0e})",
            lp.num_vars()
        ),
    )
}

fn criterion_8() -> (usize, bool) {
    let p = scenario("lti.toml").problem(ActuatorVariant::Compliant).unwrap();
    let r = optimize(&p, &mut |_| {}).unwrap();
    let last = r.residuals().last().copied().unwrap_or(f64::NAN);
    let sim = simulate_nonlinear(&p.model, p.plant.as_ref(), &r.trajectory.x[0], &r.trajectory.u, p.config.dt, 40).unwrap();
    let gap = r.trajectory.x.iter().zip(&sim.coarse_states()).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
    report(
        8,
        r.converged && r.iterations() == LTI_ITERATIONS && last < LTI_ZERO_RESIDUAL && gap < LTI_MATCH,
        "LTI exactness",
        format!(
            "{} iterations (want {LTI_ITERATIONS}), final residual {last:.1e} (zero below {LTI_ZERO_RESIDUAL:.0e}), \
             plan vs oracle {gap:.1e} (max {LTI_MATCH:.0e})",
            r.iterations()
        ),
    )
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let draco_out = dir.path().join("draco");
    let mut results = criterion_1_and_2(&draco_out);
    results.push(criterion_3());
    results.push(criterion_4());
    results.push(criterion_5());
    results.push(criterion_6(&draco_out));
    results.push(criterion_7());
    results.push(criterion_8());

    let passed = results.iter().filter(|r| r.1).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    let regressions: Vec<usize> = results.iter().filter(|(id, ok)| !ok && !EXPECTED_RED.contains(id)).map(|r| r.0).collect();
    for (id, ok) in &results {
        if *ok && EXPECTED_RED.contains(id) {
            println!("criterion {id} now passes; drop it from EXPECTED_RED");
        }
    }
    assert!(regressions.is_empty(), "criteria failing unexpectedly: {regressions:?}");
}
