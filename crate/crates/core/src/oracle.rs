//! Reference nonlinear simulation, energy bookkeeping, and pseudo-mass tuning.

use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use crate::actuator::{
    build_continuous_model, fastest_frequency, max_eigenvalue_frequency, ActuatorParams, ContinuousActuatorModel,
};
use crate::error::{Error, Result};
use crate::linearization::{eliminate_f_prime, linearize_trajectory, static_equilibrium, Baseline};
use crate::robot::{impedance_terms, joint_velocity, RobotPort};
use crate::trajectory::Trajectory;

/// Energy terms at one instant. `dissipated` and `input_work` are running
/// integrals from the start of the trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub actuator_kinetic: f64,
    pub spring_potential: f64,
    pub robot_kinetic: f64,
    pub gravitational: f64,
    pub dissipated: f64,
    pub input_work: f64,
}

impl EnergyBreakdown {
    pub fn mechanical(&self) -> f64 {
        self.actuator_kinetic + self.spring_potential + self.robot_kinetic + self.gravitational
    }
}

#[derive(Clone, Debug)]
pub struct SimTrace {
    pub time: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub q: Vec<DVector<f64>>,
    pub q_dot: Vec<DVector<f64>>,
    /// Current applied over the interval starting at each sample.
    pub u: Vec<DVector<f64>>,
    pub energy: Vec<EnergyBreakdown>,
    /// Set when the state left the transmission range and the run stopped.
    pub exit: Option<String>,
    /// Fine steps per coarse step.
    pub substeps: usize,
}

impl SimTrace {
    /// Samples at the coarse grid (every `substeps` fine steps).
    pub fn coarse_states(&self) -> Vec<DVector<f64>> {
        self.x.iter().step_by(self.substeps).cloned().collect()
    }

    pub fn write_csv(&self, model: &ContinuousActuatorModel, w: impl Write) -> Result<()> {
        let p = model.joints();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["time_s".to_string()];
        for j in 0..p {
            for f in ["delta_m", "delta_dot_m_per_s", "y_m", "y_dot_m_per_s", "z_m", "z_dot_m_per_s", "q_rad", "q_dot_rad_per_s", "u_a"] {
                header.push(format!("{f}_{j}"));
            }
        }
        header.extend(
            [
                "actuator_kinetic_j",
                "spring_potential_j",
                "robot_kinetic_j",
                "gravitational_j",
                "dissipated_j",
                "input_work_j",
                "mechanical_j",
            ]
            .map(String::from),
        );
        out.write_record(&header).map_err(csv_err)?;
        for k in 0..self.time.len() {
            let mut rec = vec![self.time[k]];
            for j in 0..p {
                let s = model.joint_state(&self.x[k], j);
                let u = self.u.get(k).map(|u| u[j]).unwrap_or(f64::NAN);
                rec.extend([s.delta, s.delta_dot, s.y, s.y_dot, s.z(), s.z_dot(), self.q[k][j], self.q_dot[k][j], u]);
            }
            let e = &self.energy[k];
            rec.extend([
                e.actuator_kinetic,
                e.spring_potential,
                e.robot_kinetic,
                e.gravitational,
                e.dissipated,
                e.input_work,
                e.mechanical(),
            ]);
            out.write_record(rec.iter().map(|v| format!("{v:.9e}"))).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Exact `F'` for the coupled system at state `x` and current `u`.
pub fn coupled_force(
    model: &ContinuousActuatorModel,
    plant: &dyn RobotPort,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    let q = plant.joint_from_length(&model.z(x))?;
    let q_dot = joint_velocity(plant, &q, &model.z_dot(x))?;
    let mp: Vec<f64> = model.params.iter().map(|p| p.pseudo_mass).collect();
    let imp = impedance_terms(plant, &q, &q_dot, &mp)?;
    Ok(eliminate_f_prime(model, &imp)?.map.eval(x, u))
}

/// State derivative of the coupled actuator and robot.
pub fn coupled_derivative(
    model: &ContinuousActuatorModel,
    plant: &dyn RobotPort,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    let f = coupled_force(model, plant, x, u)?;
    Ok(model.derivative(x, u, &f))
}

/// Input power and dissipation rate.
fn power(model: &ContinuousActuatorModel, x: &DVector<f64>, u: &DVector<f64>) -> (f64, f64) {
    let mut input = 0.0;
    let mut diss = 0.0;
    for (j, prm) in model.params.iter().enumerate() {
        let s = model.joint_state(x, j);
        input += prm.motor_constant * u[j] * s.y_dot;
        diss += prm.spring_damping * s.delta_dot * s.delta_dot
            + prm.motor_damping * s.y_dot * s.y_dot
            + prm.load_damping * s.z_dot() * s.z_dot();
    }
    (input, diss)
}

/// Stored mechanical energy. The pseudo-mass is fictitious and carries none.
pub fn stored_energy(
    model: &ContinuousActuatorModel,
    plant: &dyn RobotPort,
    x: &DVector<f64>,
) -> Result<(EnergyBreakdown, DVector<f64>, DVector<f64>)> {
    let mut e = EnergyBreakdown::default();
    for (j, prm) in model.params.iter().enumerate() {
        let s = model.joint_state(x, j);
        e.actuator_kinetic += 0.5
            * (prm.spring_mass * s.delta_dot * s.delta_dot
                + prm.motor_mass * s.y_dot * s.y_dot
                + prm.load_mass * s.z_dot() * s.z_dot());
        e.spring_potential += 0.5 * prm.stiffness * s.delta * s.delta;
    }
    let q = plant.joint_from_length(&model.z(x))?;
    let q_dot = joint_velocity(plant, &q, &model.z_dot(x))?;
    e.robot_kinetic = plant.kinetic_energy(&q, &q_dot);
    e.gravitational = plant.potential_energy(&q);
    Ok((e, q, q_dot))
}

/// Integrates the coupled system with classical RK4 at `dt / substeps`,
/// holding each current for one coarse step. An empty `u` holds zero current
/// for one coarse step.
pub fn simulate_nonlinear(
    model: &ContinuousActuatorModel,
    plant: &dyn RobotPort,
    x0: &DVector<f64>,
    u: &[DVector<f64>],
    dt: f64,
    substeps: usize,
) -> Result<SimTrace> {
    if substeps < 10 {
        return Err(Error::Contract(format!("need at least 10 fine steps per coarse step, got {substeps}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Contract(format!("time step must be positive, got {dt}")));
    }
    let zero = [DVector::zeros(model.joints())];
    let inputs: &[DVector<f64>] = if u.is_empty() { &zero } else { u };
    let h = dt / substeps as f64;
    let (e0, q0, qd0) = stored_energy(model, plant, x0)?;
    let mut trace = SimTrace {
        time: vec![0.0],
        x: vec![x0.clone()],
        q: vec![q0],
        q_dot: vec![qd0],
        u: Vec::new(),
        energy: vec![e0],
        exit: None,
        substeps,
    };
    let mut x = x0.clone();
    let (mut work, mut diss) = (0.0, 0.0);
    'outer: for (n, un) in inputs.iter().enumerate() {
        for s in 0..substeps {
            let step = || -> Result<(DVector<f64>, f64, f64)> {
                let f = |xs: &DVector<f64>| -> Result<(DVector<f64>, f64, f64)> {
                    let d = coupled_derivative(model, plant, xs, un)?;
                    let (pi, pd) = power(model, xs, un);
                    Ok((d, pi, pd))
                };
                let (k1, w1, d1) = f(&x)?;
                let (k2, w2, d2) = f(&(&x + &k1 * (0.5 * h)))?;
                let (k3, w3, d3) = f(&(&x + &k2 * (0.5 * h)))?;
                let (k4, w4, d4) = f(&(&x + &k3 * h))?;
                let xn = &x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
                Ok((xn, h / 6.0 * (w1 + 2.0 * w2 + 2.0 * w3 + w4), h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)))
            };
            let next = step().and_then(|(xn, dw, dd)| {
                let (e, q, qd) = stored_energy(model, plant, &xn)?;
                Ok((xn, dw, dd, e, q, qd))
            });
            match next {
                Ok((xn, dw, dd, mut e, q, qd)) => {
                    x = xn;
                    work += dw;
                    diss += dd;
                    e.input_work = work;
                    e.dissipated = diss;
                    trace.u.push(un.clone());
                    trace.time.push((n * substeps + s + 1) as f64 * h);
                    trace.x.push(x.clone());
                    trace.q.push(q);
                    trace.q_dot.push(qd);
                    trace.energy.push(e);
                }
                Err(e) => {
                    trace.exit = Some(e.to_string());
                    break 'outer;
                }
            }
        }
    }
    Ok(trace)
}

/// Energy actually moved around during the trace: kinetic plus spring
/// energy, the magnitude of the gravitational change, and the work and
/// dissipation integrals. Independent of the potential-energy datum.
pub fn energy_scale(energy: &[EnergyBreakdown]) -> f64 {
    let pe0 = energy.first().map(|e| e.gravitational).unwrap_or(0.0);
    energy
        .iter()
        .map(|e| {
            e.actuator_kinetic + e.robot_kinetic + e.spring_potential + (e.gravitational - pe0).abs() + e.input_work.abs() + e.dissipated
        })
        .fold(f64::MIN_POSITIVE, f64::max)
}

/// Largest `|E(t) - E(0) - W(t) + D(t)|` relative to `energy_scale`.
pub fn energy_audit(energy: &[EnergyBreakdown]) -> f64 {
    let Some(first) = energy.first() else {
        return 0.0;
    };
    let e0 = first.mechanical();
    let worst = energy
        .iter()
        .map(|e| (e.mechanical() - e0 - e.input_work + e.dissipated).abs())
        .fold(0.0, f64::max);
    worst / energy_scale(energy)
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReplay {
    pub energy: Vec<EnergyBreakdown>,
    /// Energy balance residual of the discrete plan relative to `energy_scale`.
    pub variation: f64,
}

/// Evaluates the true energy along a discrete plan (the LP states at the
/// grid points). Work and dissipation use the trapezoidal rule.
pub fn replay_energy(model: &ContinuousActuatorModel, plant: &dyn RobotPort, traj: &Trajectory) -> Result<EnergyReplay> {
    let mut energy = Vec::with_capacity(traj.len());
    let (mut work, mut diss) = (0.0, 0.0);
    let mut prev_power: Option<(f64, f64)> = None;
    for (n, x) in traj.x.iter().enumerate() {
        let (mut e, _, _) = stored_energy(model, plant, x).map_err(|e| e.at_step(n))?;
        let u = traj
            .u
            .get(n)
            .or(traj.u.last())
            .cloned()
            .unwrap_or_else(|| DVector::zeros(model.joints()));
        let u_prev = if n > 0 { traj.u[n - 1].clone() } else { u.clone() };
        let here = power(model, x, &u_prev);
        if let Some((pi, pd)) = prev_power {
            work += 0.5 * traj.dt * (pi + here.0);
            diss += 0.5 * traj.dt * (pd + here.1);
        }
        prev_power = Some(power(model, x, &u));
        e.input_work = work;
        e.dissipated = diss;
        energy.push(e);
    }
    let variation = energy_audit(&energy);
    Ok(EnergyReplay { energy, variation })
}

/// Input used for the pseudo-mass error sweep.
#[derive(Clone, Debug)]
pub struct TestInput {
    pub x0: DVector<f64>,
    /// Coarse-grid currents, `N - 1` entries.
    pub u: Vec<DVector<f64>>,
    pub dt: f64,
    pub substeps: usize,
}

/// Baseline current plus a linear chirp of amplitude `amplitude` sweeping
/// `f0` to `f1` Hz over `steps - 1` intervals, applied to every joint.
pub fn chirp_input(base: &DVector<f64>, amplitude: f64, f0: f64, f1: f64, dt: f64, steps: usize) -> Vec<DVector<f64>> {
    let horizon = dt * (steps - 1) as f64;
    (0..steps - 1)
        .map(|n| {
            let t = n as f64 * dt;
            let phase = 2.0 * std::f64::consts::PI * (f0 * t + 0.5 * (f1 - f0) / horizon * t * t);
            base.map(|b| b + amplitude * phase.sin())
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct PseudoMassReport {
    pub pseudo_mass_kg: Vec<f64>,
    /// Fastest mode of the actuator-only model per grid entry.
    pub a1_frequency: Vec<f64>,
    /// Mean squared actuator-length error of the linearized discrete rollout.
    pub sigma_z2: Vec<f64>,
    pub operating_points: Vec<Vec<f64>>,
    /// Fastest mode of the coupled system linearized at each operating point.
    pub continuous_frequency: Vec<f64>,
    /// Grid entry with the smallest `sigma_z2`.
    pub recommended_kg: f64,
}

impl PseudoMassReport {
    pub fn sigma_at(&self, mp: f64) -> Option<f64> {
        self.pseudo_mass_kg
            .iter()
            .position(|&m| (m - mp).abs() <= 1e-9 * mp.abs().max(1.0))
            .map(|i| self.sigma_z2[i])
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["pseudo_mass_kg", "a1_frequency_rad_per_s", "sigma_z2_m2"]).map_err(csv_err)?;
        for i in 0..self.pseudo_mass_kg.len() {
            out.write_record([
                format!("{}", self.pseudo_mass_kg[i]),
                format!("{:.9e}", self.a1_frequency[i]),
                format!("{:.9e}", self.sigma_z2[i]),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_operating_points_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let p = self.operating_points.first().map(Vec::len).unwrap_or(0);
        let mut header: Vec<String> = (0..p).map(|j| format!("q_rad_{j}")).collect();
        header.push("continuous_frequency_rad_per_s".into());
        out.write_record(&header).map_err(csv_err)?;
        for (q, f) in self.operating_points.iter().zip(&self.continuous_frequency) {
            let mut rec: Vec<String> = q.iter().map(|v| format!("{v}")).collect();
            rec.push(format!("{f:.9e}"));
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Fastest mode of the coupled system linearized (central differences) at the
/// static equilibrium of joint configuration `q`.
pub fn coupled_frequency(model: &ContinuousActuatorModel, plant: &dyn RobotPort, q: &DVector<f64>) -> Result<f64> {
    let z = plant.length_from_joint(q)?;
    let (x, u) = static_equilibrium(model, plant, &z)?;
    let n = x.len();
    let mut jac = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        let h = 1e-7 * x[i].abs().max(1e-3);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let d = (coupled_derivative(model, plant, &xp, &u)? - coupled_derivative(model, plant, &xm, &u)?) / (2.0 * h);
        jac.column_mut(i).copy_from(&d);
    }
    Ok(fastest_frequency(&jac))
}

/// Sweeps the pseudo-mass: actuator-model frequency, coupled frequency at
/// the operating points, and the rollout error of the linearized discrete
/// model against the nonlinear simulation under `test`.
pub fn tune_pseudomass(
    params: &[ActuatorParams],
    plant: &dyn RobotPort,
    operating_points: &[DVector<f64>],
    grid: &[f64],
    test: &TestInput,
) -> Result<PseudoMassReport> {
    if grid.is_empty() {
        return Err(Error::Contract("pseudo-mass grid is empty".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let reference = build_continuous_model(params)?;
    let truth = simulate_nonlinear(&reference, plant, &test.x0, &test.u, test.dt, test.substeps)?;
    if let Some(exit) = &truth.exit {
        return Err(Error::Contract(format!("test input leaves the transmission range: {exit}")));
    }
    let xc = truth.coarse_states();
    let baseline = Baseline {
        z: xc.iter().map(|x| reference.z(x)).collect(),
        z_dot: Some(xc.iter().map(|x| reference.z_dot(x)).collect()),
    };
    let continuous_frequency = operating_points
        .iter()
        .map(|q| coupled_frequency(&reference, plant, q))
        .collect::<Result<Vec<_>>>()?;

    let mut a1_frequency = Vec::with_capacity(grid.len());
    let mut sigma_z2 = Vec::with_capacity(grid.len());
    for &mp in &grid {
        let prm: Vec<_> = params.iter().map(|p| p.with_pseudo_mass(mp)).collect();
        let model = build_continuous_model(&prm)?;
        a1_frequency.push(max_eigenvalue_frequency(&model));
        let steps = linearize_trajectory(&model, plant, &baseline, test.dt)?;
        let mut x = test.x0.clone();
        let mut err = 0.0;
        let mut count = 0usize;
        for (n, st) in steps.iter().enumerate() {
            x = st.predict(&x, &test.u[n]);
            let dz = model.z(&x) - &baseline.z[n + 1];
            err += dz.norm_squared();
            count += dz.len();
        }
        sigma_z2.push(if x.iter().all(|v| v.is_finite()) { err / count as f64 } else { f64::INFINITY });
    }
    let best = sigma_z2
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| grid[i])
        .unwrap_or(grid[0]);
    Ok(PseudoMassReport {
        pseudo_mass_kg: grid,
        a1_frequency,
        sigma_z2,
        operating_points: operating_points.iter().map(|q| q.iter().copied().collect()).collect(),
        continuous_frequency,
        recommended_kg: best,
    })
}
