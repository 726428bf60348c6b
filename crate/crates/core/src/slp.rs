//! Sequential linear programming loop.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::actuator::{ActuatorVariant, ContinuousActuatorModel};
use crate::error::{Error, Result};
use crate::linearization::{linearize_trajectory, Baseline, BaselineVelocity};
use crate::lp::{build_subproblem, solve_lp, BackendKind, ConstraintSet, CostSpec, SubproblemContext};
use crate::robot::{ContactModel, RobotPort};
use crate::trajectory::Trajectory;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlpConfig {
    /// Number of trajectory points `N`.
    pub steps: usize,
    pub dt: f64,
    /// Stop once the stacked state change falls below this 2-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Source of baseline actuator velocities.
    #[serde(default)]
    pub baseline_velocity: BaselineVelocity,
    #[serde(default)]
    pub backend: BackendKind,
    /// Halve the trust radius (up to three times) when a subproblem is
    /// infeasible instead of failing immediately.
    #[serde(default)]
    pub retry_halve_trust: bool,
}

impl SlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::Contract(format!("need at least 2 steps, got {}", self.steps)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Contract(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Contract(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::Contract("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// A fully specified trajectory problem for one actuator variant.
#[derive(Clone)]
pub struct SlpProblem {
    pub model: ContinuousActuatorModel,
    pub plant: Arc<dyn RobotPort>,
    pub contact: Option<ContactModel>,
    pub constraints: ConstraintSet,
    pub cost: CostSpec,
    pub config: SlpConfig,
}

impl SlpProblem {
    pub fn context(&self) -> SubproblemContext<'_> {
        SubproblemContext {
            model: &self.model,
            plant: self.plant.as_ref(),
            contact: self.contact.as_ref(),
            constraints: &self.constraints,
            cost: &self.cost,
            dt: self.config.dt,
        }
    }

    /// First baseline: the initial state held over the horizon.
    pub fn initial_baseline(&self) -> Trajectory {
        let u0 = self
            .cost
            .u_baseline
            .first()
            .cloned()
            .unwrap_or_else(|| DVector::zeros(self.model.joints()));
        Trajectory::constant(&self.model, self.config.dt, self.config.steps, &self.constraints.x_init, &u0)
    }

    /// The maximized terminal velocity of a trajectory.
    pub fn final_velocity(&self, traj: &Trajectory) -> Result<f64> {
        let z_final = self
            .constraints
            .z_fin
            .clone()
            .unwrap_or_else(|| traj.z[traj.len() - 1].clone());
        let c = self.cost.final_velocity_row(self.plant.as_ref(), &z_final)?;
        Ok((c * &traj.z_dot[traj.len() - 1])[0])
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.constraints.validate(&self.model)?;
        self.cost.validate()?;
        if self.cost.u_baseline.len() != self.config.steps - 1 {
            return Err(Error::Contract("reference currents must have N - 1 entries".into()));
        }
        if self.plant.dof() != self.model.joints() {
            return Err(Error::Contract("plant and actuator joint counts differ".into()));
        }
        Ok(())
    }
}

/// One line of progress output.
#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    pub objective: f64,
    pub final_velocity: f64,
    pub linearization_s: f64,
    pub solve_s: f64,
    pub max_violation: f64,
    pub max_condition: f64,
    pub trust_radius: f64,
    pub backend: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct TimingSummary {
    pub mean_linearization_s: f64,
    pub mean_solve_s: f64,
    pub total_s: f64,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub variant: ActuatorVariant,
    pub trajectory: Trajectory,
    /// Every LP iterate, in order.
    pub iterates: Vec<Trajectory>,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub timing: TimingSummary,
}

impl OptimizationResult {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual).collect()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn final_velocity(&self) -> f64 {
        self.records.last().map(|r| r.final_velocity).unwrap_or(0.0)
    }
}

/// Progress sink writing one JSON object per line.
pub fn ndjson_progress<W: Write>(mut w: W) -> impl FnMut(&IterationRecord) {
    move |rec| {
        if let Ok(line) = serde_json::to_string(rec) {
            let _ = writeln!(w, "{line}");
        }
    }
}

/// Runs linearize, build, solve, update until the state trajectory stops
/// changing. Non-convergence returns the last iterate with
/// `converged == false`.
pub fn optimize(problem: &SlpProblem, progress: &mut dyn FnMut(&IterationRecord)) -> Result<OptimizationResult> {
    problem.validate()?;
    let cfg = &problem.config;
    let start = Instant::now();
    let mut prev = problem.initial_baseline();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut iterates = Vec::new();
    let mut converged = false;
    for iteration in 1..=cfg.max_iter {
        let wrap = |e: Error| Error::Iteration {
            iteration,
            source: Box::new(e),
        };
        let t0 = Instant::now();
        let baseline = Baseline::from_states(&problem.model, &prev.x, cfg.baseline_velocity);
        let steps = linearize_trajectory(&problem.model, problem.plant.as_ref(), &baseline, cfg.dt).map_err(wrap)?;
        let linearization_s = t0.elapsed().as_secs_f64();
        let max_condition = steps.iter().map(|s| s.condition).fold(0.0, f64::max);

        let t1 = Instant::now();
        let mut constraints = problem.constraints.clone();
        let retries = if cfg.retry_halve_trust { 3 } else { 0 };
        let mut attempt = 0;
        let (sub, sol) = loop {
            let ctx = SubproblemContext {
                constraints: &constraints,
                ..problem.context()
            };
            let sub = build_subproblem(&ctx, &steps, &baseline.z).map_err(wrap)?;
            match solve_lp(&sub.lp, cfg.backend) {
                Ok(sol) => break (sub, sol),
                Err(Error::LpInfeasible { families }) if attempt < retries => {
                    log::warn!("iteration {iteration}: infeasible ({}), halving trust radius", families.join(", "));
                    constraints.trust_radius *= 0.5;
                    attempt += 1;
                }
                Err(e) => return Err(wrap(e)),
            }
        };
        let solve_s = t1.elapsed().as_secs_f64();

        let traj = sub.extract(&problem.model, cfg.dt, &sol.values);
        let residual = traj.state_distance(&prev);
        let record = IterationRecord {
            iteration,
            residual,
            objective: sol.objective,
            final_velocity: problem.final_velocity(&traj).map_err(wrap)?,
            linearization_s,
            solve_s,
            max_violation: sol.max_violation,
            max_condition,
            trust_radius: constraints.trust_radius,
            backend: sol.backend,
        };
        if let Some(last) = records.last() {
            if record.objective > last.objective + 1e-9 * last.objective.abs().max(1.0) {
                log::info!(
                    "iteration {iteration}: objective rose from {:.6e} to {:.6e}",
                    last.objective,
                    record.objective
                );
            }
        }
        progress(&record);
        records.push(record);
        iterates.push(traj.clone());
        prev = traj;
        if residual < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("no convergence within {} iterations", cfg.max_iter);
    }
    let k = records.len().max(1) as f64;
    let timing = TimingSummary {
        mean_linearization_s: records.iter().map(|r| r.linearization_s).sum::<f64>() / k,
        mean_solve_s: records.iter().map(|r| r.solve_s).sum::<f64>() / k,
        total_s: start.elapsed().as_secs_f64(),
    };
    Ok(OptimizationResult {
        variant: problem.model.variant,
        trajectory: prev,
        iterates,
        records,
        converged,
        timing,
    })
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub compliant: OptimizationResult,
    pub rigid: OptimizationResult,
}

impl Comparison {
    /// Compliant over rigid terminal velocity.
    pub fn gain(&self) -> f64 {
        self.compliant.final_velocity() / self.rigid.final_velocity()
    }
}

/// Optimizes the same task with the compliant and the rigid actuator model.
pub fn compare_rigid_compliant(
    compliant: &SlpProblem,
    rigid: &SlpProblem,
    progress: &mut dyn FnMut(ActuatorVariant, &IterationRecord),
) -> Result<Comparison> {
    if compliant.model.variant != ActuatorVariant::Compliant || rigid.model.variant != ActuatorVariant::Rigid {
        return Err(Error::Contract("comparison needs a compliant and a rigid problem".into()));
    }
    let c = optimize(compliant, &mut |r| progress(ActuatorVariant::Compliant, r))?;
    let r = optimize(rigid, &mut |r| progress(ActuatorVariant::Rigid, r))?;
    Ok(Comparison { compliant: c, rigid: r })
}
