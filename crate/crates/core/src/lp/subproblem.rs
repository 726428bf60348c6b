//! Assembly of the LP solved at each SLP iteration.

use nalgebra::{DVector, RowDVector};
use serde::{Deserialize, Serialize};

use super::{LinearProgram, RowFamily, Sense};
use crate::actuator::{ActuatorVariant, ContinuousActuatorModel};
use crate::error::{Error, Result};
use crate::linearization::LinearizedStep;
use crate::robot::contact::INTENSITY_COUNT;
use crate::robot::{contact_constraint_rows, ContactModel, RobotPort};
use crate::trajectory::Trajectory;

/// Bounds and boundary conditions shared by every iteration.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    /// Spring deflection bound (m); ignored by the rigid variant.
    pub delta_bar: f64,
    pub z_min: Vec<f64>,
    pub z_max: Vec<f64>,
    /// Motor velocity bound (m/s).
    pub ydot_bar: f64,
    /// Current bound (A). Zero pins every current to zero.
    pub u_bar: f64,
    /// Trust radius on actuator lengths about the baseline (m).
    pub trust_radius: f64,
    pub x_init: DVector<f64>,
    /// Terminal actuator lengths; `None` leaves the end free.
    pub z_fin: Option<DVector<f64>>,
    /// Pin the terminal horizontal COM velocity to zero.
    pub zero_final_com_x_velocity: bool,
}

impl ConstraintSet {
    pub fn validate(&self, model: &ContinuousActuatorModel) -> Result<()> {
        let p = model.joints();
        let bad = |m: String| Err(Error::InfeasibleBounds(m));
        if self.z_min.len() != p || self.z_max.len() != p {
            return Err(Error::Contract(format!("length bounds need {p} entries")));
        }
        if self.x_init.len() != model.state_dim() {
            return Err(Error::Contract(format!(
                "initial state has {} entries, model expects {}",
                self.x_init.len(),
                model.state_dim()
            )));
        }
        for i in 0..p {
            if !(self.z_min[i] < self.z_max[i]) {
                return bad(format!("joint {i}: z_min {} not below z_max {}", self.z_min[i], self.z_max[i]));
            }
        }
        if !(self.trust_radius > 0.0) {
            return bad(format!("trust radius must be positive, got {}", self.trust_radius));
        }
        if model.variant == ActuatorVariant::Compliant && !(self.delta_bar > 0.0) {
            return bad(format!("spring deflection bound must be positive, got {}", self.delta_bar));
        }
        if !(self.ydot_bar > 0.0) {
            return bad(format!("motor velocity bound must be positive, got {}", self.ydot_bar));
        }
        if !(self.u_bar >= 0.0) {
            return bad(format!("current bound must be nonnegative, got {}", self.u_bar));
        }
        let z0 = model.z(&self.x_init);
        for i in 0..p {
            if z0[i] < self.z_min[i] || z0[i] > self.z_max[i] {
                return bad(format!(
                    "joint {i}: initial length {} outside [{}, {}]",
                    z0[i], self.z_min[i], self.z_max[i]
                ));
            }
            if let Some(zf) = &self.z_fin {
                if zf.len() != p {
                    return Err(Error::Contract(format!("terminal lengths need {p} entries")));
                }
                if zf[i] < self.z_min[i] || zf[i] > self.z_max[i] {
                    return bad(format!(
                        "joint {i}: terminal length {} outside [{}, {}]",
                        zf[i], self.z_min[i], self.z_max[i]
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// Maximize the terminal upward COM velocity.
    JumpComYVelocity,
    /// Maximize the terminal velocity of one actuator.
    ActuatorFinalVelocity { joint: usize },
    /// Constant objective; the LP only has to be feasible.
    Feasibility,
}

#[derive(Clone, Debug)]
pub struct CostSpec {
    pub objective: Objective,
    /// Weight on `u_abs` for the jump objective.
    pub alpha: f64,
    /// Weight on contact intensities.
    pub gamma: f64,
    /// Weight on `u_abs` for the actuator-velocity objective.
    pub sigma: f64,
    /// Reference currents, `N - 1` entries.
    pub u_baseline: Vec<DVector<f64>>,
}

impl CostSpec {
    pub fn input_weight(&self) -> f64 {
        match self.objective {
            Objective::JumpComYVelocity => self.alpha,
            Objective::ActuatorFinalVelocity { .. } => self.sigma,
            Objective::Feasibility => 0.0,
        }
    }

    /// Row `c` such that the maximized quantity is `c . zdot_N`, with robot
    /// terms frozen at the terminal lengths.
    pub fn final_velocity_row(&self, plant: &dyn RobotPort, z_final: &DVector<f64>) -> Result<RowDVector<f64>> {
        let p = plant.dof();
        match self.objective {
            Objective::JumpComYVelocity => {
                let q = plant.joint_from_length(z_final)?;
                let l_inv = plant.moment_arm(&q).try_inverse().ok_or_else(|| Error::SingularMomentArm {
                    q: q.iter().copied().collect(),
                })?;
                Ok(plant.com_jacobians(&q).1 * l_inv)
            }
            Objective::ActuatorFinalVelocity { joint } => {
                if joint >= p {
                    return Err(Error::Contract(format!("objective joint {joint} out of range")));
                }
                let mut c = RowDVector::zeros(p);
                c[joint] = 1.0;
                Ok(c)
            }
            Objective::Feasibility => Ok(RowDVector::zeros(p)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("alpha", self.alpha), ("gamma", self.gamma), ("sigma", self.sigma)] {
            if !(w >= 0.0) {
                return Err(Error::Contract(format!("cost weight {name} must be nonnegative")));
            }
        }
        Ok(())
    }
}

/// Column offsets of the variable blocks `X`, `U`, `U_abs`, `Phi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VariableLayout {
    pub steps: usize,
    pub nx: usize,
    pub p: usize,
    pub with_contacts: bool,
}

impl VariableLayout {
    pub fn x(&self, n: usize, i: usize) -> usize {
        n * self.nx + i
    }

    pub fn u(&self, n: usize, j: usize) -> usize {
        self.steps * self.nx + n * self.p + j
    }

    pub fn u_abs(&self, n: usize, j: usize) -> usize {
        self.steps * self.nx + (self.steps - 1) * self.p + n * self.p + j
    }

    pub fn phi(&self, n: usize, k: usize) -> usize {
        self.steps * self.nx + 2 * (self.steps - 1) * self.p + n * INTENSITY_COUNT + k
    }

    pub fn x_count(&self) -> usize {
        self.steps * self.nx
    }

    pub fn u_count(&self) -> usize {
        (self.steps - 1) * self.p
    }

    pub fn phi_count(&self) -> usize {
        if self.with_contacts {
            (self.steps - 1) * INTENSITY_COUNT
        } else {
            0
        }
    }

    pub fn total(&self) -> usize {
        self.x_count() + 2 * self.u_count() + self.phi_count()
    }

    fn names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.total());
        for n in 0..self.steps {
            names.extend((0..self.nx).map(|i| format!("x_{n}_{i}")));
        }
        for n in 0..self.steps - 1 {
            names.extend((0..self.p).map(|j| format!("u_{n}_{j}")));
        }
        for n in 0..self.steps - 1 {
            names.extend((0..self.p).map(|j| format!("uabs_{n}_{j}")));
        }
        if self.with_contacts {
            for n in 0..self.steps - 1 {
                names.extend((0..INTENSITY_COUNT).map(|k| format!("phi_{n}_{k}")));
            }
        }
        names
    }
}

/// Everything the builder needs besides the per-iteration data.
#[derive(Clone, Copy)]
pub struct SubproblemContext<'a> {
    pub model: &'a ContinuousActuatorModel,
    pub plant: &'a dyn RobotPort,
    pub contact: Option<&'a ContactModel>,
    pub constraints: &'a ConstraintSet,
    pub cost: &'a CostSpec,
    pub dt: f64,
}

#[derive(Clone, Debug)]
pub struct Subproblem {
    pub lp: LinearProgram,
    pub layout: VariableLayout,
}

impl Subproblem {
    pub fn extract(&self, model: &ContinuousActuatorModel, dt: f64, v: &[f64]) -> Trajectory {
        let l = &self.layout;
        let x = (0..l.steps)
            .map(|n| DVector::from_fn(l.nx, |i, _| v[l.x(n, i)]))
            .collect();
        let u = (0..l.steps - 1)
            .map(|n| DVector::from_fn(l.p, |j, _| v[l.u(n, j)]))
            .collect();
        let phi = if l.with_contacts {
            (0..l.steps - 1)
                .map(|n| DVector::from_fn(INTENSITY_COUNT, |k, _| v[l.phi(n, k)]))
                .collect()
        } else {
            Vec::new()
        };
        Trajectory::from_states(model, dt, x, u, phi)
    }
}

fn shift(terms: &[(usize, f64)], offset: usize) -> Vec<(usize, f64)> {
    terms.iter().map(|&(i, c)| (offset + i, c)).collect()
}

/// Builds the LP for one iteration from `N - 1` linearized steps and the
/// `N`-point baseline lengths used by the trust region.
pub fn build_subproblem(ctx: &SubproblemContext<'_>, steps: &[LinearizedStep], z_base: &[DVector<f64>]) -> Result<Subproblem> {
    let model = ctx.model;
    let cons = ctx.constraints;
    let cost = ctx.cost;
    let n_steps = z_base.len();
    if n_steps < 2 || steps.len() != n_steps - 1 {
        return Err(Error::Contract(format!(
            "{} linearized steps for a {n_steps}-point baseline",
            steps.len()
        )));
    }
    if cost.u_baseline.len() != n_steps - 1 {
        return Err(Error::Contract("reference currents must have N - 1 entries".into()));
    }
    cons.validate(model)?;
    cost.validate()?;
    let p = model.joints();
    let nx = model.state_dim();
    let layout = VariableLayout {
        steps: n_steps,
        nx,
        p,
        with_contacts: ctx.contact.is_some(),
    };
    let mut lp = LinearProgram::new(layout.total());
    lp.names = layout.names();

    // x_{n+1} = A_lin x_n + B_lin u_n + bias_n
    for (n, st) in steps.iter().enumerate() {
        for r in 0..nx {
            let mut coeffs = vec![(layout.x(n + 1, r), 1.0)];
            coeffs.extend((0..nx).map(|c| (layout.x(n, c), -st.a_lin[(r, c)])));
            coeffs.extend((0..p).map(|j| (layout.u(n, j), -st.b_lin[(r, j)])));
            lp.add_row(coeffs, Sense::Eq, st.bias[r], RowFamily::Dynamics);
        }
    }
    for i in 0..nx {
        lp.add_row([(layout.x(0, i), 1.0)], Sense::Eq, cons.x_init[i], RowFamily::InitialState);
    }
    let last = n_steps - 1;
    if let Some(zf) = &cons.z_fin {
        for i in 0..p {
            lp.add_row(shift(&model.z_terms(i), layout.x(last, 0)), Sense::Eq, zf[i], RowFamily::FinalPosition);
        }
    }
    let z_final = cons.z_fin.clone().unwrap_or_else(|| z_base[last].clone());
    if cons.zero_final_com_x_velocity {
        let q = ctx.plant.joint_from_length(&z_final)?;
        let l_inv = ctx.plant.moment_arm(&q).try_inverse().ok_or_else(|| Error::SingularMomentArm {
            q: q.iter().copied().collect(),
        })?;
        let row = ctx.plant.com_jacobians(&q).0 * l_inv;
        let mut coeffs = Vec::new();
        for i in 0..p {
            coeffs.extend(shift(&model.z_dot_terms(i), layout.x(last, 0)).into_iter().map(|(k, c)| (k, c * row[i])));
        }
        lp.add_row(coeffs, Sense::Eq, 0.0, RowFamily::FinalComVelocity);
    }

    if let Some(contact) = ctx.contact {
        contact.validate()?;
        for (n, st) in steps.iter().enumerate() {
            let rows = contact_constraint_rows(ctx.plant, contact, &st.q, &st.q_dot, &st.z_accel, &st.force)
                .map_err(|e| e.at_step(n))?;
            for r in 0..3 {
                let mut coeffs: Vec<_> = (0..nx).map(|c| (layout.x(n, c), rows.x_coeffs[(r, c)])).collect();
                coeffs.extend((0..p).map(|j| (layout.u(n, j), rows.u_coeffs[(r, j)])));
                coeffs.extend((0..INTENSITY_COUNT).map(|k| (layout.phi(n, k), rows.phi_coeffs[(r, k)])));
                lp.add_row(coeffs, Sense::Eq, rows.rhs[r], RowFamily::Contact);
            }
            for k in 0..INTENSITY_COUNT {
                lp.add_row([(layout.phi(n, k), 1.0)], Sense::Ge, 0.0, RowFamily::IntensityNonnegative);
            }
        }
    }

    for n in 0..n_steps {
        let base = layout.x(n, 0);
        for i in 0..p {
            let z = shift(&model.z_terms(i), base);
            lp.add_abs_bound(&z, z_base[n][i], cons.trust_radius, RowFamily::TrustRegion);
            if let Some(d) = model.delta_index(i) {
                lp.add_abs_bound(&[(base + d, 1.0)], 0.0, cons.delta_bar, RowFamily::SpringDeflection);
            }
            lp.add_row(z.iter().copied(), Sense::Ge, cons.z_min[i], RowFamily::LengthBounds);
            lp.add_row(z, Sense::Le, cons.z_max[i], RowFamily::LengthBounds);
            lp.add_abs_bound(&[(base + model.y_dot_index(i), 1.0)], 0.0, cons.ydot_bar, RowFamily::MotorVelocity);
        }
    }
    for n in 0..n_steps - 1 {
        for j in 0..p {
            let (u, a) = (layout.u(n, j), layout.u_abs(n, j));
            lp.add_abs_bound(&[(u, 1.0)], 0.0, cons.u_bar, RowFamily::CurrentBounds);
            let ub = cost.u_baseline[n][j];
            lp.add_row([(u, 1.0), (a, -1.0)], Sense::Le, ub, RowFamily::InputDeviation);
            lp.add_row([(u, 1.0), (a, 1.0)], Sense::Ge, ub, RowFamily::InputDeviation);
        }
    }

    let c = cost.final_velocity_row(ctx.plant, &z_final)?;
    for i in 0..p {
        for (k, w) in shift(&model.z_dot_terms(i), layout.x(last, 0)) {
            lp.cost[k] -= w * c[i];
        }
    }
    let wu = cost.input_weight();
    for n in 0..n_steps - 1 {
        for j in 0..p {
            lp.cost[layout.u_abs(n, j)] = wu;
        }
        if layout.with_contacts {
            for k in 0..INTENSITY_COUNT {
                lp.cost[layout.phi(n, k)] = cost.gamma;
            }
        }
    }
    Ok(Subproblem { lp, layout })
}
