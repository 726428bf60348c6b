//! Per-step affine update obtained by eliminating `F'` about a baseline.
//!
//! With the robot impedance frozen at the baseline point, `F'` is affine in
//! the actuator state and current. Substituting it into the ZOH update gives
//!
//! ```text
//! x_{n+1} = A_lin,n x_n + B_lin,n u_n + bias_n
//! ```

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::actuator::ContinuousActuatorModel;
use crate::discretization::{zoh_discretize, DiscreteActuatorModel};
use crate::error::{Error, Result};
use crate::robot::{impedance_terms, joint_velocity, ImpedanceTerms, RobotPort};

/// Condition number above which an elimination step is flagged.
pub const CONDITION_WARN: f64 = 1e8;
/// Condition number above which elimination is refused.
pub const CONDITION_FAIL: f64 = 1e14;

/// `y = x_gain x + u_gain u + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub x: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl AffineMap {
    pub fn zeros(rows: usize, nx: usize, nu: usize) -> Self {
        AffineMap {
            x: DMatrix::zeros(rows, nx),
            u: DMatrix::zeros(rows, nu),
            c: DVector::zeros(rows),
        }
    }

    pub fn eval(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.x * x + &self.u * u + &self.c
    }
}

/// Affine `F'` map with the condition number of the bracket that was inverted.
#[derive(Clone, Debug)]
pub struct FPrimeMap {
    pub map: AffineMap,
    pub condition: f64,
}

/// Solves `F' = R zddot + b` together with the actuator admittance
/// `zddot = S (A1 x + B1u u + B1F F')` for `F'`.
pub fn eliminate_f_prime(model: &ContinuousActuatorModel, imp: &ImpedanceTerms) -> Result<FPrimeMap> {
    let p = model.joints();
    let r = &imp.reflected_inertia;
    let bracket = DMatrix::<f64>::identity(p, p) - r * (&model.s * &model.b1f);
    let sv = bracket.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < CONDITION_FAIL) {
        return Err(Error::Elimination { step: 0, condition });
    }
    let w = bracket
        .try_inverse()
        .ok_or(Error::Elimination { step: 0, condition })?;
    let wr = &w * r;
    Ok(FPrimeMap {
        map: AffineMap {
            x: &wr * (&model.s * &model.a1),
            u: &wr * (&model.s * &model.b1u),
            c: &w * &imp.bias,
        },
        condition,
    })
}

/// Actuator output acceleration and force as affine maps, given an `F'` map.
pub fn output_maps(model: &ContinuousActuatorModel, f_prime: &AffineMap) -> (AffineMap, AffineMap) {
    let sbf = &model.s * &model.b1f;
    let z_accel = AffineMap {
        x: &model.s * &model.a1 + &sbf * &f_prime.x,
        u: &model.s * &model.b1u + &sbf * &f_prime.u,
        c: &sbf * &f_prime.c,
    };
    let mp = DMatrix::from_diagonal(&DVector::from_iterator(
        model.joints(),
        model.params.iter().map(|p| p.pseudo_mass),
    ));
    let force = AffineMap {
        x: &f_prime.x + &mp * &z_accel.x,
        u: &f_prime.u + &mp * &z_accel.u,
        c: &f_prime.c + &mp * &z_accel.c,
    };
    (z_accel, force)
}

/// Discrete affine update for one step plus the frozen maps it came from.
#[derive(Clone, Debug)]
pub struct LinearizedStep {
    pub a_lin: DMatrix<f64>,
    pub b_lin: DMatrix<f64>,
    pub bias: DVector<f64>,
    /// `F' = G_x x + G_u u + g`.
    pub f_prime: AffineMap,
    /// Output acceleration `zddot` at the start of the step.
    pub z_accel: AffineMap,
    /// Actuator force `F = F' + M_p zddot`.
    pub force: AffineMap,
    /// Baseline joint position and velocity the step was frozen at.
    pub q: DVector<f64>,
    pub q_dot: DVector<f64>,
    pub condition: f64,
}

impl LinearizedStep {
    pub fn predict(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a_lin * x + &self.b_lin * u + &self.bias
    }
}

/// Combines a ZOH pair with an `F'` map.
pub fn compose_step(disc: &DiscreteActuatorModel, f_prime: &AffineMap) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let bu = disc.b_u();
    let bf = disc.b_f();
    (
        &disc.a + &bf * &f_prime.x,
        bu + &bf * &f_prime.u,
        &bf * &f_prime.c,
    )
}

/// How baseline actuator velocities are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineVelocity {
    /// `zdot` from central differences of the baseline lengths
    /// (one-sided at the ends).
    #[default]
    CentralDifference,
    /// `zdot` read from the previous iterate's actuator states.
    State,
}

/// Baseline actuator-length trajectory, optionally with velocities.
#[derive(Clone, Debug)]
pub struct Baseline {
    pub z: Vec<DVector<f64>>,
    pub z_dot: Option<Vec<DVector<f64>>>,
}

impl Baseline {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Constant pose held over `n` steps.
    pub fn constant(z: DVector<f64>, n: usize) -> Self {
        let p = z.len();
        Baseline {
            z: vec![z; n],
            z_dot: Some(vec![DVector::zeros(p); n]),
        }
    }

    /// Baseline lengths and velocities read off a state trajectory.
    pub fn from_states(model: &ContinuousActuatorModel, x: &[DVector<f64>], velocity: BaselineVelocity) -> Self {
        let z = x.iter().map(|xi| model.z(xi)).collect();
        let z_dot = match velocity {
            BaselineVelocity::State => Some(x.iter().map(|xi| model.z_dot(xi)).collect()),
            BaselineVelocity::CentralDifference => None,
        };
        Baseline { z, z_dot }
    }

    pub fn velocities(&self, dt: f64) -> Vec<DVector<f64>> {
        if let Some(v) = &self.z_dot {
            return v.clone();
        }
        central_differences(&self.z, dt)
    }
}

pub fn central_differences(z: &[DVector<f64>], dt: f64) -> Vec<DVector<f64>> {
    let n = z.len();
    (0..n)
        .map(|i| {
            if n < 2 {
                DVector::zeros(z[0].len())
            } else if i == 0 {
                (&z[1] - &z[0]) / dt
            } else if i == n - 1 {
                (&z[n - 1] - &z[n - 2]) / dt
            } else {
                (&z[i + 1] - &z[i - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

/// Resting actuator state at length `z` with the output force balancing
/// gravity, and the current that holds it there.
pub fn static_equilibrium(
    model: &ContinuousActuatorModel,
    plant: &dyn RobotPort,
    z: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let q = plant.joint_from_length(z)?;
    let mp: Vec<f64> = model.params.iter().map(|p| p.pseudo_mass).collect();
    let imp = impedance_terms(plant, &q, &DVector::zeros(plant.dof()), &mp)?;
    Ok(model.static_state(z, &imp.bias))
}

/// Linearizes one step at baseline actuator length `z` and velocity `z_dot`.
pub fn linearize_point(
    model: &ContinuousActuatorModel,
    disc: &DiscreteActuatorModel,
    plant: &dyn RobotPort,
    z: &DVector<f64>,
    z_dot: &DVector<f64>,
) -> Result<LinearizedStep> {
    let q = plant.joint_from_length(z)?;
    let q_dot = joint_velocity(plant, &q, z_dot)?;
    let mp: Vec<f64> = model.params.iter().map(|p| p.pseudo_mass).collect();
    let imp = impedance_terms(plant, &q, &q_dot, &mp)?;
    let fp = eliminate_f_prime(model, &imp)?;
    let (a_lin, b_lin, bias) = compose_step(disc, &fp.map);
    let (z_accel, force) = output_maps(model, &fp.map);
    Ok(LinearizedStep {
        a_lin,
        b_lin,
        bias,
        f_prime: fp.map,
        z_accel,
        force,
        q,
        q_dot,
        condition: fp.condition,
    })
}

/// Linearizes about every baseline step but the last (`N - 1` steps).
pub fn linearize_trajectory(
    model: &ContinuousActuatorModel,
    plant: &dyn RobotPort,
    baseline: &Baseline,
    dt: f64,
) -> Result<Vec<LinearizedStep>> {
    if baseline.len() < 2 {
        return Err(Error::Contract("baseline needs at least two points".into()));
    }
    if plant.dof() != model.joints() {
        return Err(Error::Contract(format!(
            "plant has {} joints but actuator model has {}",
            plant.dof(),
            model.joints()
        )));
    }
    let disc = zoh_discretize(model, dt)?;
    let z_dot = baseline.velocities(dt);
    let mut steps = Vec::with_capacity(baseline.len() - 1);
    for n in 0..baseline.len() - 1 {
        let step = linearize_point(model, &disc, plant, &baseline.z[n], &z_dot[n]).map_err(|e| match e {
            Error::Elimination { condition, .. } => Error::Elimination { step: n, condition },
            e => e.at_step(n),
        })?;
        if step.condition > CONDITION_WARN {
            log::warn!("step {n}: elimination bracket condition {:.3e}", step.condition);
        }
        steps.push(step);
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuator::{build_continuous_model, ActuatorParams};
    use crate::robot::{ConstantPlant, SingleDofArm, SingleDofArmParams, Transmission};

    fn params(mp: f64) -> ActuatorParams {
        ActuatorParams {
            spring_mass: 1.0,
            stiffness: 698600.0,
            spring_damping: 500.0,
            motor_mass: 250.0,
            motor_damping: 5885.0,
            motor_constant: 150.0,
            load_mass: 0.227,
            load_damping: 0.0,
            pseudo_mass: mp,
        }
    }

    #[test]
    fn matched_pseudo_mass_annihilates_state_gains() {
        let arm = 0.04;
        let inertia = 0.352;
        let refl = inertia / (arm * arm);
        let plant = ConstantPlant::new(
            DMatrix::from_element(1, 1, inertia),
            DVector::from_element(1, 2.5),
            vec![Transmission::Linear {
                z_ref: 0.1,
                q_ref: 0.0,
                arm,
            }],
        );
        let model = build_continuous_model(&[params(refl)]).unwrap();
        let q = DVector::zeros(1);
        let imp = impedance_terms(&plant, &q, &DVector::zeros(1), &[refl]).unwrap();
        let fp = eliminate_f_prime(&model, &imp).unwrap();
        assert!(fp.map.x.norm() < 1e-9);
        assert!(fp.map.u.norm() < 1e-9);
        assert!((fp.map.c[0] - 2.5 / arm).abs() < 1e-9);
    }

    #[test]
    fn static_arm_force_equals_load() {
        let arm = SingleDofArm::new(SingleDofArmParams::p170());
        let model = build_continuous_model(&[params(220.0)]).unwrap();
        let q = DVector::from_element(1, 1.3);
        let z = arm.length_from_joint(&q).unwrap();
        let imp = impedance_terms(&arm, &q, &DVector::zeros(1), &[220.0]).unwrap();
        let fp = eliminate_f_prime(&model, &imp).unwrap();
        // static equilibrium state holding the gravity load with u = F'/k_m
        let load = DVector::from_element(1, arm.gravity(&q)[0] / arm.moment_arm(&q)[(0, 0)]);
        let (x, u) = model.static_state(&z, &load);
        let f = fp.map.eval(&x, &u);
        assert!((f[0] - load[0]).abs() < 1e-9 * load[0].abs());
    }

    #[test]
    fn affine_map_reproduces_step_matrices() {
        let arm = SingleDofArm::new(SingleDofArmParams::p170());
        let model = build_continuous_model(&[params(220.0)]).unwrap();
        let disc = zoh_discretize(&model, 0.005).unwrap();
        let z = DVector::from_element(1, 0.12);
        let zd = DVector::from_element(1, 0.03);
        let step = linearize_point(&model, &disc, &arm, &z, &zd).unwrap();
        let x = DVector::from_vec(vec![0.001, 0.02, 0.119, 0.01]);
        let u = DVector::from_element(1, 1.3);
        let fprime = step.f_prime.eval(&x, &u);
        let mut input = DVector::zeros(2);
        input[0] = u[0];
        input[1] = fprime[0];
        let direct = &disc.a * &x + &disc.b * input;
        assert!((direct - step.predict(&x, &u)).norm() < 1e-10);
    }

    #[test]
    fn lti_plant_gives_identical_steps() {
        let plant = ConstantPlant::new(
            DMatrix::from_element(1, 1, 0.3),
            DVector::zeros(1),
            vec![Transmission::Linear {
                z_ref: 0.1,
                q_ref: 0.0,
                arm: 0.04,
            }],
        );
        let model = build_continuous_model(&[params(100.0)]).unwrap();
        let z: Vec<_> = (0..10).map(|i| DVector::from_element(1, 0.1 + 0.001 * i as f64)).collect();
        let steps = linearize_trajectory(&model, &plant, &Baseline { z, z_dot: None }, 0.01).unwrap();
        assert_eq!(steps.len(), 9);
        for s in &steps[1..] {
            assert_eq!(s.a_lin, steps[0].a_lin);
            assert_eq!(s.b_lin, steps[0].b_lin);
        }
    }

    #[test]
    fn central_differences_are_one_sided_at_ends() {
        let z: Vec<_> = [0.0, 1.0, 4.0].iter().map(|&v| DVector::from_element(1, v)).collect();
        let d = central_differences(&z, 0.5);
        assert_eq!(d[0][0], 2.0);
        assert_eq!(d[1][0], 4.0);
        assert_eq!(d[2][0], 6.0);
    }
}
