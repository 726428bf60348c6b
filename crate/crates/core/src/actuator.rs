//! Unlumped series elastic actuator model.
//!
//! Each joint is three second-order subsystems (spring, motor, load) tied
//! together by a differential that enforces `z = delta + y`. Eliminating the
//! differential force leaves a fourth-order linear system per joint,
//!
//! ```text
//! E_o xdot = A_o x + B_ou u + B_oF F'      x = [delta, delta_dot, y, y_dot]
//! ```
//!
//! with `F' = F - M_p zddot`. The multi-joint model is block diagonal.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of one actuator, all in linear (prismatic) units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActuatorParams {
    /// Spring-system mass `M_s` (kg).
    pub spring_mass: f64,
    /// Spring constant `k` (N/m).
    pub stiffness: f64,
    /// Spring damping `beta_s` (N s/m).
    pub spring_damping: f64,
    /// Reflected motor mass `M_m` (kg).
    pub motor_mass: f64,
    /// Motor damping `beta_m` (N s/m).
    pub motor_damping: f64,
    /// Reflected motor constant `k_m` (N/A).
    pub motor_constant: f64,
    /// Load mass `M_L` (kg).
    pub load_mass: f64,
    /// Load damping `beta_L` (N s/m).
    pub load_damping: f64,
    /// Pseudo-mass `M_p` (kg).
    pub pseudo_mass: f64,
}

impl ActuatorParams {
    pub fn validate(&self, joint: usize) -> Result<()> {
        let fields = [
            ("spring_mass", self.spring_mass),
            ("stiffness", self.stiffness),
            ("spring_damping", self.spring_damping),
            ("motor_mass", self.motor_mass),
            ("motor_damping", self.motor_damping),
            ("load_mass", self.load_mass),
            ("load_damping", self.load_damping),
            ("pseudo_mass", self.pseudo_mass),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams {
                    joint,
                    reason: format!("{name} must be finite and non-negative, got {v}"),
                });
            }
        }
        if !self.motor_constant.is_finite() {
            return Err(Error::InvalidParams {
                joint,
                reason: "motor_constant must be finite".into(),
            });
        }
        Ok(())
    }

    pub fn with_pseudo_mass(mut self, pseudo_mass: f64) -> Self {
        self.pseudo_mass = pseudo_mass;
        self
    }

    /// Descriptor matrices `(E_o, A_o, B_ou, B_oF)` of the compliant model.
    #[rustfmt::skip]
    pub fn descriptor(&self) -> (Matrix4<f64>, Matrix4<f64>, Vector4<f64>, Vector4<f64>) {
        let lp = self.load_mass + self.pseudo_mass;
        let e = Matrix4::new(
            1.0, 0.0, 0.0, 0.0,
            0.0, self.spring_mass + lp, 0.0, lp,
            0.0, 0.0, 1.0, 0.0,
            0.0, lp, 0.0, self.motor_mass + lp,
        );
        let bl = self.load_damping;
        let a = Matrix4::new(
            0.0, 1.0, 0.0, 0.0,
            -self.stiffness, -(self.spring_damping + bl), 0.0, -bl,
            0.0, 0.0, 0.0, 1.0,
            0.0, -bl, 0.0, -(bl + self.motor_damping),
        );
        let bu = Vector4::new(0.0, 0.0, 0.0, self.motor_constant);
        let bf = Vector4::new(0.0, -1.0, 0.0, -1.0);
        (e, a, bu, bf)
    }

    /// Mass of the rigid actuator seen at the output (motor + load + pseudo).
    pub fn rigid_mass(&self) -> f64 {
        self.motor_mass + self.load_mass + self.pseudo_mass
    }
}

/// Actuator state of one joint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActuatorState {
    pub delta: f64,
    pub delta_dot: f64,
    pub y: f64,
    pub y_dot: f64,
}

impl ActuatorState {
    /// Actuator length; the differential constraint makes this exact.
    pub fn z(&self) -> f64 {
        self.delta + self.y
    }

    pub fn z_dot(&self) -> f64 {
        self.delta_dot + self.y_dot
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuatorVariant {
    /// Spring, motor and load through the differential (4 states per joint).
    Compliant,
    /// Spring subsystem removed, `z == y` (2 states per joint).
    Rigid,
}

impl ActuatorVariant {
    pub fn states_per_joint(self) -> usize {
        match self {
            ActuatorVariant::Compliant => 4,
            ActuatorVariant::Rigid => 2,
        }
    }
}

/// Continuous LTI actuator system `xdot = A1 x + B1u u + B1F F'`.
#[derive(Clone, Debug)]
pub struct ContinuousActuatorModel {
    pub variant: ActuatorVariant,
    pub params: Vec<ActuatorParams>,
    pub a1: DMatrix<f64>,
    pub b1u: DMatrix<f64>,
    pub b1f: DMatrix<f64>,
    /// Row `i` picks the output acceleration `zddot_i` out of `xdot`.
    pub s: DMatrix<f64>,
}

/// Builds the compliant model for `params.len()` joints.
pub fn build_continuous_model(params: &[ActuatorParams]) -> Result<ContinuousActuatorModel> {
    if params.is_empty() {
        return Err(Error::Contract("at least one joint is required".into()));
    }
    let p = params.len();
    let n = 4 * p;
    let mut a1 = DMatrix::zeros(n, n);
    let mut b1u = DMatrix::zeros(n, p);
    let mut b1f = DMatrix::zeros(n, p);
    let mut s = DMatrix::zeros(p, n);
    for (i, prm) in params.iter().enumerate() {
        prm.validate(i)?;
        let (e, a, bu, bf) = prm.descriptor();
        // Only the 2x2 mass block can be singular.
        let det = e[(1, 1)] * e[(3, 3)] - e[(1, 3)] * e[(3, 1)];
        let scale = e[(1, 1)].abs().max(e[(3, 3)].abs()).max(1.0);
        if det.abs() <= 1e-12 * scale * scale {
            return Err(Error::SingularMassMatrix { joint: i });
        }
        let lu = e.lu();
        let (ai, bui, bfi) = match (lu.solve(&a), lu.solve(&bu), lu.solve(&bf)) {
            (Some(ai), Some(bui), Some(bfi)) => (ai, bui, bfi),
            _ => return Err(Error::SingularMassMatrix { joint: i }),
        };
        let o = 4 * i;
        a1.view_mut((o, o), (4, 4)).copy_from(&ai);
        b1u.view_mut((o, i), (4, 1)).copy_from(&bui);
        b1f.view_mut((o, i), (4, 1)).copy_from(&bfi);
        s[(i, o + 1)] = 1.0;
        s[(i, o + 3)] = 1.0;
    }
    Ok(ContinuousActuatorModel {
        variant: ActuatorVariant::Compliant,
        params: params.to_vec(),
        a1,
        b1u,
        b1f,
        s,
    })
}

/// Builds the rigid (spring-less) model: per joint `x = [y, y_dot]`, `z = y`.
pub fn rigid_variant(params: &[ActuatorParams]) -> Result<ContinuousActuatorModel> {
    if params.is_empty() {
        return Err(Error::Contract("at least one joint is required".into()));
    }
    let p = params.len();
    let n = 2 * p;
    let mut a1 = DMatrix::zeros(n, n);
    let mut b1u = DMatrix::zeros(n, p);
    let mut b1f = DMatrix::zeros(n, p);
    let mut s = DMatrix::zeros(p, n);
    for (i, prm) in params.iter().enumerate() {
        prm.validate(i)?;
        let m = prm.rigid_mass();
        if m <= 0.0 {
            return Err(Error::SingularMassMatrix { joint: i });
        }
        let o = 2 * i;
        a1[(o, o + 1)] = 1.0;
        a1[(o + 1, o + 1)] = -(prm.motor_damping + prm.load_damping) / m;
        b1u[(o + 1, i)] = prm.motor_constant / m;
        b1f[(o + 1, i)] = -1.0 / m;
        s[(i, o + 1)] = 1.0;
    }
    Ok(ContinuousActuatorModel {
        variant: ActuatorVariant::Rigid,
        params: params.to_vec(),
        a1,
        b1u,
        b1f,
        s,
    })
}

/// Builds either variant.
pub fn build_model(
    variant: ActuatorVariant,
    params: &[ActuatorParams],
) -> Result<ContinuousActuatorModel> {
    match variant {
        ActuatorVariant::Compliant => build_continuous_model(params),
        ActuatorVariant::Rigid => rigid_variant(params),
    }
}

impl ContinuousActuatorModel {
    pub fn joints(&self) -> usize {
        self.params.len()
    }

    pub fn states_per_joint(&self) -> usize {
        self.variant.states_per_joint()
    }

    pub fn state_dim(&self) -> usize {
        self.a1.nrows()
    }

    /// Concatenation `[B1u | B1F]`.
    pub fn b1(&self) -> DMatrix<f64> {
        let p = self.joints();
        let mut b = DMatrix::zeros(self.state_dim(), 2 * p);
        b.columns_mut(0, p).copy_from(&self.b1u);
        b.columns_mut(p, p).copy_from(&self.b1f);
        b
    }

    /// Sparse coefficients of `z_i` over the state vector.
    pub fn z_terms(&self, joint: usize) -> Vec<(usize, f64)> {
        match self.variant {
            ActuatorVariant::Compliant => vec![(4 * joint, 1.0), (4 * joint + 2, 1.0)],
            ActuatorVariant::Rigid => vec![(2 * joint, 1.0)],
        }
    }

    /// Sparse coefficients of `zdot_i` over the state vector.
    pub fn z_dot_terms(&self, joint: usize) -> Vec<(usize, f64)> {
        match self.variant {
            ActuatorVariant::Compliant => vec![(4 * joint + 1, 1.0), (4 * joint + 3, 1.0)],
            ActuatorVariant::Rigid => vec![(2 * joint + 1, 1.0)],
        }
    }

    pub fn delta_index(&self, joint: usize) -> Option<usize> {
        match self.variant {
            ActuatorVariant::Compliant => Some(4 * joint),
            ActuatorVariant::Rigid => None,
        }
    }

    pub fn delta_dot_index(&self, joint: usize) -> Option<usize> {
        self.delta_index(joint).map(|i| i + 1)
    }

    pub fn y_index(&self, joint: usize) -> usize {
        match self.variant {
            ActuatorVariant::Compliant => 4 * joint + 2,
            ActuatorVariant::Rigid => 2 * joint,
        }
    }

    pub fn y_dot_index(&self, joint: usize) -> usize {
        self.y_index(joint) + 1
    }

    fn eval(terms: &[(usize, f64)], x: &DVector<f64>) -> f64 {
        terms.iter().map(|&(i, c)| c * x[i]).sum()
    }

    pub fn z(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.joints(), |i, _| Self::eval(&self.z_terms(i), x))
    }

    pub fn z_dot(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.joints(), |i, _| Self::eval(&self.z_dot_terms(i), x))
    }

    /// Per-joint state view. The rigid variant reports `delta == 0`.
    pub fn joint_state(&self, x: &DVector<f64>, joint: usize) -> ActuatorState {
        let yi = self.y_index(joint);
        let (delta, delta_dot) = match self.delta_index(joint) {
            Some(d) => (x[d], x[d + 1]),
            None => (0.0, 0.0),
        };
        ActuatorState {
            delta,
            delta_dot,
            y: x[yi],
            y_dot: x[yi + 1],
        }
    }

    /// Packs per-joint states into the model's state vector.
    pub fn pack(&self, states: &[ActuatorState]) -> DVector<f64> {
        let mut x = DVector::zeros(self.state_dim());
        for (i, st) in states.iter().enumerate() {
            if let Some(d) = self.delta_index(i) {
                x[d] = st.delta;
                x[d + 1] = st.delta_dot;
            }
            let yi = self.y_index(i);
            x[yi] = st.y;
            x[yi + 1] = st.y_dot;
        }
        x
    }

    /// Continuous-time state derivative.
    pub fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>, f_prime: &DVector<f64>) -> DVector<f64> {
        &self.a1 * x + &self.b1u * u + &self.b1f * f_prime
    }

    /// Internal differential force of one joint, from the load balance
    /// `(M_L + M_p) zddot + beta_L zdot = f - F'`. Diagnostic only.
    pub fn differential_force(
        &self,
        joint: usize,
        x: &DVector<f64>,
        u: &DVector<f64>,
        f_prime: &DVector<f64>,
    ) -> f64 {
        let xdot = self.derivative(x, u, f_prime);
        let prm = &self.params[joint];
        let zdd = (&self.s * &xdot)[joint];
        let zd = self.z_dot(x)[joint];
        (prm.load_mass + prm.pseudo_mass) * zdd + prm.load_damping * zd + f_prime[joint]
    }

    /// Static equilibrium state holding output force `f_prime` at length `z`
    /// together with the current that produces it.
    pub fn static_state(&self, z: &DVector<f64>, f_prime: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let p = self.joints();
        let mut states = Vec::with_capacity(p);
        let mut u = DVector::zeros(p);
        for i in 0..p {
            let prm = &self.params[i];
            let delta = match self.variant {
                ActuatorVariant::Compliant if prm.stiffness > 0.0 => -f_prime[i] / prm.stiffness,
                _ => 0.0,
            };
            states.push(ActuatorState {
                delta,
                delta_dot: 0.0,
                y: z[i] - delta,
                y_dot: 0.0,
            });
            u[i] = if prm.motor_constant != 0.0 {
                f_prime[i] / prm.motor_constant
            } else {
                0.0
            };
        }
        (self.pack(&states), u)
    }
}

/// Fastest mode of the model in rad/s: the largest `|Im(lambda)|` when any
/// oscillatory mode exists, else the largest `|lambda|`.
pub fn max_eigenvalue_frequency(model: &ContinuousActuatorModel) -> f64 {
    fastest_frequency(&model.a1)
}

/// Fastest-mode rule applied to an arbitrary continuous state matrix.
pub fn fastest_frequency(a: &DMatrix<f64>) -> f64 {
    let eigs = a.clone().complex_eigenvalues();
    let scale = eigs.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let tol = 1e-9 * scale.max(1.0);
    let max_im = eigs.iter().map(|l| l.im.abs()).fold(0.0, f64::max);
    if max_im > tol {
        max_im
    } else {
        scale
    }
}
