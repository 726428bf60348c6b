use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use super::{RobotPort, Transmission, GRAVITY};

/// Pendulum arm on one actuator; hangs straight down at `q = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleDofArmParams {
    /// Inertia about the pivot (kg m^2).
    pub inertia: f64,
    pub mass: f64,
    /// Pivot-to-COM distance (m).
    pub com_distance: f64,
    pub gravity: f64,
    pub transmission: Transmission,
}

impl SingleDofArmParams {
    /// Testbed-like arm. Geometry is calibration: the lever puts
    /// `z = 0.11597 m` at `q = 1.57 rad` and the reflected inertia there is
    /// about 220 kg.
    pub fn p170() -> Self {
        SingleDofArmParams {
            inertia: 0.2477,
            mass: 1.5,
            com_distance: 0.25,
            gravity: GRAVITY,
            transmission: Transmission::Lever {
                a: 0.1,
                b: 0.04,
                c: 0.0,
                sign: 1.0,
                offset: 0.234035,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct SingleDofArm {
    pub params: SingleDofArmParams,
    transmissions: [Transmission; 1],
}

impl SingleDofArm {
    pub fn new(params: SingleDofArmParams) -> Self {
        let transmissions = [params.transmission];
        SingleDofArm { params, transmissions }
    }
}

impl RobotPort for SingleDofArm {
    fn dof(&self) -> usize {
        1
    }

    fn mass_matrix(&self, _q: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, self.params.inertia)
    }

    fn coriolis(&self, _q: &DVector<f64>, _q_dot: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(1)
    }

    fn gravity(&self, q: &DVector<f64>) -> DVector<f64> {
        let p = &self.params;
        DVector::from_element(1, p.mass * p.gravity * p.com_distance * q[0].sin())
    }

    fn potential_energy(&self, q: &DVector<f64>) -> f64 {
        let p = &self.params;
        -p.mass * p.gravity * p.com_distance * q[0].cos()
    }

    fn transmissions(&self) -> &[Transmission] {
        &self.transmissions
    }

    fn gravity_constant(&self) -> f64 {
        self.params.gravity
    }

    fn total_mass(&self) -> f64 {
        self.params.mass
    }

    fn com_position(&self, q: &DVector<f64>) -> (f64, f64) {
        let d = self.params.com_distance;
        (d * q[0].sin(), -d * q[0].cos())
    }

    fn com_jacobians(&self, q: &DVector<f64>) -> (RowDVector<f64>, RowDVector<f64>) {
        let d = self.params.com_distance;
        (
            RowDVector::from_element(1, d * q[0].cos()),
            RowDVector::from_element(1, d * q[0].sin()),
        )
    }

    fn com_acceleration_bias(&self, q: &DVector<f64>, q_dot: &DVector<f64>) -> (f64, f64) {
        let d = self.params.com_distance;
        let w = q_dot[0] * q_dot[0];
        (-d * q[0].sin() * w, d * q[0].cos() * w)
    }
}
