use nalgebra::{DMatrix, DVector, RowDVector};

use super::{RobotPort, Transmission};

/// Plant with constant inertia, constant generalized load and no velocity
/// products. With linear transmissions the robot impedance is LTI.
#[derive(Clone, Debug)]
pub struct ConstantPlant {
    mass: DMatrix<f64>,
    load: DVector<f64>,
    transmissions: Vec<Transmission>,
}

impl ConstantPlant {
    pub fn new(mass: DMatrix<f64>, load: DVector<f64>, transmissions: Vec<Transmission>) -> Self {
        ConstantPlant {
            mass,
            load,
            transmissions,
        }
    }
}

impl RobotPort for ConstantPlant {
    fn dof(&self) -> usize {
        self.mass.nrows()
    }

    fn mass_matrix(&self, _q: &DVector<f64>) -> DMatrix<f64> {
        self.mass.clone()
    }

    fn coriolis(&self, _q: &DVector<f64>, _q_dot: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.dof())
    }

    fn gravity(&self, _q: &DVector<f64>) -> DVector<f64> {
        self.load.clone()
    }

    fn potential_energy(&self, q: &DVector<f64>) -> f64 {
        self.load.dot(q)
    }

    fn transmissions(&self) -> &[Transmission] {
        &self.transmissions
    }

    fn total_mass(&self) -> f64 {
        0.0
    }

    fn com_position(&self, _q: &DVector<f64>) -> (f64, f64) {
        (0.0, 0.0)
    }

    fn com_jacobians(&self, _q: &DVector<f64>) -> (RowDVector<f64>, RowDVector<f64>) {
        (RowDVector::zeros(self.dof()), RowDVector::zeros(self.dof()))
    }

    fn com_acceleration_bias(&self, _q: &DVector<f64>, _q_dot: &DVector<f64>) -> (f64, f64) {
        (0.0, 0.0)
    }
}
