use nalgebra::DVector;

use crate::actuator::ContinuousActuatorModel;

/// Actuator states, currents, lengths, and contact intensities over `N` steps.
/// `u` and `phi` have `N - 1` entries; `phi` is empty without contacts.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub x: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    pub z: Vec<DVector<f64>>,
    pub z_dot: Vec<DVector<f64>>,
    pub phi: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn from_states(model: &ContinuousActuatorModel, dt: f64, x: Vec<DVector<f64>>, u: Vec<DVector<f64>>, phi: Vec<DVector<f64>>) -> Self {
        let z = x.iter().map(|xi| model.z(xi)).collect();
        let z_dot = x.iter().map(|xi| model.z_dot(xi)).collect();
        Trajectory { dt, x, u, z, z_dot, phi }
    }

    /// State held at `x0` with constant current `u0`.
    pub fn constant(model: &ContinuousActuatorModel, dt: f64, n: usize, x0: &DVector<f64>, u0: &DVector<f64>) -> Self {
        Self::from_states(model, dt, vec![x0.clone(); n], vec![u0.clone(); n.saturating_sub(1)], Vec::new())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// 2-norm of the stacked state difference.
    pub fn state_distance(&self, other: &Trajectory) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}
