//! Planar foot contact with a linear friction-cone parameterization.
//!
//! Two point contacts (toe, heel) each carry two intensities multiplying the
//! cone edges `[mu, 1]` and `[-mu, 1]`. Intensity order is
//! `[toe+, toe-, heel+, heel-]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::RobotPort;
use crate::error::{Error, Result};
use crate::linearization::AffineMap;

pub const INTENSITY_COUNT: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactModel {
    /// Coulomb friction coefficient.
    pub mu: f64,
    /// Toe x-offset from the ankle (m).
    pub toe_x: f64,
    /// Heel x-offset from the ankle (m).
    pub heel_x: f64,
    /// Ankle height above the contact plane (m).
    pub ankle_height: f64,
}

impl Default for ContactModel {
    fn default() -> Self {
        ContactModel {
            mu: 0.8,
            toe_x: 0.15,
            heel_x: -0.05,
            ankle_height: 0.0,
        }
    }
}

impl ContactModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::Contract(format!("friction coefficient must be positive, got {}", self.mu)));
        }
        if !(self.toe_x > self.heel_x) {
            return Err(Error::Contract("toe must lie ahead of heel".into()));
        }
        Ok(())
    }

    /// Cone edge directions `(f_x, f_y)` per intensity.
    pub fn basis(&self) -> [(f64, f64); INTENSITY_COUNT] {
        let mu = self.mu;
        [(mu, 1.0), (-mu, 1.0), (mu, 1.0), (-mu, 1.0)]
    }

    /// Contact point `(x, y)` relative to the ankle for each intensity.
    pub fn points(&self) -> [(f64, f64); INTENSITY_COUNT] {
        let h = -self.ankle_height;
        [(self.toe_x, h), (self.toe_x, h), (self.heel_x, h), (self.heel_x, h)]
    }

    /// Net ground force and ankle moment produced by intensities `phi`.
    pub fn wrench(&self, phi: &[f64]) -> (f64, f64, f64) {
        let (mut fx, mut fy, mut m) = (0.0, 0.0, 0.0);
        for ((b, r), &v) in self.basis().iter().zip(self.points().iter()).zip(phi) {
            fx += b.0 * v;
            fy += b.1 * v;
            m += r.0 * b.1 * v - r.1 * b.0 * v;
        }
        (fx, fy, m)
    }
}

/// Three equality rows `x_coeffs x + u_coeffs u + phi_coeffs phi = rhs`
/// (x-force, y-force, ankle moment), scaled by body weight.
#[derive(Clone, Debug)]
pub struct ContactRows {
    pub x_coeffs: DMatrix<f64>,
    pub u_coeffs: DMatrix<f64>,
    pub phi_coeffs: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

/// Newton-Euler balance of the stance leg. Ground intensities must supply
/// the COM acceleration and the ankle torque. `z_accel` and `force` are the
/// baseline-frozen affine maps from `(x_n, u_n)` to actuator acceleration
/// and actuator force; joint 0 is the ankle.
pub fn contact_constraint_rows(
    plant: &dyn RobotPort,
    contact: &ContactModel,
    q: &DVector<f64>,
    q_dot: &DVector<f64>,
    z_accel: &AffineMap,
    force: &AffineMap,
) -> Result<ContactRows> {
    let m = plant.total_mass();
    let g = plant.gravity_constant();
    let weight = m * g;
    if !(weight > 0.0) {
        return Err(Error::Contract("contact rows need a plant with positive weight".into()));
    }
    let l = plant.moment_arm(q);
    let l_inv = l.clone().try_inverse().ok_or_else(|| Error::SingularMomentArm {
        q: q.iter().copied().collect(),
    })?;
    let rate = plant.moment_arm_rate(q, q_dot);
    let (jx, jy) = plant.com_jacobians(q);
    let (bx, by) = plant.com_acceleration_bias(q, q_dot);
    let nx = z_accel.x.ncols();
    let p = z_accel.u.ncols();

    let mut rows = ContactRows {
        x_coeffs: DMatrix::zeros(3, nx),
        u_coeffs: DMatrix::zeros(3, p),
        phi_coeffs: DMatrix::zeros(3, INTENSITY_COUNT),
        rhs: DVector::zeros(3),
    };

    // COM acceleration a = J L^-1 (zdd - Ldot qdot) + Jdot qdot
    let free_accel = &z_accel.c - &rate;
    for (r, (j, bias, extra)) in [(jx, bx, 0.0), (jy, by, g)].into_iter().enumerate() {
        let jl = j * &l_inv;
        rows.x_coeffs.row_mut(r).copy_from(&(-m * (&jl * &z_accel.x)));
        rows.u_coeffs.row_mut(r).copy_from(&(-m * (&jl * &z_accel.u)));
        rows.rhs[r] = m * ((&jl * &free_accel)[0] + bias + extra);
    }
    for (k, ((fx, fy), (px, py))) in contact.basis().iter().zip(contact.points().iter()).enumerate() {
        rows.phi_coeffs[(0, k)] = *fx;
        rows.phi_coeffs[(1, k)] = *fy;
        rows.phi_coeffs[(2, k)] = px * fy - py * fx;
    }

    // ankle torque tau_0 = L_00 F_0
    let l00 = l[(0, 0)];
    rows.x_coeffs.row_mut(2).copy_from(&(-l00 * force.x.row(0)));
    rows.u_coeffs.row_mut(2).copy_from(&(-l00 * force.u.row(0)));
    rows.rhs[2] = l00 * force.c[0];

    rows.x_coeffs /= weight;
    rows.u_coeffs /= weight;
    rows.phi_coeffs /= weight;
    rows.rhs /= weight;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::{impedance_terms, TwoLinkLeg, TwoLinkLegParams};

    fn static_maps(leg: &TwoLinkLeg, q: &DVector<f64>) -> (AffineMap, AffineMap) {
        let imp = impedance_terms(leg, q, &DVector::zeros(2), &[0.0, 0.0]).unwrap();
        let zero = AffineMap::zeros(2, 8, 2);
        let mut force = AffineMap::zeros(2, 8, 2);
        force.c = imp.bias;
        (zero, force)
    }

    #[test]
    fn static_stance_carries_body_weight() {
        let leg = TwoLinkLeg::new(TwoLinkLegParams::draco());
        let q = DVector::from_vec(vec![1.96, 5.30]);
        let (za, f) = static_maps(&leg, &q);
        let contact = ContactModel::default();
        let rows = contact_constraint_rows(&leg, &contact, &q, &DVector::zeros(2), &za, &f).unwrap();
        let w = 18.77 * 9.81;
        assert!(rows.rhs[0].abs() < 1e-12);
        assert!((rows.rhs[1] * w - w).abs() < 1e-9);
        // the y row sums all four intensities
        for k in 0..4 {
            assert!((rows.phi_coeffs[(1, k)] * w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn static_split_follows_lever_rule() {
        let leg = TwoLinkLeg::new(TwoLinkLegParams::draco());
        let q = DVector::from_vec(vec![1.96, 5.30]);
        let (za, f) = static_maps(&leg, &q);
        let contact = ContactModel::default();
        let rows = contact_constraint_rows(&leg, &contact, &q, &DVector::zeros(2), &za, &f).unwrap();
        // symmetric friction use (phi1 = phi2, phi3 = phi4) leaves two unknowns:
        // per-intensity toe and heel values. Solve the y and moment rows for them.
        let a = nalgebra::Matrix2::new(
            rows.phi_coeffs[(1, 0)] + rows.phi_coeffs[(1, 1)],
            rows.phi_coeffs[(1, 2)] + rows.phi_coeffs[(1, 3)],
            rows.phi_coeffs[(2, 0)] + rows.phi_coeffs[(2, 1)],
            rows.phi_coeffs[(2, 2)] + rows.phi_coeffs[(2, 3)],
        );
        let n = a.lu().solve(&nalgebra::Vector2::new(rows.rhs[1], rows.rhs[2])).unwrap();
        let (xc, _) = leg.com_position(&q);
        let w = 18.77 * 9.81;
        let toe = w * (xc - contact.heel_x) / (contact.toe_x - contact.heel_x);
        let heel = w - toe;
        // each point carries two equal intensities
        assert!((2.0 * n[0] - toe).abs() < 1e-8 * w, "{} vs {toe}", n[0]);
        assert!((2.0 * n[1] - heel).abs() < 1e-8 * w);
    }

    #[test]
    fn wrench_respects_cone() {
        let c = ContactModel::default();
        let (fx, fy, _) = c.wrench(&[3.0, 0.0, 0.0, 0.0]);
        assert!((fx / fy - 0.8).abs() < 1e-15);
        assert!(ContactModel { mu: 0.0, ..c }.validate().is_err());
    }
}
