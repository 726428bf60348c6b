use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use super::{RobotPort, Transmission, GRAVITY};

/// Planar two-link leg pinned at the ankle during stance.
///
/// `q1` is the absolute angle of the lower link from the ground's +x axis,
/// `q2` the knee angle of the upper link relative to the lower one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLinkLegParams {
    /// Lower-link mass (kg).
    pub m1: f64,
    /// Upper-link mass (kg).
    pub m2: f64,
    /// Lower-link inertia about its COM (kg m^2).
    pub i1: f64,
    pub i2: f64,
    pub l1: f64,
    pub l2: f64,
    /// COM distance from the proximal joint (m).
    pub lc1: f64,
    pub lc2: f64,
    /// Ankle height above the ground plane (m).
    pub ankle_height: f64,
    pub gravity: f64,
    /// Ankle and knee transmissions.
    pub transmissions: [Transmission; 2],
}

impl TwoLinkLegParams {
    /// Draco-inspired leg. Link COM offsets and the lever mappings are
    /// calibration: COM height near 0.67 m at the nominal stance and the
    /// stance actuator lengths inside the configured bounds.
    pub fn draco() -> Self {
        TwoLinkLegParams {
            m1: 3.77,
            m2: 15.0,
            i1: 0.077,
            i2: 0.050,
            l1: 0.5,
            l2: 0.5,
            lc1: 0.25,
            lc2: 0.39,
            ankle_height: 0.0,
            gravity: GRAVITY,
            transmissions: [
                Transmission::Lever {
                    a: 0.2,
                    b: 0.14,
                    c: 0.0,
                    sign: 1.0,
                    offset: -0.6586,
                },
                Transmission::Lever {
                    a: 0.2,
                    b: 0.05,
                    c: 0.04,
                    sign: -1.0,
                    offset: 2.0 * PI + 0.524,
                },
            ],
        }
    }
}

#[derive(Clone, Debug)]
pub struct TwoLinkLeg {
    pub params: TwoLinkLegParams,
}

impl TwoLinkLeg {
    pub fn new(params: TwoLinkLegParams) -> Self {
        TwoLinkLeg { params }
    }
}

impl RobotPort for TwoLinkLeg {
    fn dof(&self) -> usize {
        2
    }

    fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let p = &self.params;
        let c2 = q[1].cos();
        let m22 = p.m2 * p.lc2 * p.lc2 + p.i2;
        let m12 = m22 + p.m2 * p.l1 * p.lc2 * c2;
        let m11 = p.m1 * p.lc1 * p.lc1 + p.i1 + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2.0 * p.l1 * p.lc2 * c2) + p.i2;
        DMatrix::from_row_slice(2, 2, &[m11, m12, m12, m22])
    }

    fn coriolis(&self, q: &DVector<f64>, q_dot: &DVector<f64>) -> DVector<f64> {
        let p = &self.params;
        let h = -p.m2 * p.l1 * p.lc2 * q[1].sin();
        let (d1, d2) = (q_dot[0], q_dot[1]);
        DVector::from_vec(vec![h * d2 * d2 + 2.0 * h * d1 * d2, -h * d1 * d1])
    }

    fn gravity(&self, q: &DVector<f64>) -> DVector<f64> {
        let p = &self.params;
        let c1 = q[0].cos();
        let c12 = (q[0] + q[1]).cos();
        let g2 = p.m2 * p.lc2 * p.gravity * c12;
        DVector::from_vec(vec![(p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity * c1 + g2, g2])
    }

    fn potential_energy(&self, q: &DVector<f64>) -> f64 {
        self.total_mass() * self.params.gravity * self.com_position(q).1
    }

    fn transmissions(&self) -> &[Transmission] {
        &self.params.transmissions
    }

    fn gravity_constant(&self) -> f64 {
        self.params.gravity
    }

    fn total_mass(&self) -> f64 {
        self.params.m1 + self.params.m2
    }

    fn com_position(&self, q: &DVector<f64>) -> (f64, f64) {
        let p = &self.params;
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        let m = self.total_mass();
        let x = (p.m1 * p.lc1 * c1 + p.m2 * (p.l1 * c1 + p.lc2 * c12)) / m;
        let y = (p.m1 * p.lc1 * s1 + p.m2 * (p.l1 * s1 + p.lc2 * s12)) / m;
        (x, y + p.ankle_height)
    }

    fn com_jacobians(&self, q: &DVector<f64>) -> (RowDVector<f64>, RowDVector<f64>) {
        let p = &self.params;
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        let m = self.total_mass();
        let jx = RowDVector::from_vec(vec![
            -(p.m1 * p.lc1 * s1 + p.m2 * (p.l1 * s1 + p.lc2 * s12)) / m,
            -p.m2 * p.lc2 * s12 / m,
        ]);
        let jy = RowDVector::from_vec(vec![
            (p.m1 * p.lc1 * c1 + p.m2 * (p.l1 * c1 + p.lc2 * c12)) / m,
            p.m2 * p.lc2 * c12 / m,
        ]);
        (jx, jy)
    }

    fn com_acceleration_bias(&self, q: &DVector<f64>, q_dot: &DVector<f64>) -> (f64, f64) {
        let p = &self.params;
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        let w1 = q_dot[0] * q_dot[0];
        let w12 = (q_dot[0] + q_dot[1]).powi(2);
        let m = self.total_mass();
        let ax = -(p.m1 * p.lc1 * c1 * w1 + p.m2 * (p.l1 * c1 * w1 + p.lc2 * c12 * w12)) / m;
        let ay = -(p.m1 * p.lc1 * s1 * w1 + p.m2 * (p.l1 * s1 * w1 + p.lc2 * s12 * w12)) / m;
        (ax, ay)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leg() -> TwoLinkLeg {
        TwoLinkLeg::new(TwoLinkLegParams::draco())
    }

    #[test]
    fn coriolis_vanishes_at_rest() {
        let l = leg();
        for i in 0..20 {
            let q = DVector::from_vec(vec![0.3 * i as f64, 4.0 + 0.1 * i as f64]);
            assert_eq!(l.coriolis(&q, &DVector::zeros(2)).norm(), 0.0);
        }
    }

    #[test]
    fn straight_up_has_no_gravity_torque() {
        let l = leg();
        let g = l.gravity(&DVector::from_vec(vec![PI / 2.0, 0.0]));
        assert!(g.norm() < 1e-12);
        assert!((l.total_mass() - 18.77).abs() < 1e-12);
    }

    #[test]
    fn gravity_is_gradient_of_potential() {
        let l = leg();
        let q = DVector::from_vec(vec![1.96, 5.30]);
        let g = l.gravity(&q);
        let h = 1e-6;
        for i in 0..2 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            let fd = (l.potential_energy(&qp) - l.potential_energy(&qm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn mass_matrix_spd_on_grid() {
        let l = leg();
        for i in 0..100 {
            let q = DVector::from_vec(vec![0.05 * i as f64, 0.063 * i as f64]);
            let m = l.mass_matrix(&q);
            assert_eq!(m[(0, 1)], m[(1, 0)]);
            assert!(m.clone().cholesky().is_some());
        }
    }

    #[test]
    fn com_jacobian_matches_finite_difference() {
        let l = leg();
        let q = DVector::from_vec(vec![1.7, 5.1]);
        let (jx, jy) = l.com_jacobians(&q);
        let h = 1e-6;
        for i in 0..2 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            let (xp, yp) = l.com_position(&qp);
            let (xm, ym) = l.com_position(&qm);
            assert!(((xp - xm) / (2.0 * h) - jx[i]).abs() < 1e-8);
            assert!(((yp - ym) / (2.0 * h) - jy[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn nominal_stance_geometry() {
        let l = leg();
        let q = DVector::from_vec(vec![1.96, 5.30]);
        let (_, y) = l.com_position(&q);
        assert!((y - 0.67).abs() < 0.02, "com height {y}");
        let z = l.length_from_joint(&q).unwrap();
        assert!(z[0] > 0.17 && z[0] < 0.2351);
        assert!(z[1] > 0.1563 && z[1] < 0.2304);
    }
}
