//! Actuator-length to joint-angle transmissions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kinematic map `z = length(q)` of one joint with its derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transmission {
    /// Constant moment arm: `z = z_ref + arm (q - q_ref)`.
    Linear { z_ref: f64, q_ref: f64, arm: f64 },
    /// Smooth surrogate with linearly varying moment arm,
    /// `L(q) = arm + curvature (q - q_ref)`.
    Quadratic {
        z_ref: f64,
        q_ref: f64,
        arm: f64,
        curvature: f64,
    },
    /// Crank-slider lever. The actuator spans a mount at distance `a` from
    /// the joint and a lever point at `(b, c)` (along / across the lever).
    /// The included angle is `psi = sign * q + offset` and
    /// `z^2 = a^2 + r^2 - 2 a r cos(psi)` with `r = hypot(b, c)`.
    /// Valid for `psi` in `(0, pi)`.
    Lever {
        a: f64,
        b: f64,
        c: f64,
        sign: f64,
        offset: f64,
    },
}

impl Transmission {
    pub fn length(&self, q: f64) -> f64 {
        match *self {
            Transmission::Linear { z_ref, q_ref, arm } => z_ref + arm * (q - q_ref),
            Transmission::Quadratic {
                z_ref,
                q_ref,
                arm,
                curvature,
            } => {
                let d = q - q_ref;
                z_ref + arm * d + 0.5 * curvature * d * d
            }
            Transmission::Lever { a, b, c, sign, offset } => {
                let r = b.hypot(c);
                let psi = sign * q + offset;
                (a * a + r * r - 2.0 * a * r * psi.cos()).sqrt()
            }
        }
    }

    /// Moment arm `dz/dq`.
    pub fn arm(&self, q: f64) -> f64 {
        match *self {
            Transmission::Linear { arm, .. } => arm,
            Transmission::Quadratic {
                q_ref, arm, curvature, ..
            } => arm + curvature * (q - q_ref),
            Transmission::Lever { a, b, c, sign, offset } => {
                let r = b.hypot(c);
                let psi = sign * q + offset;
                sign * a * r * psi.sin() / self.length(q)
            }
        }
    }

    /// `d^2 z / dq^2`.
    pub fn arm_derivative(&self, q: f64) -> f64 {
        match *self {
            Transmission::Linear { .. } => 0.0,
            Transmission::Quadratic { curvature, .. } => curvature,
            Transmission::Lever { a, b, c, sign, offset } => {
                let r = b.hypot(c);
                let psi = sign * q + offset;
                let z = self.length(q);
                let dz = self.arm(q);
                (a * r * psi.cos() - dz * dz) / z
            }
        }
    }

    /// Whether `q` lies in the region where the map is smooth and invertible.
    pub fn joint_admissible(&self, q: f64) -> bool {
        match *self {
            Transmission::Linear { arm, .. } => arm != 0.0 && q.is_finite(),
            Transmission::Quadratic { arm, .. } => {
                let l = self.arm(q);
                q.is_finite() && l != 0.0 && l.signum() == arm.signum()
            }
            Transmission::Lever { sign, offset, .. } => {
                let psi = sign * q + offset;
                psi > 0.0 && psi < PI
            }
        }
    }

    pub fn joint_from_length(&self, z: f64, joint: usize) -> Result<f64> {
        let err = |reason: String| Error::Kinematics { joint, reason };
        if !z.is_finite() {
            return Err(err(format!("non-finite actuator length {z}")));
        }
        match *self {
            Transmission::Linear { z_ref, q_ref, arm } => {
                if arm == 0.0 {
                    return Err(err("zero moment arm".into()));
                }
                Ok(q_ref + (z - z_ref) / arm)
            }
            Transmission::Quadratic {
                z_ref,
                q_ref,
                arm,
                curvature,
            } => {
                let dz = z - z_ref;
                if curvature.abs() < 1e-14 {
                    return Ok(q_ref + dz / arm);
                }
                let disc = arm * arm + 2.0 * curvature * dz;
                if disc <= 0.0 {
                    return Err(err(format!("length {z} outside surrogate range")));
                }
                // root on the branch where L keeps the sign of `arm`;
                // written to avoid cancellation for small dz
                let root = arm.signum() * disc.sqrt();
                Ok(q_ref + 2.0 * dz / (arm + root))
            }
            Transmission::Lever { a, b, c, sign, offset } => {
                let r = b.hypot(c);
                let cos_psi = (a * a + r * r - z * z) / (2.0 * a * r);
                if !(cos_psi > -1.0 && cos_psi < 1.0) {
                    return Err(err(format!(
                        "length {z} outside lever range ({}, {})",
                        (a - r).abs(),
                        a + r
                    )));
                }
                let psi = cos_psi.acos();
                Ok((psi - offset) / sign)
            }
        }
    }

    pub fn length_from_joint(&self, q: f64, joint: usize) -> Result<f64> {
        if !self.joint_admissible(q) {
            return Err(Error::Kinematics {
                joint,
                reason: format!("joint angle {q} outside transmission range"),
            });
        }
        Ok(self.length(q))
    }
}
