//! Zero-order-hold discretization of the actuator model.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::actuator::{max_eigenvalue_frequency, ContinuousActuatorModel};
use crate::error::{Error, Result};

/// Padé(13) numerator/denominator coefficients.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the degree-13 approximant needs no scaling.
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn matrix_exponential(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::Contract(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("matrix exponential input has non-finite entries".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let norm1 = (0..n)
        .map(|c| m.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = m * 2f64.powi(-s);
    let b = &PADE13;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Contract("Padé denominator is singular".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Raised when the fastest continuous mode exceeds the Nyquist rate of the
/// step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AliasingWarning {
    /// Fastest continuous frequency (rad/s).
    pub frequency: f64,
    pub dt: f64,
    /// `frequency * dt`; aliasing when above pi.
    pub phase_per_step: f64,
}

/// Discrete pair `x+ = A x + B [u; F']` under a zero-order hold on both
/// inputs.
#[derive(Clone, Debug)]
pub struct DiscreteActuatorModel {
    pub a: DMatrix<f64>,
    /// Columns ordered `[u block | F' block]`.
    pub b: DMatrix<f64>,
    pub dt: f64,
    pub aliasing: Option<AliasingWarning>,
}

impl DiscreteActuatorModel {
    pub fn joints(&self) -> usize {
        self.b.ncols() / 2
    }

    pub fn b_u(&self) -> DMatrix<f64> {
        self.b.columns(0, self.joints()).into_owned()
    }

    pub fn b_f(&self) -> DMatrix<f64> {
        let p = self.joints();
        self.b.columns(p, p).into_owned()
    }
}

/// Exact ZOH discretization via the augmented exponential
/// `exp([[A1, B1], [0, 0]] dt)`.
pub fn zoh_discretize(model: &ContinuousActuatorModel, dt: f64) -> Result<DiscreteActuatorModel> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Contract(format!("time step must be positive, got {dt}")));
    }
    let (a, b) = zoh_pair(&model.a1, &model.b1(), dt)?;
    let frequency = max_eigenvalue_frequency(model);
    let aliasing = if frequency * dt > PI {
        let w = AliasingWarning {
            frequency,
            dt,
            phase_per_step: frequency * dt,
        };
        log::warn!(
            "fastest actuator mode {:.1} rad/s aliases at dt = {} s (phase/step {:.2} > pi)",
            frequency,
            dt,
            w.phase_per_step
        );
        Some(w)
    } else {
        None
    };
    Ok(DiscreteActuatorModel { a, b, dt, aliasing })
}

/// ZOH pair for an arbitrary `(A, B)`.
pub fn zoh_pair(a: &DMatrix<f64>, b: &DMatrix<f64>, dt: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let m = b.ncols();
    if !a.is_square() || b.nrows() != n {
        return Err(Error::Contract("incompatible (A, B) shapes".into()));
    }
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * dt));
    let e = matrix_exponential(&aug)?;
    Ok((
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
    ))
}
