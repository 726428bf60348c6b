//! Sequential linear programming trajectory optimization for robots driven by
//! series elastic actuators.
//!
//! The actuator dynamics are linear and discretized exactly with a zero-order
//! hold. The robot impedance is frozen about a baseline trajectory at each
//! iteration, which turns the trajectory problem into a sparse LP.

pub mod actuator;
pub mod discretization;
pub mod error;
pub mod linearization;
pub mod lp;
pub mod oracle;
pub mod robot;
pub mod scenario;
pub mod slp;
pub mod trajectory;

pub use actuator::{
    build_continuous_model, build_model, max_eigenvalue_frequency, rigid_variant, ActuatorParams, ActuatorState,
    ActuatorVariant, ContinuousActuatorModel,
};
pub use discretization::{matrix_exponential, zoh_discretize, AliasingWarning, DiscreteActuatorModel};
pub use error::{Error, Result};
pub use linearization::{
    linearize_trajectory, static_equilibrium, AffineMap, Baseline, BaselineVelocity, LinearizedStep,
};
pub use lp::{solve_lp, BackendKind, LinearProgram, LpSolution};
pub use trajectory::Trajectory;
pub use slp::{compare_rigid_compliant, optimize, OptimizationResult, SlpConfig, SlpProblem};
pub use scenario::Scenario;
