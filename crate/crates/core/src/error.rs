use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid actuator parameters for joint {joint}: {reason}")]
    InvalidParams { joint: usize, reason: String },

    #[error("singular mass matrix E_o for joint {joint}")]
    SingularMassMatrix { joint: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("kinematics error on joint {joint}: {reason}")]
    Kinematics { joint: usize, reason: String },

    #[error("moment arm singular at q = {q:?}")]
    SingularMomentArm { q: Vec<f64> },

    #[error("F' elimination failed at step {step}: bracket condition number {condition:e}")]
    Elimination { step: usize, condition: f64 },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("infeasible bound configuration: {0}")]
    InfeasibleBounds(String),

    #[error("LP infeasible (row families implicated: {families:?})")]
    LpInfeasible { families: Vec<String> },

    #[error("LP unbounded; check trust-region and bound rows")]
    LpUnbounded,

    #[error("LP backend failure: {0}")]
    LpBackend(String),

    #[error("SLP iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            e @ (Error::AtStep { .. } | Error::Elimination { .. }) => e,
            e => Error::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }
}
