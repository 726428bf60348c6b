//! Sparse linear programs, backends, and the per-iteration subproblem.

mod dense;
mod export;
mod interior;
mod sparse;
pub mod subproblem;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dense::DenseSimplex;
pub use export::write_cplex_lp;
pub use interior::InteriorPoint;
pub use sparse::SparseSimplex;
pub use subproblem::{build_subproblem, ConstraintSet, CostSpec, Objective, Subproblem, SubproblemContext, VariableLayout};

/// Absolute per-row feasibility tolerance applied to returned solutions.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFamily {
    Dynamics,
    InitialState,
    FinalPosition,
    FinalComVelocity,
    Contact,
    IntensityNonnegative,
    TrustRegion,
    SpringDeflection,
    LengthBounds,
    MotorVelocity,
    CurrentBounds,
    InputDeviation,
    Other,
}

impl RowFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            RowFamily::Dynamics => "dynamics",
            RowFamily::InitialState => "initial_state",
            RowFamily::FinalPosition => "final_position",
            RowFamily::FinalComVelocity => "final_com_velocity",
            RowFamily::Contact => "contact",
            RowFamily::IntensityNonnegative => "intensity_nonnegative",
            RowFamily::TrustRegion => "trust_region",
            RowFamily::SpringDeflection => "spring_deflection",
            RowFamily::LengthBounds => "length_bounds",
            RowFamily::MotorVelocity => "motor_velocity",
            RowFamily::CurrentBounds => "current_bounds",
            RowFamily::InputDeviation => "input_deviation",
            RowFamily::Other => "other",
        }
    }
}

impl fmt::Display for RowFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `sum coeffs[k].1 * v[coeffs[k].0]  (sense)  rhs`.
#[derive(Clone, Debug)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub family: RowFamily,
}

impl Row {
    pub fn activity(&self, v: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * v[j]).sum()
    }

    /// Amount by which `v` violates the row (zero when satisfied).
    pub fn violation(&self, v: &[f64]) -> f64 {
        let a = self.activity(v);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// Minimize `cost . v` subject to `rows`; every variable is free.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub rows: Vec<Row>,
    pub names: Vec<String>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            cost: vec![0.0; num_vars],
            rows: Vec::new(),
            names: (0..num_vars).map(|j| format!("v{j}")).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    /// Adds a row, dropping exact-zero coefficients.
    pub fn add_row(&mut self, coeffs: impl IntoIterator<Item = (usize, f64)>, sense: Sense, rhs: f64, family: RowFamily) {
        let coeffs: Vec<_> = coeffs.into_iter().filter(|&(_, a)| a != 0.0).collect();
        self.rows.push(Row {
            coeffs,
            sense,
            rhs,
            family,
        });
    }

    /// `|expr - center| <= radius` as two one-sided rows.
    pub fn add_abs_bound(&mut self, coeffs: &[(usize, f64)], center: f64, radius: f64, family: RowFamily) {
        self.add_row(coeffs.iter().copied(), Sense::Le, center + radius, family);
        self.add_row(coeffs.iter().copied(), Sense::Ge, center - radius, family);
    }

    pub fn objective(&self, v: &[f64]) -> f64 {
        self.cost.iter().zip(v).map(|(c, x)| c * x).sum()
    }

    pub fn count_family(&self, family: RowFamily) -> usize {
        self.rows.iter().filter(|r| r.family == family).count()
    }

    pub fn equality_count(&self) -> usize {
        self.rows.iter().filter(|r| r.sense == Sense::Eq).count()
    }

    /// Largest row violation and the index of the row attaining it.
    pub fn max_violation(&self, v: &[f64]) -> (f64, Option<usize>) {
        let mut worst = (0.0, None);
        for (i, r) in self.rows.iter().enumerate() {
            let e = r.violation(v);
            if e > worst.0 || e.is_nan() {
                worst = (e, Some(i));
            }
        }
        worst
    }

    pub fn check(&self) -> Result<()> {
        let n = self.num_vars();
        if self.names.len() != n {
            return Err(Error::Contract("variable name count mismatch".into()));
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(Error::Contract(format!("non-finite right-hand side in {} row", r.family)));
            }
            for &(j, a) in &r.coeffs {
                if j >= n || !a.is_finite() {
                    return Err(Error::Contract(format!("bad coefficient in {} row", r.family)));
                }
            }
        }
        if self.cost.iter().any(|c| !c.is_finite()) {
            return Err(Error::Contract("non-finite cost".into()));
        }

        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    /// Largest row violation found by re-evaluating every row.
    pub max_violation: f64,
    pub backend: &'static str,
}

pub trait LpBackend: Send + Sync {
    fn name(&self) -> &'static str;

    /// Returns primal values. Infeasible problems report
    /// `Error::LpInfeasible` with an empty family list.
    fn solve_primal(&self, lp: &LinearProgram) -> Result<Vec<f64>>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Dense,
    Sparse,
    Interior,
    #[default]
    Auto,
}

impl std::str::FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(BackendKind::Dense),
            "sparse" => Ok(BackendKind::Sparse),
            "interior" => Ok(BackendKind::Interior),
            "auto" => Ok(BackendKind::Auto),
            _ => Err(Error::Scenario(format!("unknown LP backend '{s}' (dense, sparse, interior, auto)"))),
        }
    }
}

/// Problems at most this size go to the dense tableau under `Auto`.
const DENSE_LIMIT: usize = 60;

impl BackendKind {
    pub fn select(self, lp: &LinearProgram) -> Box<dyn LpBackend> {
        match self {
            BackendKind::Dense => Box::new(DenseSimplex::default()),
            BackendKind::Sparse => Box::new(SparseSimplex),
            BackendKind::Interior => Box::new(InteriorPoint::default()),
            BackendKind::Auto if lp.num_vars() <= DENSE_LIMIT && lp.rows.len() <= 2 * DENSE_LIMIT => {
                Box::new(DenseSimplex::default())
            }
            BackendKind::Auto => Box::new(InteriorPoint::default()),
        }
    }
}

/// Solves `lp` and re-checks every row. Infeasible problems are diagnosed
/// with an elastic relaxation that names the row families needing slack.
pub fn solve_lp(lp: &LinearProgram, backend: BackendKind) -> Result<LpSolution> {
    lp.check()?;
    let solver = backend.select(lp);
    let values = match solver.solve_primal(lp) {
        Ok(v) => v,
        Err(Error::LpInfeasible { .. }) => {
            let families = diagnose_infeasibility(lp, solver.as_ref())
                .unwrap_or_default()
                .into_iter()
                .map(|f| f.to_string())
                .collect();
            return Err(Error::LpInfeasible { families });
        }
        Err(e) => return Err(e),
    };
    let (max_violation, row) = lp.max_violation(&values);
    if !(max_violation <= FEASIBILITY_TOL) {
        let family = row.map(|i| lp.rows[i].family.to_string()).unwrap_or_default();
        return Err(Error::LpBackend(format!(
            "{} returned a point violating a {family} row by {max_violation:.3e}",
            solver.name()
        )));
    }
    Ok(LpSolution {
        objective: lp.objective(&values),
        values,
        max_violation,
        backend: solver.name(),
    })
}

/// Row families that must be relaxed to make `lp` feasible. Dynamics rows
/// stay hard; every other row gets a nonnegative slack priced at one.
pub fn diagnose_infeasibility(lp: &LinearProgram, backend: &dyn LpBackend) -> Result<Vec<RowFamily>> {
    let n = lp.num_vars();
    let mut elastic = LinearProgram::new(n);
    let mut owners = Vec::new();
    let mut add_slack = |elastic: &mut LinearProgram, family: RowFamily| {
        let j = elastic.cost.len();
        elastic.cost.push(1.0);
        elastic.names.push(format!("slack{j}"));
        owners.push(family);
        elastic.add_row([(j, 1.0)], Sense::Ge, 0.0, RowFamily::Other);
        j
    };
    for r in &lp.rows {
        let mut coeffs = r.coeffs.clone();
        if r.family != RowFamily::Dynamics {
            match r.sense {
                Sense::Le => coeffs.push((add_slack(&mut elastic, r.family), -1.0)),
                Sense::Ge => coeffs.push((add_slack(&mut elastic, r.family), 1.0)),
                Sense::Eq => {
                    coeffs.push((add_slack(&mut elastic, r.family), 1.0));
                    coeffs.push((add_slack(&mut elastic, r.family), -1.0));
                }
            }
        }
        elastic.add_row(coeffs, r.sense, r.rhs, r.family);
    }
    let v = backend.solve_primal(&elastic)?;
    let mut families: Vec<RowFamily> = owners
        .iter()
        .enumerate()
        .filter(|(k, _)| v[n + k] > FEASIBILITY_TOL)
        .map(|(_, f)| *f)
        .collect();
    families.sort();
    families.dedup();
    Ok(families)
}
