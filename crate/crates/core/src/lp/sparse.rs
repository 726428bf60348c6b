//! Sparse simplex backend on `microlp`. Rows with a single variable are
//! folded into variable bounds before the solve.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::{LinearProgram, LpBackend, Sense};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default)]
pub struct SparseSimplex;

/// Tightens `bounds` with every singleton row and returns the remaining rows.
fn presolve_bounds(lp: &LinearProgram, bounds: &mut [(f64, f64)]) -> Result<Vec<usize>> {
    let mut rest = Vec::new();
    for (i, r) in lp.rows.iter().enumerate() {
        match r.coeffs.as_slice() {
            [] => {
                let ok = match r.sense {
                    Sense::Le => 0.0 <= r.rhs,
                    Sense::Ge => 0.0 >= r.rhs,
                    Sense::Eq => r.rhs == 0.0,
                };
                if !ok {
                    return Err(Error::LpInfeasible { families: Vec::new() });
                }
            }
            [(j, a)] => {
                let v = r.rhs / a;
                let (lo, hi) = &mut bounds[*j];
                let sense = match (r.sense, *a > 0.0) {
                    (Sense::Eq, _) => Sense::Eq,
                    (s, true) => s,
                    (Sense::Le, false) => Sense::Ge,
                    (Sense::Ge, false) => Sense::Le,
                };
                match sense {
                    Sense::Le => *hi = hi.min(v),
                    Sense::Ge => *lo = lo.max(v),
                    Sense::Eq => {
                        *lo = lo.max(v);
                        *hi = hi.min(v);
                    }
                }
            }
            _ => rest.push(i),
        }
    }
    for (lo, hi) in bounds.iter_mut() {
        if *lo > *hi {
            if *lo - *hi > 1e-12 * (1.0 + lo.abs()) {
                return Err(Error::LpInfeasible { families: Vec::new() });
            }
            *hi = *lo;
        }
    }
    Ok(rest)
}

impl LpBackend for SparseSimplex {
    fn name(&self) -> &'static str {
        "sparse"
    }

    fn solve_primal(&self, lp: &LinearProgram) -> Result<Vec<f64>> {
        let n = lp.num_vars();
        let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); n];
        let rows = presolve_bounds(lp, &mut bounds)?;
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = (0..n).map(|j| problem.add_var(lp.cost[j], bounds[j])).collect();
        for &i in &rows {
            let r = &lp.rows[i];
            let op = match r.sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Ge => ComparisonOp::Ge,
                Sense::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(r.coeffs.iter().map(|&(j, a)| (vars[j], a)), op, r.rhs);
        }
        let outcome = problem.solve().map_err(|e| match e {
            microlp::Error::Infeasible => Error::LpInfeasible { families: Vec::new() },
            microlp::Error::Unbounded => Error::LpUnbounded,
            other => Error::LpBackend(other.to_string()),
        })?;
        let solution = outcome
            .solution()
            .ok_or_else(|| Error::LpBackend("solve interrupted".into()))?;
        Ok(vars.iter().map(|&v| solution.var_value_raw(v)).collect())
    }
}
