//! Interior-point backend on `clarabel`. Rows map to `A v + s = b` with `s`
//! in the zero cone (equalities) or the nonnegative orthant (inequalities).

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use super::{LinearProgram, LpBackend, Sense};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct InteriorPoint {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: u32,
}

impl Default for InteriorPoint {
    fn default() -> Self {
        InteriorPoint {
            tol_feas: 1e-12,
            tol_gap: 1e-12,
            max_iter: 200,
        }
    }
}

/// Rows in clarabel form: equalities first, then `<=` rows.
struct ConicRows {
    ri: Vec<usize>,
    ci: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
    eq: usize,
}

impl ConicRows {
    fn new(lp: &LinearProgram) -> Self {
        let mut rows = ConicRows {
            ri: Vec::new(),
            ci: Vec::new(),
            vals: Vec::new(),
            b: Vec::new(),
            eq: 0,
        };
        for r in lp.rows.iter().filter(|r| r.sense == Sense::Eq) {
            rows.push(&r.coeffs, 1.0, r.rhs);
        }
        rows.eq = rows.b.len();
        for r in lp.rows.iter().filter(|r| r.sense != Sense::Eq) {
            let sign = if r.sense == Sense::Le { 1.0 } else { -1.0 };
            rows.push(&r.coeffs, sign, r.rhs);
        }
        rows
    }

    fn push(&mut self, coeffs: &[(usize, f64)], sign: f64, rhs: f64) {
        let row = self.b.len();
        for &(j, a) in coeffs {
            self.ri.push(row);
            self.ci.push(j);
            self.vals.push(sign * a);
        }
        self.b.push(sign * rhs);
    }

    fn cones(&self) -> Vec<SupportedConeT<f64>> {
        let mut cones = Vec::new();
        if self.eq > 0 {
            cones.push(SupportedConeT::ZeroConeT(self.eq));
        }
        if self.b.len() > self.eq {
            cones.push(SupportedConeT::NonnegativeConeT(self.b.len() - self.eq));
        }
        cones
    }
}

impl InteriorPoint {
    fn run(&self, p: &CscMatrix<f64>, q: &[f64], rows: &ConicRows, n: usize) -> Result<Vec<f64>> {
        let a = CscMatrix::new_from_triplets(rows.b.len(), n, rows.ri.clone(), rows.ci.clone(), rows.vals.clone());
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .tol_feas(self.tol_feas)
            .tol_gap_abs(self.tol_gap)
            .tol_gap_rel(self.tol_gap)
            .max_iter(self.max_iter)
            .build()
            .map_err(|e| Error::LpBackend(e.to_string()))?;
        let mut solver = DefaultSolver::new(p, q, &a, &rows.b, &rows.cones(), settings)
            .map_err(|e| Error::LpBackend(format!("{e:?}")))?;
        solver.solve();
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => Ok(solver.solution.x.clone()),
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                Err(Error::LpInfeasible { families: Vec::new() })
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => Err(Error::LpUnbounded),
            other => Err(Error::LpBackend(format!("interior point stopped: {other:?}"))),
        }
    }
}

impl LpBackend for InteriorPoint {
    fn name(&self) -> &'static str {
        "interior"
    }

    fn solve_primal(&self, lp: &LinearProgram) -> Result<Vec<f64>> {
        let n = lp.num_vars();
        self.run(&CscMatrix::zeros((n, n)), &lp.cost, &ConicRows::new(lp), n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::RowFamily;

    #[test]
    fn matches_textbook_vertex() {
        // max 3a + 5b, a <= 4, 2b <= 12, 3a + 2b <= 18 -> (2, 6)
        let mut lp = LinearProgram::new(2);
        lp.cost = vec![-3.0, -5.0];
        lp.add_row([(0, 1.0)], Sense::Le, 4.0, RowFamily::Other);
        lp.add_row([(1, 2.0)], Sense::Le, 12.0, RowFamily::Other);
        lp.add_row([(0, 3.0), (1, 2.0)], Sense::Le, 18.0, RowFamily::Other);
        lp.add_row([(0, 1.0)], Sense::Ge, 0.0, RowFamily::Other);
        lp.add_row([(1, 1.0)], Sense::Ge, 0.0, RowFamily::Other);
        let v = InteriorPoint::default().solve_primal(&lp).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-7 && (v[1] - 6.0).abs() < 1e-7, "{v:?}");
    }

    #[test]
    fn equalities_are_honoured() {
        let mut lp = LinearProgram::new(2);
        lp.cost = vec![1.0, 2.0];
        lp.add_row([(0, 1.0), (1, 1.0)], Sense::Eq, 1.0, RowFamily::Dynamics);
        lp.add_row([(0, 1.0)], Sense::Le, 0.25, RowFamily::Other);
        let v = InteriorPoint::default().solve_primal(&lp).unwrap();
        assert!((v[0] - 0.25).abs() < 1e-7 && (v[1] - 0.75).abs() < 1e-7, "{v:?}");
    }
}
