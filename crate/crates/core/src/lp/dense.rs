//! Two-phase tableau simplex with Bland's rule. Intended for small problems
//! and as a reference for the sparse backend.

use super::{LinearProgram, LpBackend, Sense};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct DenseSimplex {
    pub pivot_tol: f64,
    pub max_pivots: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        DenseSimplex {
            pivot_tol: 1e-9,
            max_pivots: 100_000,
        }
    }
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; last column is rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs Bland's rule on the objective row until optimal.
    fn optimize(&mut self, allowed: &[bool], tol: f64, max_pivots: usize) -> Result<()> {
        let m = self.basis.len();
        for _ in 0..max_pivots {
            let obj = &self.t[m];
            let Some(enter) = (0..self.cols).find(|&j| allowed[j] && obj[j] < -tol) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.t[i][enter];
                if a > tol {
                    let ratio = self.t[i][self.cols] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - tol || (ratio <= best + tol && self.basis[i] < self.basis[k]) {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Err(Error::LpUnbounded),
                Some((r, _)) => self.pivot(r, enter),
            }
        }
        Err(Error::LpBackend("dense simplex pivot limit reached".into()))
    }
}

impl LpBackend for DenseSimplex {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn solve_primal(&self, lp: &LinearProgram) -> Result<Vec<f64>> {
        let n = lp.num_vars();
        let m = lp.rows.len();
        let slack_count = lp.rows.iter().filter(|r| r.sense != Sense::Eq).count();
        // columns: x+ (n), x- (n), slacks, artificials (m)
        let art0 = 2 * n + slack_count;
        let cols = art0 + m;
        let mut t = vec![vec![0.0; cols + 1]; m + 1];
        let mut slack = 2 * n;
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                t[i][j] += a;
                t[i][n + j] -= a;
            }
            match row.sense {
                Sense::Le => {
                    t[i][slack] = 1.0;
                    slack += 1;
                }
                Sense::Ge => {
                    t[i][slack] = -1.0;
                    slack += 1;
                }
                Sense::Eq => {}
            }
            t[i][cols] = row.rhs;
            if row.rhs < 0.0 {
                for v in t[i].iter_mut() {
                    *v = -*v;
                }
            }
            t[i][art0 + i] = 1.0;
        }
        // phase 1 objective: sum of artificials, priced out
        for i in 0..m {
            for j in 0..=cols {
                if j < art0 || j == cols {
                    t[m][j] -= t[i][j];
                }
            }
        }
        let mut tab = Tableau {
            t,
            basis: (art0..cols).collect(),
            cols,
        };
        let all = vec![true; cols];
        tab.optimize(&all, self.pivot_tol, self.max_pivots)?;
        let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if -tab.t[m][cols] > 1e-9 * scale {
            return Err(Error::LpInfeasible { families: Vec::new() });
        }
        // drive remaining artificials out of the basis where possible
        for r in 0..m {
            if tab.basis[r] >= art0 {
                if let Some(c) = (0..art0).find(|&j| tab.t[r][j].abs() > self.pivot_tol) {
                    tab.pivot(r, c);
                }
            }
        }
        // phase 2
        let mut obj = vec![0.0; cols + 1];
        for j in 0..n {
            obj[j] = lp.cost[j];
            obj[n + j] = -lp.cost[j];
        }
        for r in 0..m {
            let b = tab.basis[r];
            let cb = obj[b];
            if cb != 0.0 {
                let row = tab.t[r].clone();
                for (o, v) in obj.iter_mut().zip(&row) {
                    *o -= cb * v;
                }
            }
        }
        tab.t[m] = obj;
        let allowed: Vec<bool> = (0..cols).map(|j| j < art0).collect();
        tab.optimize(&allowed, self.pivot_tol, self.max_pivots)?;
        let mut y = vec![0.0; cols];
        for r in 0..m {
            y[tab.basis[r]] = tab.t[r][cols];
        }
        Ok((0..n).map(|j| y[j] - y[n + j]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::RowFamily;

    #[test]
    fn textbook_problem() {
        // max 3a + 5b s.t. a <= 4, 2b <= 12, 3a + 2b <= 18, a, b >= 0
        let mut lp = LinearProgram::new(2);
        lp.cost = vec![-3.0, -5.0];
        lp.add_row([(0, 1.0)], Sense::Le, 4.0, RowFamily::Other);
        lp.add_row([(1, 2.0)], Sense::Le, 12.0, RowFamily::Other);
        lp.add_row([(0, 3.0), (1, 2.0)], Sense::Le, 18.0, RowFamily::Other);
        lp.add_row([(0, 1.0)], Sense::Ge, 0.0, RowFamily::Other);
        lp.add_row([(1, 1.0)], Sense::Ge, 0.0, RowFamily::Other);
        let v = DenseSimplex::default().solve_primal(&lp).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-12 && (v[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's cycling example; Bland's rule must terminate at -1/20
        let mut lp = LinearProgram::new(4);
        lp.cost = vec![-0.75, 150.0, -0.02, 6.0];
        lp.add_row([(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Sense::Le, 0.0, RowFamily::Other);
        lp.add_row([(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Sense::Le, 0.0, RowFamily::Other);
        lp.add_row([(2, 1.0)], Sense::Le, 1.0, RowFamily::Other);
        for j in 0..4 {
            lp.add_row([(j, 1.0)], Sense::Ge, 0.0, RowFamily::Other);
        }
        let v = DenseSimplex::default().solve_primal(&lp).unwrap();
        assert!((lp.objective(&v) + 0.05).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::new(2);
        lp.cost = vec![1.0, 1.0];
        lp.add_row([(0, 1.0), (1, 1.0)], Sense::Eq, 2.0, RowFamily::Other);
        lp.add_row([(0, 2.0), (1, 2.0)], Sense::Eq, 4.0, RowFamily::Other);
        lp.add_row([(0, 1.0)], Sense::Ge, -1.0, RowFamily::Other);
        let v = DenseSimplex::default().solve_primal(&lp).unwrap();
        assert!((v[0] + v[1] - 2.0).abs() < 1e-12);
    }
}
