//! Dense two-phase simplex for the small feasibility problems in this crate.
//!
//! Problems are minimization in standard equality form, `min c.x` subject to
//! `A x = b`, `x >= 0`. Sizes are tiny (at most a dozen rows, a few hundred
//! columns), so a dense tableau with Bland's rule is enough: deterministic,
//! cycle-free, and basic solutions come out directly, which is what the
//! Caratheodory atom recovery needs. Infeasibility is certified by a Farkas
//! vector `y` with `y.b > 0` and `y.A <= 0`.

use crate::error::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;

const PIVOT_TOL: f64 = 1e-9;
const MAX_ITERS: usize = 50_000;

/// `min objective . x` subject to `rows[i] . x = rhs[i]`, `x >= 0`.
#[derive(Debug, Clone)]
pub struct Lp {
    pub ncols: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        objective: f64,
        /// Dual prices for the equality rows.
        duals: Vec<f64>,
        /// Column indices of the final basis (one per row; may include
        /// artificials basic at zero for degenerate rows).
        basis: Vec<usize>,
    },
    Infeasible {
        /// Farkas certificate: `y . rhs > 0` while `y . A_j <= 0` for all j.
        farkas: Vec<f64>,
    },
    Unbounded,
}

struct Tableau {
    m: usize,
    ntotal: usize,
    nstruct: usize,
    /// m rows of length ntotal + 1 (rhs last).
    t: Vec<Vec<f64>>,
    /// reduced costs, length ntotal.
    d: Vec<f64>,
    /// current objective value of the basic solution.
    obj: f64,
    basis: Vec<usize>,
    flipped: Vec<bool>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= piv;
        }
        for r in 0..self.m {
            if r != row {
                let factor = self.t[r][col];
                if factor != 0.0 {
                    for j in 0..=self.ntotal {
                        self.t[r][j] -= factor * self.t[row][j];
                    }
                }
            }
        }
        let factor = self.d[col];
        if factor != 0.0 {
            for j in 0..self.ntotal {
                self.d[j] -= factor * self.t[row][j];
            }
            self.obj += factor * self.t[row][self.ntotal];
        }
        self.basis[row] = col;
    }

    /// Bland's rule iteration until optimal or unbounded.
    fn run(&mut self, allow_artificial: bool) -> Result<bool> {
        for _ in 0..MAX_ITERS {
            let limit = if allow_artificial {
                self.ntotal
            } else {
                self.nstruct
            };
            let entering = (0..limit).find(|&j| self.d[j] < -PIVOT_TOL);
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.t[r][col];
                if a > PIVOT_TOL {
                    let ratio = self.t[r][self.ntotal] / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((br, brat)) => {
                            if ratio < brat - 1e-12
                                || (ratio <= brat + 1e-12 && self.basis[r] < self.basis[br])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, col),
                None => return Ok(false), // unbounded
            }
        }
        Err(Error::LpInternal("iteration cap"))
    }

    /// Recompute reduced costs for a fresh cost vector over all columns.
    fn set_costs(&mut self, costs: &[f64]) {
        let mut d = costs.to_vec();
        let mut obj = 0.0;
        for r in 0..self.m {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                for j in 0..self.ntotal {
                    d[j] -= cb * self.t[r][j];
                }
                obj += cb * self.t[r][self.ntotal];
            }
        }
        self.d = d;
        self.obj = obj;
    }
}

pub fn solve(lp: &Lp) -> Result<LpOutcome> {
    let m = lp.rows.len();
    let n = lp.ncols;
    debug_assert_eq!(lp.objective.len(), n);
    debug_assert_eq!(lp.rhs.len(), m);

    let ntotal = n + m;
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut flipped = vec![false; m];
    for i in 0..m {
        debug_assert_eq!(lp.rows[i].len(), n);
        let sign = if lp.rhs[i] < 0.0 {
            flipped[i] = true;
            -1.0
        } else {
            1.0
        };
        let mut row: Vec<f64> = lp.rows[i].iter().map(|&a| sign * a).collect();
        row.resize(ntotal, 0.0);
        row[n + i] = 1.0;
        row.push(sign * lp.rhs[i]);
        t.push(row);
    }
    let basis: Vec<usize> = (n..ntotal).collect();
    let mut tab = Tableau {
        m,
        ntotal,
        nstruct: n,
        t,
        d: vec![],
        obj: 0.0,
        basis,
        flipped,
    };

    // phase 1: minimize the artificial sum
    let mut phase1_costs = vec![0.0; ntotal];
    for c in phase1_costs.iter_mut().skip(n) {
        *c = 1.0;
    }
    tab.set_costs(&phase1_costs);
    if !tab.run(true)? {
        return Err(Error::LpInternal("phase-1 unbounded"));
    }
    let scale = lp
        .rhs
        .iter()
        .fold(1.0f64, |acc, &b| acc.max(b.abs()));
    if tab.obj > 1e-7 * scale {
        // infeasible: recover y from the artificial reduced costs
        let mut farkas = vec![0.0; m];
        for i in 0..m {
            let y = 1.0 - tab.d[n + i];
            farkas[i] = if tab.flipped[i] { -y } else { y };
        }
        return Ok(LpOutcome::Infeasible { farkas });
    }

    // drive artificials out of the basis where the row has structural support
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(col) = (0..n).find(|&j| tab.t[r][j].abs() > PIVOT_TOL) {
                tab.pivot(r, col);
            }
        }
    }

    // phase 2
    let mut phase2_costs = lp.objective.clone();
    phase2_costs.resize(ntotal, 0.0);
    tab.set_costs(&phase2_costs);
    if !tab.run(false)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.t[r][tab.ntotal];
        }
    }
    let mut duals = vec![0.0; m];
    for i in 0..m {
        let y = -tab.d[n + i];
        duals[i] = if tab.flipped[i] { -y } else { y };
    }
    Ok(LpOutcome::Optimal {
        x,
        objective: tab.obj,
        duals,
        basis: tab.basis.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(lp: &Lp) -> (Vec<f64>, f64, Vec<f64>) {
        match solve(lp).unwrap() {
            LpOutcome::Optimal {
                x,
                objective,
                duals,
                ..
            } => (x, objective, duals),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn simple_optimum() {
        // min -x1 - 2 x2 st x1 + x2 + s = 4, x2 + t = 3
        let lp = Lp {
            ncols: 4,
            objective: vec![-1.0, -2.0, 0.0, 0.0],
            rows: vec![vec![1.0, 1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]],
            rhs: vec![4.0, 3.0],
        };
        let (x, obj, _) = optimal(&lp);
        assert!((x[0] - 1.0).abs() < 1e-9);
        assert!((x[1] - 3.0).abs() < 1e-9);
        assert!((obj + 7.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_with_certificate() {
        // x1 + x2 = 1, x1 + x2 = 3
        let lp = Lp {
            ncols: 2,
            objective: vec![0.0, 0.0],
            rows: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            rhs: vec![1.0, 3.0],
        };
        match solve(&lp).unwrap() {
            LpOutcome::Infeasible { farkas } => {
                let yb = farkas[0] * 1.0 + farkas[1] * 3.0;
                assert!(yb > 1e-9);
                for j in 0..2 {
                    let ya = farkas[0] * lp.rows[0][j] + farkas[1] * lp.rows[1][j];
                    assert!(ya <= 1e-9);
                }
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unbounded() {
        // min -x1 st x1 - x2 = 1
        let lp = Lp {
            ncols: 2,
            objective: vec![-1.0, 0.0],
            rows: vec![vec![1.0, -1.0]],
            rhs: vec![1.0],
        };
        assert!(matches!(solve(&lp).unwrap(), LpOutcome::Unbounded));
    }

    #[test]
    fn duals_match_objective() {
        // strong duality: c.x* = y*.b for equality-form LPs
        let lp = Lp {
            ncols: 4,
            objective: vec![2.0, 3.0, 0.0, 0.0],
            rows: vec![vec![1.0, 1.0, -1.0, 0.0], vec![2.0, 1.0, 0.0, -1.0]],
            rhs: vec![2.0, 3.0],
        };
        let (_, obj, duals) = optimal(&lp);
        let yb = duals[0] * 2.0 + duals[1] * 3.0;
        assert!((obj - yb).abs() < 1e-8);
    }

    #[test]
    fn negative_rhs_rows() {
        // min x1 st -x1 - x2 = -2  (flipped internally)
        let lp = Lp {
            ncols: 2,
            objective: vec![1.0, 0.0],
            rows: vec![vec![-1.0, -1.0]],
            rhs: vec![-2.0],
        };
        let (x, obj, _) = optimal(&lp);
        assert!(obj.abs() < 1e-9);
        assert!((x[1] - 2.0).abs() < 1e-9);
    }
}
