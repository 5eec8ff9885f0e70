//! Dense two-phase tableau simplex for `min c'x s.t. A x <= b` with free `x`.
//!
//! Free variables are split as `x = x+ - x-`. Dantzig pricing switches to
//! Bland's rule after a run of degenerate pivots. The final basis is
//! re-solved with LU to clean up accumulated round-off.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_SWITCH: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub status: LpStatus,
    pub x: DVector<f64>,
    pub objective: f64,
}

struct Tableau {
    t: DMatrix<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.t.nrows()
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[(i, self.t.ncols() - 1)]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[(r, c)];
        let ncols = self.t.ncols();
        for k in 0..ncols {
            self.t[(r, k)] /= p;
        }
        let row = self.t.row(r).clone_owned();
        for i in 0..self.rows() {
            if i == r {
                continue;
            }
            let f = self.t[(i, c)];
            if f != 0.0 {
                for k in 0..ncols {
                    self.t[(i, k)] -= f * row[k];
                }
                self.t[(i, c)] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost' z` over columns `0..allowed`; returns false if unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: usize, max_iter: usize) -> Result<bool> {
        let scale = cost.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        let tol = 1e-10 * scale;
        let mut bland = false;
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            let reduced = |j: usize| -> f64 {
                let mut r = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    if b < cost.len() {
                        r -= cost[b] * self.t[(i, j)];
                    }
                }
                r
            };
            let mut entering = None;
            let mut best = -tol;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let r = reduced(j);
                if r < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = r;
                }
            }
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows() {
                let a = self.t[(i, c)];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((l, lr)) => {
                            ratio < lr - 1e-14
                                || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= 1e-14 {
                degenerate += 1;
                if degenerate >= DEGENERATE_SWITCH {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
        Err(Error::LpNonConvergence {
            iterations: max_iter,
        })
    }
}

pub(crate) fn solve(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LpSolution> {
    let (m, n) = a.shape();
    debug_assert_eq!(c.len(), n);
    debug_assert_eq!(b.len(), m);
    if a.iter()
        .chain(b.iter())
        .chain(c.iter())
        .any(|x| !x.is_finite())
    {
        return Err(Error::NonFinite("linear program data"));
    }
    // columns: x+ (n), x- (n), slack (m), artificial (one per negative rhs)
    let negative: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let n_art = negative.len();
    let n_struct = 2 * n + m;
    let ncols = n_struct + n_art + 1;
    let mut t = DMatrix::zeros(m, ncols);
    let mut basis = vec![0; m];
    let mut art = 0;
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = sign * a[(i, j)];
            t[(i, n + j)] = -sign * a[(i, j)];
        }
        t[(i, 2 * n + i)] = sign;
        t[(i, ncols - 1)] = sign * b[i];
        if sign < 0.0 {
            t[(i, n_struct + art)] = 1.0;
            basis[i] = n_struct + art;
            art += 1;
        } else {
            basis[i] = 2 * n + i;
        }
    }
    let mut tab = Tableau { t, basis };
    let max_iter = 50 * (m + n_struct).max(100);

    if n_art > 0 {
        let mut phase1 = vec![0.0; n_struct + n_art];
        for k in 0..n_art {
            phase1[n_struct + k] = 1.0;
        }
        tab.optimize(&phase1, n_struct + n_art, max_iter)?;
        let infeas: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= n_struct)
            .map(|i| tab.rhs(i))
            .sum();
        let bscale = b.amax().max(1.0);
        if infeas > 1e-9 * bscale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: DVector::zeros(n),
                objective: f64::NAN,
            });
        }
        // drive remaining zero-level artificials out where possible
        for i in 0..m {
            if tab.basis[i] >= n_struct {
                if let Some(j) =
                    (0..n_struct).find(|&j| tab.t[(i, j)].abs() > 1e-9 && !tab.basis.contains(&j))
                {
                    tab.pivot(i, j);
                }
            }
        }
    }

    let mut cost = vec![0.0; n_struct];
    for j in 0..n {
        cost[j] = c[j];
        cost[n + j] = -c[j];
    }
    if !tab.optimize(&cost, n_struct, max_iter)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: DVector::zeros(n),
            objective: f64::NEG_INFINITY,
        });
    }

    let mut z = DVector::zeros(n_struct + n_art);
    for i in 0..m {
        z[tab.basis[i]] = tab.rhs(i);
    }
    refine(a, b, n, &negative, &tab.basis, &mut z);
    let x = DVector::from_fn(n, |j, _| z[j] - z[n + j]);
    let objective = c.dot(&x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
    })
}

/// Recomputes the basic values from the original data with a fresh LU solve.
fn refine(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    n: usize,
    negative: &[usize],
    basis: &[usize],
    z: &mut DVector<f64>,
) {
    let m = a.nrows();
    let n_struct = 2 * n + m;
    let column = |j: usize| -> DVector<f64> {
        if j < n {
            a.column(j).clone_owned()
        } else if j < 2 * n {
            -a.column(j - n)
        } else if j < n_struct {
            let mut e = DVector::zeros(m);
            e[j - 2 * n] = 1.0;
            e
        } else {
            // artificial of a sign-flipped row
            let mut e = DVector::zeros(m);
            e[negative[j - n_struct]] = -1.0;
            e
        }
    };
    let mut bm = DMatrix::zeros(m, m);
    for (k, &j) in basis.iter().enumerate() {
        bm.set_column(k, &column(j));
    }
    if let Some(sol) = bm.lu().solve(b) {
        if sol.iter().all(|v| v.is_finite() && *v >= -1e-9) {
            for (k, &j) in basis.iter().enumerate() {
                z[j] = sol[k].max(0.0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18, x,y >= 0
        let a =
            DMatrix::from_row_slice(5, 2, &[1.0, 0.0, 0.0, 2.0, 3.0, 2.0, -1.0, 0.0, 0.0, -1.0]);
        let b = dvector![4.0, 12.0, 18.0, 0.0, 0.0];
        let sol = solve(&dvector![-3.0, -5.0], &a, &b).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 36.0).abs() < 1e-12);
        assert!((sol.x - dvector![2.0, 6.0]).norm() < 1e-12);
    }

    #[test]
    fn needs_phase_one() {
        // min x + y s.t. x + y >= 2, x - y <= 1, free
        let a = DMatrix::from_row_slice(3, 2, &[-1.0, -1.0, 1.0, -1.0, -1.0, 0.0]);
        let sol = solve(&dvector![1.0, 1.0], &a, &dvector![-2.0, 1.0, 0.0]).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        assert_eq!(
            solve(&dvector![1.0], &a, &dvector![-1.0, -1.0])
                .unwrap()
                .status,
            LpStatus::Infeasible
        );
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert_eq!(
            solve(&dvector![1.0], &a, &dvector![0.0]).unwrap().status,
            LpStatus::Unbounded
        );
    }

    #[test]
    fn degenerate_vertex() {
        // many constraints through the optimum (0, 0)
        let a = DMatrix::from_row_slice(4, 2, &[-1.0, 0.0, 0.0, -1.0, -1.0, -1.0, -2.0, -1.0]);
        let sol = solve(&dvector![1.0, 1.0], &a, &DVector::zeros(4)).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.objective.abs() < 1e-15);
    }
}
