//! Operator-splitting (ADMM) solver for `min 1/2 x'Px + q'x s.t. A x <= u`,
//! with step-size adaptation, a primal infeasibility certificate, and an
//! active-set polishing step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct AdmmSettings {
    pub rho: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub eps_pinf: f64,
    pub max_iter: usize,
    pub check_every: usize,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            rho: 0.1,
            sigma: 1e-6,
            alpha: 1.6,
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            eps_pinf: 1e-7,
            max_iter: 50_000,
            check_every: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum QpStatus {
    Solved,
    PrimalInfeasible,
    MaxIter,
}

#[derive(Debug, Clone)]
pub(crate) struct QpSolution {
    pub status: QpStatus,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub objective: f64,
}

pub(crate) struct QpProblem<'a> {
    pub p: &'a DMatrix<f64>,
    pub q: &'a DVector<f64>,
    pub a: &'a DMatrix<f64>,
    pub u: &'a DVector<f64>,
}

impl QpProblem<'_> {
    fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(self.p * x)) + self.q.dot(x)
    }

    /// Max constraint violation and max dual residual.
    fn residuals(&self, x: &DVector<f64>, y: &DVector<f64>) -> (f64, f64) {
        let prim = (self.a * x - self.u).iter().fold(0.0_f64, |m, v| m.max(*v));
        let dual = (self.p * x + self.q + self.a.transpose() * y).amax();
        (prim, dual)
    }
}

fn factor(
    prob: &QpProblem<'_>,
    rho: f64,
    sigma: f64,
) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let n = prob.p.nrows();
    let k = prob.p + DMatrix::identity(n, n) * sigma + prob.a.transpose() * prob.a * rho;
    k.cholesky().ok_or(Error::NonFinite("ADMM system matrix"))
}

pub(crate) fn solve(
    prob: &QpProblem<'_>,
    warm: Option<(&DVector<f64>, &DVector<f64>)>,
    s: &AdmmSettings,
) -> Result<QpSolution> {
    let n = prob.p.nrows();
    let m = prob.a.nrows();
    let (mut x, mut y) = match warm {
        Some((x0, y0)) if x0.len() == n && y0.len() == m => (x0.clone(), y0.clone()),
        _ => (DVector::zeros(n), DVector::zeros(m)),
    };
    let mut z = (prob.a * &x).zip_map(prob.u, f64::min);
    let mut rho = s.rho;
    let mut chol = factor(prob, rho, s.sigma)?;
    let at = prob.a.transpose();
    let scale_u = prob.u.amax().max(1.0);

    for iter in 1..=s.max_iter {
        let rhs = &x * s.sigma - prob.q + &at * (&z * rho - &y);
        let x_tilde = chol.solve(&rhs);
        let z_tilde = prob.a * &x_tilde;
        let x_next = &x_tilde * s.alpha + &x * (1.0 - s.alpha);
        let z_relax = &z_tilde * s.alpha + &z * (1.0 - s.alpha);
        let z_next = (&z_relax + &y / rho).zip_map(prob.u, f64::min);
        let y_next = &y + (&z_relax - &z_next) * rho;
        let dy = &y_next - &y;
        x = x_next;
        z = z_next;
        y = y_next;

        if iter % s.check_every != 0 {
            continue;
        }
        let ax = prob.a * &x;
        let px = prob.p * &x;
        let aty = &at * &y;
        let r_prim = (&ax - &z).amax();
        let r_dual = (&px + prob.q + &aty).amax();
        let prim_scale = ax.amax().max(z.amax());
        let dual_scale = px.amax().max(aty.amax()).max(prob.q.amax());
        let eps_prim = s.eps_abs + s.eps_rel * prim_scale;
        let eps_dual = s.eps_abs + s.eps_rel * dual_scale;

        if r_prim < 1e-5 * (1.0 + prim_scale) && r_dual < 1e-5 * (1.0 + dual_scale) {
            if let Some(sol) = polish(prob, &y, &z, rho, scale_u) {
                return Ok(sol);
            }
        }
        if r_prim <= eps_prim && r_dual <= eps_dual {
            let y_clip = y.map(|v| v.max(0.0));
            return Ok(QpSolution {
                status: QpStatus::Solved,
                objective: prob.objective(&x),
                x,
                y: y_clip,
            });
        }

        // infeasibility certificate on the dual increment
        let dy_norm = dy.amax();
        if dy_norm > 1e-12 {
            let atdy = (&at * &dy).amax();
            let udy: f64 = dy
                .iter()
                .zip(prob.u.iter())
                .map(|(d, u)| d.max(0.0) * u)
                .sum();
            let sign_ok = dy.iter().all(|d| *d >= -s.eps_pinf * dy_norm);
            if sign_ok && atdy <= s.eps_pinf * dy_norm && udy < -s.eps_pinf * dy_norm {
                return Ok(QpSolution {
                    status: QpStatus::PrimalInfeasible,
                    objective: f64::NAN,
                    x,
                    y: dy,
                });
            }
        }

        // step-size adaptation
        let ratio =
            ((r_prim / prim_scale.max(1e-30)) / (r_dual / dual_scale.max(1e-30)).max(1e-30)).sqrt();
        let new_rho = (rho * ratio).clamp(1e-6, 1e6);
        if new_rho > 5.0 * rho || new_rho < 0.2 * rho {
            rho = new_rho;
            chol = factor(prob, rho, s.sigma)?;
        }
    }
    let objective = prob.objective(&x);
    Ok(QpSolution {
        status: QpStatus::MaxIter,
        x,
        y,
        objective,
    })
}

/// Solves the KKT system on the guessed active set and accepts the result only
/// if it is primal feasible, dual feasible and stationary to high accuracy.
fn polish(
    prob: &QpProblem<'_>,
    y: &DVector<f64>,
    z: &DVector<f64>,
    rho: f64,
    scale_u: f64,
) -> Option<QpSolution> {
    let n = prob.p.nrows();
    let active: Vec<usize> = (0..prob.a.nrows())
        .filter(|&i| prob.u[i] - z[i] < y[i] / rho)
        .collect();
    let k = active.len();
    let dim = n + k;
    let delta = 1e-10;
    let mut kkt = DMatrix::zeros(dim, dim);
    kkt.view_mut((0, 0), (n, n)).copy_from(prob.p);
    for (r, &i) in active.iter().enumerate() {
        for j in 0..n {
            kkt[(n + r, j)] = prob.a[(i, j)];
            kkt[(j, n + r)] = prob.a[(i, j)];
        }
    }
    let mut reg = kkt.clone();
    for d in 0..n {
        reg[(d, d)] += delta;
    }
    for d in n..dim {
        reg[(d, d)] -= delta;
    }
    let mut rhs = DVector::zeros(dim);
    rhs.rows_mut(0, n).copy_from(&(-prob.q));
    for (r, &i) in active.iter().enumerate() {
        rhs[n + r] = prob.u[i];
    }
    let lu = reg.lu();
    let mut sol = lu.solve(&rhs)?;
    for _ in 0..5 {
        let res = &rhs - &kkt * &sol;
        sol += lu.solve(&res)?;
    }
    let xp = sol.rows(0, n).clone_owned();
    let mut yp = DVector::zeros(prob.a.nrows());
    for (r, &i) in active.iter().enumerate() {
        yp[i] = sol[n + r];
    }
    if xp.iter().chain(yp.iter()).any(|v| !v.is_finite()) {
        return None;
    }
    let (prim, dual) = prob.residuals(&xp, &yp);
    let y_scale = yp.amax().max(1.0);
    let dual_ok = yp.iter().all(|v| *v >= -1e-9 * y_scale);
    if prim <= 1e-9 * scale_u && dual <= 1e-9 * y_scale && dual_ok {
        let yp = yp.map(|v| v.max(0.0));
        Some(QpSolution {
            status: QpStatus::Solved,
            objective: prob.objective(&xp),
            x: xp,
            y: yp,
        })
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn projection_onto_halfspace() {
        // min |x - (2, 2)|^2 / 2 s.t. x1 + x2 <= 2  ->  (1, 1)
        let p = DMatrix::identity(2, 2);
        let q = dvector![-2.0, -2.0];
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let u = dvector![2.0];
        let sol = solve(
            &QpProblem {
                p: &p,
                q: &q,
                a: &a,
                u: &u,
            },
            None,
            &AdmmSettings::default(),
        )
        .unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!((sol.x - dvector![1.0, 1.0]).amax() < 1e-9);
        assert!((sol.y[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn singular_hessian_with_free_variable() {
        // min x^2 s.t. t >= 1 - x, t <= 0.5  ->  x = 0.5
        let p = DMatrix::from_diagonal(&dvector![2.0, 0.0]);
        let q = dvector![0.0, 0.0];
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, 0.0, 1.0]);
        let u = dvector![-1.0, 0.5];
        let sol = solve(
            &QpProblem {
                p: &p,
                q: &q,
                a: &a,
                u: &u,
            },
            None,
            &AdmmSettings::default(),
        )
        .unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!((sol.x[0] - 0.5).abs() < 1e-9, "{}", sol.x);
        assert!((sol.objective - 0.25).abs() < 1e-9);
    }

    #[test]
    fn reports_infeasibility() {
        let p = DMatrix::identity(1, 1);
        let q = dvector![0.0];
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let u = dvector![-1.0, -1.0];
        let sol = solve(
            &QpProblem {
                p: &p,
                q: &q,
                a: &a,
                u: &u,
            },
            None,
            &AdmmSettings::default(),
        )
        .unwrap();
        assert_eq!(sol.status, QpStatus::PrimalInfeasible);
    }
}
