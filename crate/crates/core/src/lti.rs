//! Stochastic LTI systems `x+ = A x + B u + D w`, `u = K x + v`.
//!
//! Stacked vectors over a horizon are stored latest-first:
//! `v = [v_{t-1}; ...; v_0]` and `w = [w_{t-1}; ...; w_0]`, matching the
//! block order of the lifted operators, whose block `k` is `(A + BK)^k B`
//! (resp. `D`).

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::distributions::TrajectoryBatch;
use crate::error::{check_dim, Error, Result};
use crate::propagation::{lift_product, propagate_linear, pseudoinverse, translate, LiftMode};
use crate::transport::AmbiguitySet;

#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    d: DMatrix<f64>,
    k: DMatrix<f64>,
    x0: DVector<f64>,
}

impl LtiSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        d: DMatrix<f64>,
        k: DMatrix<f64>,
        x0: DVector<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        check_dim(n, a.ncols())?;
        check_dim(n, b.nrows())?;
        check_dim(n, d.nrows())?;
        check_dim(b.ncols(), k.nrows())?;
        check_dim(n, k.ncols())?;
        check_dim(n, x0.len())?;
        if b.ncols() == 0 || d.ncols() == 0 {
            return Err(Error::ZeroDimension);
        }
        let finite = a
            .iter()
            .chain(b.iter())
            .chain(d.iter())
            .chain(k.iter())
            .chain(x0.iter())
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFinite("system matrices"));
        }
        Ok(Self { a, b, d, k, x0 })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }
    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
    pub fn noise_dim(&self) -> usize {
        self.d.ncols()
    }

    /// `A + B K`.
    pub fn closed_loop(&self) -> DMatrix<f64> {
        &self.a + &self.b * &self.k
    }

    pub fn with_gain(&self, k: DMatrix<f64>) -> Result<Self> {
        Self::new(
            self.a.clone(),
            self.b.clone(),
            self.d.clone(),
            k,
            self.x0.clone(),
        )
    }

    pub fn with_initial_state(&self, x0: DVector<f64>) -> Result<Self> {
        Self::new(
            self.a.clone(),
            self.b.clone(),
            self.d.clone(),
            self.k.clone(),
            x0,
        )
    }
}

/// Horizon-`t` block operators mapping stacked inputs and noises to `x_t`.
#[derive(Debug, Clone)]
pub struct LiftedOperators {
    horizon: usize,
    powers: Vec<DMatrix<f64>>,
    input_map: DMatrix<f64>,
    noise_map: DMatrix<f64>,
    noise_map_full_row_rank: bool,
}

impl LiftedOperators {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `(A + BK)^k` for `k = 0..=t`.
    pub fn closed_loop_power(&self, k: usize) -> &DMatrix<f64> {
        &self.powers[k]
    }

    /// `[B, (A+BK) B, ..., (A+BK)^{t-1} B]`.
    pub fn input_map(&self) -> &DMatrix<f64> {
        &self.input_map
    }

    /// `[D, (A+BK) D, ..., (A+BK)^{t-1} D]`.
    pub fn noise_map(&self) -> &DMatrix<f64> {
        &self.noise_map
    }

    pub fn noise_map_full_row_rank(&self) -> bool {
        self.noise_map_full_row_rank
    }

    /// `(A+BK)^t x0 + B_lift v`, the state without noise.
    pub fn nominal_state(&self, x0: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.input_map.ncols(), v.len())?;
        Ok(&self.powers[self.horizon] * x0 + &self.input_map * v)
    }

    /// `x_t` for the given stacked input and noise.
    pub fn final_state(
        &self,
        x0: &DVector<f64>,
        v: &DVector<f64>,
        w: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        check_dim(self.noise_map.ncols(), w.len())?;
        Ok(self.nominal_state(x0, v)? + &self.noise_map * w)
    }
}

pub fn lift(sys: &LtiSystem, t: usize) -> Result<LiftedOperators> {
    if t == 0 {
        return Err(Error::InvalidHorizon);
    }
    let n = sys.state_dim();
    let (m, r) = (sys.input_dim(), sys.noise_dim());
    let phi = sys.closed_loop();
    let mut powers = Vec::with_capacity(t + 1);
    powers.push(DMatrix::identity(n, n));
    for k in 1..=t {
        let next = &phi * &powers[k - 1];
        powers.push(next);
    }
    let mut input_map = DMatrix::zeros(n, t * m);
    let mut noise_map = DMatrix::zeros(n, t * r);
    for k in 0..t {
        input_map
            .columns_mut(k * m, m)
            .copy_from(&(&powers[k] * sys.b()));
        noise_map
            .columns_mut(k * r, r)
            .copy_from(&(&powers[k] * sys.d()));
    }
    let noise_map_full_row_rank = pseudoinverse(&noise_map)?.is_full_row_rank();
    Ok(LiftedOperators {
        horizon: t,
        powers,
        input_map,
        noise_map,
        noise_map_full_row_rank,
    })
}

/// Ambiguity set of the state `x_t` given a per-step noise ball with plain
/// squared Euclidean cost: radius `t * eps`, cost `|D_lift+ .|^2`, center the
/// lifted noise center pushed through `D_lift` and shifted by the nominal state.
pub fn state_ambiguity(
    sys: &LtiSystem,
    t: usize,
    v: &DVector<f64>,
    noise_ball: &AmbiguitySet,
    mode: LiftMode<'_>,
) -> Result<AmbiguitySet> {
    check_dim(sys.noise_dim(), noise_ball.dim())?;
    let ops = lift(sys, t)?;
    let offset = ops.nominal_state(sys.x0(), v)?;
    let lifted = lift_product(noise_ball, t, mode)?;
    let propagated = propagate_linear(&lifted, ops.noise_map())?;
    translate(&propagated, &offset)
}

/// Infinite-horizon discrete LQR gain by Riccati fixed-point iteration.
///
/// Returns `K = -(R + B'PB)^{-1} B'PA` for the convention `u = K x`, so that
/// `A + B K` is the closed loop.
pub fn lqr_gain(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    iters: usize,
    tol: f64,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    check_dim(n, a.ncols())?;
    check_dim(n, b.nrows())?;
    check_dim(n, q.nrows())?;
    check_dim(n, q.ncols())?;
    check_dim(b.ncols(), r.nrows())?;
    check_dim(b.ncols(), r.ncols())?;
    for (name, m) in [("Q", q), ("R", r)] {
        if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) || m.clone().cholesky().is_none()
        {
            return Err(Error::InvalidArgument(format!(
                "{name} must be symmetric positive definite"
            )));
        }
    }
    let gain = |p: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let s = r + b.transpose() * p * b;
        let chol = s.cholesky().ok_or(Error::InvalidArgument(
            "R + B'PB is not positive definite".into(),
        ))?;
        Ok(-chol.solve(&(b.transpose() * p * a)))
    };
    let mut p = q.clone();
    for _ in 0..iters {
        let k = gain(&p)?;
        // P+ = Q + A'PA + A'PB K, with K already carrying the minus sign
        let next = q + a.transpose() * &p * a + a.transpose() * &p * b * &k;
        let next = (&next + next.transpose()) * 0.5;
        let delta = (&next - &p).norm();
        p = next;
        if delta <= tol {
            let k = gain(&p)?;
            let rho = spectral_radius(&(a + b * &k));
            if rho >= 1.0 {
                return Err(Error::Unstable(rho));
            }
            return Ok(k);
        }
    }
    Err(Error::RiccatiNoConvergence { iters })
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Rolls the closed loop forward for every noise trajectory of the batch.
/// Returns, per trajectory, the states `x_0, ..., x_t`.
pub fn simulate(
    sys: &LtiSystem,
    v: &DVector<f64>,
    batch: &TrajectoryBatch,
) -> Result<Vec<Vec<DVector<f64>>>> {
    let t = batch.horizon();
    let m = sys.input_dim();
    check_dim(t * m, v.len())?;
    check_dim(sys.noise_dim(), batch.noise_dim())?;
    let phi = sys.closed_loop();
    let paths = (0..batch.len())
        .map(|i| {
            let mut x = sys.x0().clone();
            let mut path = Vec::with_capacity(t + 1);
            path.push(x.clone());
            for k in 0..t {
                let vk = v.rows((t - 1 - k) * m, m);
                x = &phi * &x + sys.b() * vk + sys.d() * batch.step(i, k);
                path.push(x.clone());
            }
            path
        })
        .collect();
    Ok(paths)
}

/// JSON description of a system; exactly one of `K` and `lqr` must be given.
#[derive(Debug, Clone, Deserialize, serde::Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lqr: Option<LqrWeights>,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, serde::Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LqrWeights {
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::Config(format!("{what} has no rows")));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!("{what} rows are empty or ragged")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub const LQR_ITERS: usize = 10_000;
pub const LQR_TOL: f64 = 1e-10;

impl SystemConfig {
    pub fn build(&self) -> Result<LtiSystem> {
        let a = matrix_from_rows(&self.a, "A")?;
        let b = matrix_from_rows(&self.b, "B")?;
        let d = matrix_from_rows(&self.d, "D")?;
        let k = match (&self.k, &self.lqr) {
            (Some(k), None) => matrix_from_rows(k, "K")?,
            (None, Some(weights)) => {
                let q = matrix_from_rows(&weights.q, "lqr.Q")?;
                let r = matrix_from_rows(&weights.r, "lqr.R")?;
                lqr_gain(&a, &b, &q, &r, LQR_ITERS, LQR_TOL)?
            }
            _ => {
                return Err(Error::Config(
                    "exactly one of \"K\" and \"lqr\" must be given".into(),
                ))
            }
        };
        let x0 = DVector::from_vec(self.x0.clone());
        LtiSystem::new(a, b, d, k, x0).map_err(|e| match e {
            Error::DimensionMismatch { .. } | Error::ZeroDimension => {
                Error::Config(format!("inconsistent system: {e}"))
            }
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn planar(k: DMatrix<f64>) -> LtiSystem {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, 1.0, 0.5]);
        LtiSystem::new(
            a,
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2) * 0.1,
            k,
            DVector::zeros(2),
        )
        .unwrap()
    }

    #[test]
    fn single_step_lift_is_b_and_d() {
        let sys = planar(DMatrix::zeros(2, 2));
        let ops = lift(&sys, 1).unwrap();
        assert_eq!(ops.input_map(), sys.b());
        assert_eq!(ops.noise_map(), sys.d());
        assert!(matches!(lift(&sys, 0), Err(Error::InvalidHorizon)));
    }

    #[test]
    fn identity_closed_loop_repeats_d() {
        let d = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let sys = LtiSystem::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            d.clone(),
            DMatrix::zeros(2, 2),
            DVector::zeros(2),
        )
        .unwrap();
        let ops = lift(&sys, 4).unwrap();
        for k in 0..4 {
            assert_eq!(ops.noise_map().columns(k, 1), d.columns(0, 1));
        }
    }

    #[test]
    fn lqr_with_zero_dynamics_is_zero() {
        let k = lqr_gain(
            &DMatrix::zeros(2, 2),
            &DMatrix::identity(2, 2),
            &DMatrix::identity(2, 2),
            &DMatrix::identity(2, 2),
            100,
            1e-12,
        )
        .unwrap();
        assert!(k.amax() < 1e-15);
    }

    #[test]
    fn scalar_lqr_matches_value_iteration() {
        let (a, b, q, r) = (2.0_f64, 1.0_f64, 1.0_f64, 1.0_f64);
        // independent scalar value iteration
        let mut p = q;
        for _ in 0..200 {
            p = q + a * a * p - (a * b * p).powi(2) / (r + b * b * p);
        }
        let expected = -a * b * p / (r + b * b * p);
        let k = lqr_gain(
            &DMatrix::from_element(1, 1, a),
            &DMatrix::from_element(1, 1, b),
            &DMatrix::from_element(1, 1, q),
            &DMatrix::from_element(1, 1, r),
            1000,
            1e-10,
        )
        .unwrap();
        assert!((k[(0, 0)] - expected).abs() < 1e-9);
        // fixed point p = 2 + sqrt(5) for these numbers
        assert!((p - (2.0 + 5f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn lqr_rejects_indefinite_weights() {
        let err = lqr_gain(
            &DMatrix::identity(1, 1),
            &DMatrix::identity(1, 1),
            &DMatrix::from_element(1, 1, -1.0),
            &DMatrix::identity(1, 1),
            10,
            1e-10,
        );
        assert!(err.is_err());
    }

    #[test]
    fn lqr_reports_non_stabilizable_input() {
        // unstable mode the input cannot reach
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let res = lqr_gain(
            &a,
            &b,
            &DMatrix::identity(2, 2),
            &DMatrix::identity(1, 1),
            500,
            1e-10,
        );
        assert!(
            matches!(res, Err(Error::RiccatiNoConvergence { .. })),
            "{res:?}"
        );
    }

    #[test]
    fn simulate_zero_everything_stays_at_origin() {
        let sys = planar(DMatrix::zeros(2, 2));
        let batch = TrajectoryBatch::new(vec![DVector::zeros(6)], 3, 2).unwrap();
        let paths = simulate(&sys, &DVector::zeros(6), &batch).unwrap();
        assert_eq!(paths[0].len(), 4);
        assert!(paths[0].iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn simulate_matches_lifted_formula() {
        let sys = planar(DMatrix::from_row_slice(2, 2, &[-0.2, 0.1, -0.3, -0.4]))
            .with_initial_state(dvector![1.0, -2.0])
            .unwrap();
        let t = 5;
        let v = DVector::from_fn(2 * t, |i, _| (i as f64 * 0.37).sin());
        let w = DVector::from_fn(2 * t, |i, _| (i as f64 * 1.3).cos());
        let batch = TrajectoryBatch::new(vec![w.clone()], t, 2).unwrap();
        let paths = simulate(&sys, &v, &batch).unwrap();
        let ops = lift(&sys, t).unwrap();
        let xt = ops.final_state(sys.x0(), &v, &w).unwrap();
        assert!((&paths[0][t] - xt).norm() < 1e-12);
    }

    #[test]
    fn system_requires_exactly_one_gain_source() {
        let cfg = SystemConfig {
            a: vec![vec![1.0]],
            b: vec![vec![1.0]],
            d: vec![vec![1.0]],
            k: None,
            lqr: None,
            x0: vec![0.0],
        };
        assert!(matches!(cfg.build(), Err(Error::Config(_))));
        let with_k = SystemConfig {
            k: Some(vec![vec![-0.5]]),
            ..cfg.clone()
        };
        assert_eq!(with_k.build().unwrap().closed_loop()[(0, 0)], 0.5);
    }
}
