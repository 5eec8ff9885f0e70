use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::cvar::check_level;
use super::Polytope;
use crate::error::{check_dim, Error, Result};
use crate::propagation::{pseudoinverse, RANK_TOL};
use crate::transport::{AmbiguitySet, TransportationCost};

/// Deterministic constraint system equivalent to the distributionally robust
/// CVaR constraint over a state ambiguity set with cost `|M .|^2`:
///
/// ```text
/// risk_budget: lambda * eps_t * N + sum_i s_i <= 0
/// cell[i][j]:  alpha_j' x_i + beta_j(tau) + q_j / (4 lambda) <= s_i
/// ```
///
/// (for a non-uniform center each `s_i` is weighted by `N w_i`)
/// with `alpha_j = a_j / gamma`, `beta_j(tau) = (b_j + gamma tau - tau) / gamma`
/// for `j < J`, the extra row `alpha_J = 0, beta_J(tau) = tau`, and
/// `q_j = alpha_j' Q_c alpha_j`, `Q_c = (M' M)^{-1}`.
#[derive(Debug, Clone)]
pub struct GammaProgram {
    atoms: Vec<DVector<f64>>,
    weights: Vec<f64>,
    poly: Polytope,
    gamma: f64,
    eps_t: f64,
    qc: DMatrix<f64>,
    q: Vec<f64>,
}

pub fn build_gamma(state_ball: &AmbiguitySet, poly: &Polytope, gamma: f64) -> Result<GammaProgram> {
    check_level(gamma)?;
    check_dim(state_ball.dim(), poly.dim())?;
    let TransportationCost::SqEuclidComposed(m) = state_ball.cost() else {
        return Err(Error::WrongCostKind(
            "the constraint system needs a composed squared Euclidean cost",
        ));
    };
    let d = state_ball.dim();
    // M = D+ has full column rank iff D has full row rank
    let svd = pseudoinverse(m)?;
    if svd.rank() < d {
        return Err(Error::RankDeficient {
            rank: svd.rank(),
            rows: d,
        });
    }
    if state_ball.range().is_some() {
        return Err(Error::RankDeficient {
            rank: svd.rank(),
            rows: d,
        });
    }
    let v = svd.v();
    let sv = svd.singular_values();
    let inv_sq = DVector::from_iterator(d, sv.iter().take(d).map(|s| 1.0 / (s * s)));
    let vd = v.columns(0, d);
    let qc = &vd * DMatrix::from_diagonal(&inv_sq) * vd.transpose();
    let qc = (&qc + qc.transpose()) * 0.5;
    if sv[d - 1] <= RANK_TOL * sv[0] {
        return Err(Error::RankDeficient {
            rank: d - 1,
            rows: d,
        });
    }
    let mut q: Vec<f64> = poly
        .directions()
        .iter()
        .map(|a| (a.transpose() * &qc * a)[(0, 0)] / (gamma * gamma))
        .collect();
    q.push(0.0);
    Ok(GammaProgram {
        atoms: state_ball.center().atoms().to_vec(),
        weights: state_ball.center().weights().to_vec(),
        poly: poly.clone(),
        gamma,
        eps_t: state_ball.radius(),
        qc,
        q,
    })
}

impl GammaProgram {
    pub fn atoms(&self) -> &[DVector<f64>] {
        &self.atoms
    }

    /// Center weights; uniform `1/N` for an empirical center.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn polytope(&self) -> &Polytope {
        &self.poly
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Radius of the state ambiguity set.
    pub fn eps_t(&self) -> f64 {
        self.eps_t
    }

    /// `(M' M)^{-1}`.
    pub fn qc(&self) -> &DMatrix<f64> {
        &self.qc
    }

    /// `q_j` for `j = 0..=J`, the last one being zero.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn n_samples(&self) -> usize {
        self.atoms.len()
    }

    /// Number of halfspaces `J`.
    pub fn n_faces(&self) -> usize {
        self.poly.len()
    }

    /// Number of row groups, `J + 1`.
    pub fn n_rows_per_sample(&self) -> usize {
        self.poly.len() + 1
    }

    /// Same constraints with the atoms shifted by `shift`.
    pub fn shifted(&self, shift: &DVector<f64>) -> Result<Self> {
        check_dim(self.poly.dim(), shift.len())?;
        let mut out = self.clone();
        for x in &mut out.atoms {
            *x += shift;
        }
        Ok(out)
    }

    /// Same constraints with different polytope offsets.
    pub fn with_offsets(&self, offsets: Vec<f64>) -> Result<Self> {
        let mut out = self.clone();
        out.poly = self.poly.with_offsets(offsets)?;
        Ok(out)
    }

    /// `(constant, tau coefficient)` of `alpha_j' x_i + beta_j(tau)`.
    pub fn cell_affine(&self, i: usize, j: usize) -> (f64, f64) {
        if j == self.poly.len() {
            return (0.0, 1.0);
        }
        let a = &self.poly.directions()[j];
        let b = self.poly.offsets()[j];
        (
            (a.dot(&self.atoms[i]) + b) / self.gamma,
            1.0 - 1.0 / self.gamma,
        )
    }

    /// Evaluates `lambda eps_t + sum_i w_i max_j [...]` at `(tau, lambda)`.
    pub fn dual_objective(&self, tau: f64, lambda: f64) -> f64 {
        let n = self.atoms.len();
        let sum: f64 = (0..n)
            .map(|i| {
                self.weights[i]
                    * (0..self.n_rows_per_sample())
                        .map(|j| {
                            let (c, t) = self.cell_affine(i, j);
                            c + t * tau + self.q[j] / (4.0 * lambda)
                        })
                        .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum();
        lambda * self.eps_t + sum
    }

    /// Text listing of the constraint system, one named constraint per line,
    /// coefficients at 17 significant digits.
    pub fn dump(&self) -> String {
        let f = |x: f64| format!("{x:.16e}");
        let n = self.atoms.len();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# N = {n}, J = {}, gamma = {}, eps_t = {}",
            self.n_faces(),
            f(self.gamma),
            f(self.eps_t)
        );
        let _ = writeln!(out, "# variables: tau, lambda > 0, s[0..{n}]");
        let _ = writeln!(
            out,
            "risk_budget: {} * lambda + sum_i s[i] <= 0",
            f(self.eps_t * n as f64)
        );
        for i in 0..n {
            for j in 0..self.n_rows_per_sample() {
                let (c, t) = self.cell_affine(i, j);
                let _ = writeln!(
                    out,
                    "cell[{i}][{j}]: {} + {} * tau + {} / (4 lambda) - s[{i}] <= 0",
                    f(c),
                    f(t),
                    f(self.q[j])
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DiscreteDistribution;
    use nalgebra::dvector;

    fn ball_with_d(d: DMatrix<f64>, atoms: Vec<DVector<f64>>, radius: f64) -> AmbiguitySet {
        let pinv = pseudoinverse(&d).unwrap().into_matrix();
        AmbiguitySet::new(
            DiscreteDistribution::empirical(atoms).unwrap(),
            TransportationCost::SqEuclidComposed(pinv),
            radius,
        )
        .unwrap()
    }

    #[test]
    fn q_matches_d_d_transpose() {
        let d = DMatrix::from_row_slice(2, 4, &[0.3, -0.1, 0.2, 0.05, 0.0, 0.4, -0.2, 0.1]);
        let ball = ball_with_d(d.clone(), vec![dvector![0.0, 0.0]], 0.1);
        let poly = Polytope::new(
            vec![dvector![1.0, 0.0], dvector![1.0, -1.0]],
            vec![-1.0, 0.0],
        )
        .unwrap();
        let g = build_gamma(&ball, &poly, 0.1).unwrap();
        let ddt = &d * d.transpose();
        for (j, a) in poly.directions().iter().enumerate() {
            let alpha = a / 0.1;
            let expected = (alpha.transpose() * &ddt * &alpha)[(0, 0)];
            assert!((g.q()[j] - expected).abs() < 1e-9 * expected.max(1.0));
        }
        assert_eq!(g.q()[2], 0.0);
    }

    #[test]
    fn rank_deficient_noise_map_is_rejected() {
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let ball = ball_with_d(d, vec![dvector![0.0, 0.0]], 0.1);
        let poly = Polytope::new(vec![dvector![1.0, 0.0]], vec![-1.0]).unwrap();
        assert!(matches!(
            build_gamma(&ball, &poly, 0.1),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn dump_names_every_constraint() {
        let ball = ball_with_d(
            DMatrix::identity(1, 1),
            vec![dvector![0.0], dvector![1.0]],
            0.5,
        );
        let poly = Polytope::new(vec![dvector![1.0]], vec![-2.0]).unwrap();
        let text = build_gamma(&ball, &poly, 0.5).unwrap().dump();
        assert!(text.contains("risk_budget: 1.0000000000000000e0 * lambda"));
        for cell in ["cell[0][0]", "cell[0][1]", "cell[1][0]", "cell[1][1]"] {
            assert!(text.contains(cell));
        }
    }
}
