//! Transportation costs, the exact discrete OT discrepancy, and ambiguity sets.

mod ball;
mod cost;
mod simplex;

use nalgebra::DMatrix;

pub use ball::{AffineRange, AmbiguitySet, Exactness, OuterReason, DEFAULT_MEMBERSHIP_TOL};
pub use cost::TransportationCost;

use crate::distributions::DiscreteDistribution;
use crate::error::{check_dim, Result};

/// An optimal coupling between two discrete distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    coupling: DMatrix<f64>,
    objective: f64,
}

impl TransportPlan {
    /// `coupling[(i, j)]` is the mass moved from atom `i` of the source to atom `j` of the target.
    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.coupling.row_iter().map(|r| r.sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        self.coupling.column_iter().map(|c| c.sum()).collect()
    }
}

/// Matrix of `c(x_i - y_j)` over all atom pairs.
pub fn cost_matrix(
    c: &TransportationCost,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
) -> Result<DMatrix<f64>> {
    check_dim(p.dim(), q.dim())?;
    if let Some(d) = c.dim() {
        check_dim(d, p.dim())?;
    }
    Ok(DMatrix::from_fn(p.len(), q.len(), |i, j| {
        c.eval_unchecked(&(&p.atoms()[i] - &q.atoms()[j]))
    }))
}

/// Minimum expected cost `c(x - y)` over all couplings of `p` and `q`.
///
/// A point mass on either side has exactly one coupling, so that case uses the
/// closed form `E_q[c(x - y)]` (resp. `E_p`). Everything else goes through the
/// transportation simplex.
pub fn ot_discrepancy(
    c: &TransportationCost,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
) -> Result<(f64, TransportPlan)> {
    let costs = cost_matrix(c, p, q)?;
    if p.is_dirac() || q.is_dirac() {
        let coupling = if p.is_dirac() {
            DMatrix::from_row_slice(1, q.len(), q.weights())
        } else {
            DMatrix::from_column_slice(p.len(), 1, p.weights())
        };
        let objective = coupling.component_mul(&costs).sum();
        return Ok((
            objective,
            TransportPlan {
                coupling,
                objective,
            },
        ));
    }
    let sol = simplex::solve(p.weights(), q.weights(), &costs)?;
    Ok((
        sol.objective,
        TransportPlan {
            coupling: sol.flow,
            objective: sol.objective,
        },
    ))
}

/// Forces the transportation simplex even for point masses. Used to cross-check
/// the closed form.
pub fn ot_discrepancy_lp(
    c: &TransportationCost,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
) -> Result<f64> {
    let costs = cost_matrix(c, p, q)?;
    Ok(simplex::solve(p.weights(), q.weights(), &costs)?.objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dvector, DVector};

    fn sq1() -> TransportationCost {
        TransportationCost::squared_euclidean(1)
    }

    #[test]
    fn dirac_pair_costs_epsilon() {
        for eps in [0.01, 0.5, 2.0] {
            let p = DiscreteDistribution::dirac(dvector![0.0]).unwrap();
            let q = DiscreteDistribution::dirac(dvector![f64::sqrt(eps)]).unwrap();
            let (d, _) = ot_discrepancy(&sq1(), &p, &q).unwrap();
            assert!((d - eps).abs() < 1e-12);
        }
    }

    #[test]
    fn escaping_mass_example_costs_epsilon() {
        // eps/n^2 mass at n and the rest at 0
        let eps = 0.3;
        for n in [2.0, 10.0, 100.0] {
            let w = eps / (n * n);
            let q = DiscreteDistribution::new(vec![dvector![n], dvector![0.0]], vec![w, 1.0 - w])
                .unwrap();
            let p = DiscreteDistribution::dirac(dvector![0.0]).unwrap();
            let (d, _) = ot_discrepancy(&sq1(), &p, &q).unwrap();
            assert!((d - eps).abs() < 1e-12);
        }
    }

    #[test]
    fn self_distance_is_zero_with_identity_coupling() {
        let p = DiscreteDistribution::empirical(vec![
            dvector![0.0, 1.0],
            dvector![2.0, -1.0],
            dvector![3.0, 3.0],
        ])
        .unwrap();
        let (d, plan) = ot_discrepancy(&TransportationCost::squared_euclidean(2), &p, &p).unwrap();
        assert!(d.abs() < 1e-15);
        for i in 0..3 {
            assert!((plan.coupling()[(i, i)] - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dirac_closed_form_matches_lp() {
        let p = DiscreteDistribution::dirac(dvector![0.5, -0.5]).unwrap();
        let q = DiscreteDistribution::new(
            vec![dvector![1.0, 0.0], dvector![-2.0, 0.3], dvector![0.0, 4.0]],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        let c = TransportationCost::squared_euclidean(2);
        let (closed, _) = ot_discrepancy(&c, &p, &q).unwrap();
        let lp = ot_discrepancy_lp(&c, &p, &q).unwrap();
        let direct = q.expect(|y| (y - DVector::from_vec(vec![0.5, -0.5])).norm_squared());
        assert!((closed - lp).abs() < 1e-9);
        assert!((closed - direct).abs() < 1e-12);
        let (swapped, _) = ot_discrepancy(&c, &q, &p).unwrap();
        assert!((swapped - closed).abs() < 1e-12);
    }

    #[test]
    fn plan_marginals_and_objective() {
        let p = DiscreteDistribution::new(
            vec![dvector![0.0], dvector![1.0], dvector![5.0]],
            vec![0.1, 0.6, 0.3],
        )
        .unwrap();
        let q = DiscreteDistribution::new(vec![dvector![0.5], dvector![4.0]], vec![0.45, 0.55])
            .unwrap();
        let (d, plan) = ot_discrepancy(&sq1(), &p, &q).unwrap();
        for (r, w) in plan.row_sums().iter().zip(p.weights()) {
            assert!((r - w).abs() < 1e-9);
        }
        for (c, w) in plan.col_sums().iter().zip(q.weights()) {
            assert!((c - w).abs() < 1e-9);
        }
        let recomputed = plan
            .coupling()
            .component_mul(&cost_matrix(&sq1(), &p, &q).unwrap())
            .sum();
        assert!((recomputed - d).abs() < 1e-9);
        // monotone 1-D coupling is optimal for a convex cost
        let monotone = 0.1 * 0.25 + 0.35 * 0.25 + 0.25 * 9.0 + 0.3 * 1.0;
        assert!((d - monotone).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = DiscreteDistribution::dirac(dvector![0.0]).unwrap();
        let q = DiscreteDistribution::dirac(dvector![0.0, 1.0]).unwrap();
        assert!(ot_discrepancy(&TransportationCost::power_norm(1.0).unwrap(), &p, &q).is_err());
    }
}
