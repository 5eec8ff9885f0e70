use nalgebra::{DMatrix, DVector};

use super::{ot_discrepancy, TransportationCost};
use crate::distributions::DiscreteDistribution;
use crate::error::{check_dim, Error, Result};

/// Default absolute slack on the radius when testing membership.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-7;

/// Why a set is only known to contain the true uncertainty set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterReason {
    /// Propagated through a map that is not full row-rank.
    RankDeficientMap,
    /// Lifted with the empirical distribution of observed trajectories as center.
    TrajectoryCenter,
    /// The cost was replaced by a smaller isotropic one.
    BoundingBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    OuterApproximation(OuterReason),
}

impl Exactness {
    /// Keeps the first recorded reason.
    pub(crate) fn downgrade(self, reason: OuterReason) -> Self {
        match self {
            Self::Exact => Self::OuterApproximation(reason),
            outer => outer,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::OuterApproximation(OuterReason::RankDeficientMap) => {
                "outer-approximation:rank-deficient"
            }
            Self::OuterApproximation(OuterReason::TrajectoryCenter) => {
                "outer-approximation:trajectory-center"
            }
            Self::OuterApproximation(OuterReason::BoundingBall) => {
                "outer-approximation:bounding-ball"
            }
        }
    }
}

/// Affine subspace `offset + range(projector)` that every member of an exact
/// pushforward must be supported on.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineRange {
    pub projector: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineRange {
    pub fn contains(&self, y: &DVector<f64>) -> bool {
        let z = y - &self.offset;
        (&z - &self.projector * &z).norm() <= 1e-9 * y.norm().max(1.0)
    }
}

/// The set of distributions within OT discrepancy `radius` of `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySet {
    center: DiscreteDistribution,
    cost: TransportationCost,
    radius: f64,
    exactness: Exactness,
    range: Option<AffineRange>,
}

impl AmbiguitySet {
    pub fn new(
        center: DiscreteDistribution,
        cost: TransportationCost,
        radius: f64,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius {radius} must be finite and >= 0"
            )));
        }
        if let Some(d) = cost.dim() {
            check_dim(d, center.dim())?;
        }
        Ok(Self {
            center,
            cost,
            radius,
            exactness: Exactness::Exact,
            range: None,
        })
    }

    pub(crate) fn with_parts(
        center: DiscreteDistribution,
        cost: TransportationCost,
        radius: f64,
        exactness: Exactness,
        range: Option<AffineRange>,
    ) -> Result<Self> {
        let mut ball = Self::new(center, cost, radius)?;
        ball.exactness = exactness;
        ball.range = range;
        Ok(ball)
    }

    pub fn center(&self) -> &DiscreteDistribution {
        &self.center
    }

    pub fn cost(&self) -> &TransportationCost {
        &self.cost
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn exactness(&self) -> Exactness {
        self.exactness
    }

    pub fn is_exact(&self) -> bool {
        self.exactness == Exactness::Exact
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Affine range of the last rank-deficient map the set was pushed through, if any.
    pub fn range(&self) -> Option<&AffineRange> {
        self.range.as_ref()
    }

    /// Same set with a different radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::with_parts(
            self.center.clone(),
            self.cost.clone(),
            radius,
            self.exactness,
            self.range.clone(),
        )
    }

    /// OT discrepancy from the center to `q`.
    pub fn distance_to(&self, q: &DiscreteDistribution) -> Result<f64> {
        Ok(ot_discrepancy(&self.cost, &self.center, q)?.0)
    }

    /// `T_c(center, q) <= radius + tol`.
    pub fn contains(&self, q: &DiscreteDistribution, tol: f64) -> Result<bool> {
        Ok(self.distance_to(q)? <= self.radius + tol)
    }

    /// Whether every atom of `q` lies in the tracked range (always true when no
    /// rank-deficient map was applied). The pushforward of the original set can
    /// only contain distributions that pass this test.
    pub fn support_in_range(&self, q: &DiscreteDistribution) -> Result<bool> {
        check_dim(self.dim(), q.dim())?;
        let Some(range) = &self.range else {
            return Ok(true);
        };
        Ok(q.atoms().iter().all(|y| range.contains(y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn ball(eps: f64) -> AmbiguitySet {
        let center =
            DiscreteDistribution::empirical(vec![dvector![0.0, 0.0], dvector![1.0, 0.0]]).unwrap();
        AmbiguitySet::new(center, TransportationCost::squared_euclidean(2), eps).unwrap()
    }

    #[test]
    fn center_is_member_for_any_radius() {
        for eps in [0.0, 0.1, 3.0] {
            let b = ball(eps);
            assert!(b.contains(b.center(), DEFAULT_MEMBERSHIP_TOL).unwrap());
        }
    }

    #[test]
    fn dirac_membership_follows_cost_geometry() {
        let c = TransportationCost::squared_euclidean(2);
        let x0 = dvector![1.0, 2.0];
        let b = AmbiguitySet::new(
            DiscreteDistribution::dirac(x0.clone()).unwrap(),
            c.clone(),
            0.5,
        )
        .unwrap();
        for x1 in [
            dvector![1.5, 2.0],
            dvector![1.0, 2.8],
            dvector![1.6, 2.6],
            dvector![0.0, 2.0],
        ] {
            let inside = c.evaluate(&(&x0 - &x1)).unwrap() <= 0.5;
            let q = DiscreteDistribution::dirac(x1).unwrap();
            assert_eq!(b.contains(&q, 0.0).unwrap(), inside);
        }
    }

    #[test]
    fn rejects_negative_radius_and_mismatched_cost() {
        let center = DiscreteDistribution::dirac(dvector![0.0]).unwrap();
        assert!(AmbiguitySet::new(
            center.clone(),
            TransportationCost::squared_euclidean(1),
            -1.0
        )
        .is_err());
        assert!(AmbiguitySet::new(center, TransportationCost::squared_euclidean(2), 1.0).is_err());
    }
}
