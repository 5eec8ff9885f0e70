//! Ambiguity-set algebra.
//!
//! Pushing a ball `B_eps^c(P)` through a linear map `A` lands inside
//! `B_eps^{c o A+}(A#P)`, and the two sets coincide when `A` is full row-rank.
//! The radius never changes; the map is absorbed into the cost through the
//! Moore-Penrose pseudoinverse. Together with translation (delta-convolution)
//! and product lifting this is enough to carry a per-step noise ball to the
//! state of a linear system at any horizon.

use nalgebra::{DMatrix, DVector};

use crate::distributions::{DiscreteDistribution, TrajectoryBatch};
use crate::error::{check_dim, Error, Result};
use crate::transport::{AffineRange, AmbiguitySet, OuterReason, TransportationCost};

/// Relative threshold below which singular values count as zero.
pub const RANK_TOL: f64 = 1e-12;

/// SVD-based Moore-Penrose pseudoinverse with its factors.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    source: DMatrix<f64>,
    pinv: DMatrix<f64>,
    rank: usize,
    u: DMatrix<f64>,
    singular_values: DVector<f64>,
    v: DMatrix<f64>,
    full_row_rank: bool,
}

impl PseudoInverse {
    pub fn source(&self) -> &DMatrix<f64> {
        &self.source
    }

    /// `A+`, of size `cols x rows` of the source.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.pinv
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Left singular vectors (columns), ordered like [`Self::singular_values`].
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// Singular values in descending order (thin SVD, `min(m, n)` of them).
    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    /// Right singular vectors (columns).
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn is_full_row_rank(&self) -> bool {
        self.full_row_rank
    }

    /// Orthogonal projector `A A+` onto the range of the source.
    pub fn range_projector(&self) -> DMatrix<f64> {
        &self.source * &self.pinv
    }
}

struct SortedSvd {
    u: DMatrix<f64>,
    s: DVector<f64>,
    v: DMatrix<f64>,
}

fn sorted_svd(a: &DMatrix<f64>) -> SortedSvd {
    let k = a.nrows().min(a.ncols());
    if k == 0 {
        return SortedSvd {
            u: DMatrix::zeros(a.nrows(), 0),
            s: DVector::zeros(0),
            v: DMatrix::zeros(a.ncols(), 0),
        };
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    SortedSvd {
        u: DMatrix::from_fn(a.nrows(), k, |r, c| u[(r, order[c])]),
        s: DVector::from_fn(k, |i, _| svd.singular_values[order[i]]),
        v: DMatrix::from_fn(a.ncols(), k, |r, c| v_t[(order[c], r)]),
    }
}

pub fn pseudoinverse(a: &DMatrix<f64>) -> Result<PseudoInverse> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let SortedSvd { u, s, v } = sorted_svd(a);
    let smax = s.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_TOL * smax;
    let rank = s.iter().filter(|&&x| x > cutoff && x > 0.0).count();
    let mut pinv = DMatrix::zeros(a.ncols(), a.nrows());
    for i in 0..rank {
        pinv += v.column(i) * u.column(i).transpose() / s[i];
    }
    Ok(PseudoInverse {
        source: a.clone(),
        pinv,
        rank,
        u,
        singular_values: s,
        v,
        full_row_rank: rank == a.nrows(),
    })
}

/// Singular values of `m` in descending order, each with its left singular vector.
pub fn cost_spectrum(m: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let SortedSvd { u, s, .. } = sorted_svd(m);
    s.iter()
        .enumerate()
        .map(|(i, &sigma)| (sigma, u.column(i).into_owned()))
        .collect()
}

/// Pushes the ball through `x -> a x`: the center is pushed forward, the radius
/// is kept, and the cost becomes `c o A+`.
///
/// The result is exact when `a` is full row-rank (and the input was exact);
/// otherwise it is an outer approximation, and the range of `a` is recorded so
/// that [`AmbiguitySet::support_in_range`] can tell the exact image apart.
pub fn propagate_linear(ball: &AmbiguitySet, a: &DMatrix<f64>) -> Result<AmbiguitySet> {
    check_dim(ball.dim(), a.ncols())?;
    let pinv = pseudoinverse(a)?;
    let center = ball.center().pushforward(a)?;
    let cost = ball.cost().compose(pinv.matrix())?;
    let exactness = if pinv.is_full_row_rank() {
        ball.exactness()
    } else {
        ball.exactness().downgrade(OuterReason::RankDeficientMap)
    };
    // the image lives in a (prior range) which may itself be a strict subspace
    let range = match ball.range() {
        None if pinv.is_full_row_rank() => None,
        None => Some(AffineRange {
            projector: pinv.range_projector(),
            offset: DVector::zeros(a.nrows()),
        }),
        Some(prev) => {
            let effective = a * &prev.projector;
            let eff = pseudoinverse(&effective)?;
            if eff.is_full_row_rank() {
                None
            } else {
                Some(AffineRange {
                    projector: eff.range_projector(),
                    offset: a * &prev.offset,
                })
            }
        }
    };
    AmbiguitySet::with_parts(center, cost, ball.radius(), exactness, range)
}

/// Shifts every member by `y` (center convolved with a point mass at `y`).
pub fn translate(ball: &AmbiguitySet, y: &DVector<f64>) -> Result<AmbiguitySet> {
    let center = ball.center().convolve_delta(y)?;
    let range = ball.range().map(|r| AffineRange {
        projector: r.projector.clone(),
        offset: &r.offset + y,
    });
    AmbiguitySet::with_parts(
        center,
        ball.cost().clone(),
        ball.radius(),
        ball.exactness(),
        range,
    )
}

/// How the lifted center over a horizon is formed.
#[derive(Debug, Clone, Copy)]
pub enum LiftMode<'a> {
    /// Full `t`-fold product of the per-step center, capped in atom count.
    Enumerate { cap: usize },
    /// Empirical distribution of observed noise trajectories.
    Trajectories(&'a TrajectoryBatch),
}

/// Lifts a per-step ball with plain squared Euclidean cost to the space of
/// stacked noise trajectories over `t` steps. The radius becomes `t * eps`.
///
/// In trajectory mode the radius is still `t * eps` while the center is the
/// `N`-trajectory empirical distribution; the result is flagged as an outer
/// approximation with reason `TrajectoryCenter`.
pub fn lift_product(ball: &AmbiguitySet, t: usize, mode: LiftMode<'_>) -> Result<AmbiguitySet> {
    if t == 0 {
        return Err(Error::InvalidHorizon);
    }
    if !ball.cost().is_plain_squared_euclidean() {
        return Err(Error::WrongCostKind(
            "lifting needs the plain squared Euclidean cost",
        ));
    }
    if ball.range().is_some() {
        return Err(Error::InvalidArgument(
            "cannot lift a ball restricted to a subspace".into(),
        ));
    }
    let r = ball.dim();
    let radius = t as f64 * ball.radius();
    let cost = TransportationCost::squared_euclidean(t * r);
    match mode {
        LiftMode::Enumerate { cap } => {
            let center = ball.center().product_power(t, cap)?;
            AmbiguitySet::with_parts(center, cost, radius, ball.exactness(), None)
        }
        LiftMode::Trajectories(batch) => {
            check_dim(t, batch.horizon())?;
            check_dim(r, batch.noise_dim())?;
            let center = batch.to_empirical()?;
            let exactness = ball.exactness().downgrade(OuterReason::TrajectoryCenter);
            AmbiguitySet::with_parts(center, cost, radius, exactness, None)
        }
    }
}

/// `scale * n^(-1 / max(2, r))`, the order of the radius that makes a ball
/// around `n` samples in dimension `r` contain the true distribution with
/// high probability.
pub fn radius_rate(n: usize, r: usize, scale: f64) -> f64 {
    debug_assert!(n >= 1 && r >= 1 && scale > 0.0);
    scale * (n as f64).powf(-1.0 / r.max(2) as f64)
}

/// Replaces the cost `|M z|^2` by the isotropic `sigma_min(M)^2 |z|^2`, folding
/// the factor into the radius. With `M = D+` this multiplies the radius by
/// `sigma_max(D)^2`.
pub fn bounding_ball(ball: &AmbiguitySet) -> Result<AmbiguitySet> {
    let TransportationCost::SqEuclidComposed(m) = ball.cost() else {
        return Err(Error::WrongCostKind(
            "bounding ball needs a composed squared Euclidean cost",
        ));
    };
    if m.nrows() < m.ncols() {
        return Err(Error::WrongCostKind("cost map has a nontrivial kernel"));
    }
    let spectrum = cost_spectrum(m);
    let smax = spectrum.first().map_or(0.0, |s| s.0);
    let smin = spectrum.last().map_or(0.0, |s| s.0);
    if !(smin > RANK_TOL * smax && smin > 0.0) {
        return Err(Error::WrongCostKind("cost map has a nontrivial kernel"));
    }
    let radius = ball.radius() / (smin * smin);
    let cost = TransportationCost::squared_euclidean(m.ncols());
    let exactness = ball.exactness().downgrade(OuterReason::BoundingBall);
    AmbiguitySet::with_parts(
        ball.center().clone(),
        cost,
        radius,
        exactness,
        ball.range().cloned(),
    )
}

/// For a cost `|s z|^p` (isotropic map), the equivalent ball under the plain
/// `|z|^p` cost: same center, radius divided by `|s|^p`.
pub fn normalize_isotropic(ball: &AmbiguitySet) -> Option<AmbiguitySet> {
    let scale = ball.cost().isotropic_scale()?;
    if scale <= 0.0 {
        return None;
    }
    let cost = match ball.cost() {
        TransportationCost::SqEuclidComposed(m) => TransportationCost::squared_euclidean(m.ncols()),
        TransportationCost::PowerNorm { p, .. } => {
            TransportationCost::PowerNorm { p: *p, map: None }
        }
    };
    AmbiguitySet::with_parts(
        ball.center().clone(),
        cost,
        ball.radius() / scale,
        ball.exactness(),
        ball.range().cloned(),
    )
    .ok()
}

/// Convenience: the empirical-centered noise ball with squared Euclidean cost.
pub fn noise_ball(samples: Vec<DVector<f64>>, eps: f64) -> Result<AmbiguitySet> {
    let center = DiscreteDistribution::empirical(samples)?;
    let d = center.dim();
    AmbiguitySet::new(center, TransportationCost::squared_euclidean(d), eps)
}
