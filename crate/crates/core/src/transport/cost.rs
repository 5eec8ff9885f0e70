use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Translation-invariant transportation cost `c(z)`, charged as `c(x - y)` for moving
/// a unit of mass from `x` to `y`.
#[derive(Debug, Clone, PartialEq)]
pub enum TransportationCost {
    /// `c(z) = |M z|^2` for a stored `k x d` matrix `M`.
    SqEuclidComposed(DMatrix<f64>),
    /// `c(z) = |M z|^p` with `p >= 1`; `map = None` means `M = I` in any dimension.
    PowerNorm { p: f64, map: Option<DMatrix<f64>> },
}

impl TransportationCost {
    /// Plain squared Euclidean cost on `R^d`.
    pub fn squared_euclidean(d: usize) -> Self {
        Self::SqEuclidComposed(DMatrix::identity(d, d))
    }

    /// `c(z) = |z|^p`.
    pub fn power_norm(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "power-norm exponent {p} must be >= 1"
            )));
        }
        Ok(Self::PowerNorm { p, map: None })
    }

    /// The matrix applied before the norm, if any.
    pub fn map(&self) -> Option<&DMatrix<f64>> {
        match self {
            Self::SqEuclidComposed(m) => Some(m),
            Self::PowerNorm { map, .. } => map.as_ref(),
        }
    }

    /// Exponent of the norm (2 for the composed squared Euclidean kind).
    pub fn exponent(&self) -> f64 {
        match self {
            Self::SqEuclidComposed(_) => 2.0,
            Self::PowerNorm { p, .. } => *p,
        }
    }

    /// Input dimension, when the cost fixes one.
    pub fn dim(&self) -> Option<usize> {
        self.map().map(|m| m.ncols())
    }

    /// True for `|z|^2` with `M` exactly the identity.
    pub fn is_plain_squared_euclidean(&self) -> bool {
        match self {
            Self::SqEuclidComposed(m) => {
                m.is_square() && *m == DMatrix::identity(m.nrows(), m.ncols())
            }
            Self::PowerNorm { p, map } => *p == 2.0 && map.is_none(),
        }
    }

    pub fn evaluate(&self, z: &DVector<f64>) -> Result<f64> {
        if let Some(d) = self.dim() {
            check_dim(d, z.len())?;
        }
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: &DVector<f64>) -> f64 {
        match self {
            Self::SqEuclidComposed(m) => (m * z).norm_squared(),
            Self::PowerNorm { p, map } => {
                let n = match map {
                    Some(m) => (m * z).norm(),
                    None => z.norm(),
                };
                if *p == 1.0 {
                    n
                } else {
                    n.powf(*p)
                }
            }
        }
    }

    /// `c o A`, i.e. the cost `z -> c(A z)`.
    pub fn compose(&self, a: &DMatrix<f64>) -> Result<Self> {
        if let Some(d) = self.dim() {
            check_dim(d, a.nrows())?;
        }
        Ok(match self {
            Self::SqEuclidComposed(m) => Self::SqEuclidComposed(m * a),
            Self::PowerNorm { p, map } => Self::PowerNorm {
                p: *p,
                map: Some(match map {
                    Some(m) => m * a,
                    None => a.clone(),
                }),
            },
        })
    }

    /// If the map is `s I` (or absent), returns `|s|^p`, the factor that turns
    /// `c` into the plain power norm: `c(z) = |s|^p |z|^p`.
    pub fn isotropic_scale(&self) -> Option<f64> {
        let Some(m) = self.map() else {
            return Some(1.0);
        };
        if !m.is_square() {
            return None;
        }
        let s = m[(0, 0)];
        let iso = DMatrix::identity(m.nrows(), m.ncols()) * s;
        if (m - iso).amax() <= 1e-15 * s.abs().max(1.0) {
            Some(s.abs().powf(self.exponent()))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn squared_norm_of_three_four() {
        let c = TransportationCost::squared_euclidean(2);
        assert_eq!(c.evaluate(&dvector![3.0, 4.0]).unwrap(), 25.0);
        assert!(c.evaluate(&dvector![1.0]).is_err());
    }

    #[test]
    fn absolute_value_cost() {
        let c = TransportationCost::power_norm(1.0).unwrap();
        assert_eq!(c.evaluate(&dvector![-2.0]).unwrap(), 2.0);
        assert!(TransportationCost::power_norm(0.5).is_err());
    }

    #[test]
    fn composition_multiplies_maps() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let c = TransportationCost::SqEuclidComposed(m.clone())
            .compose(&a)
            .unwrap();
        let z = dvector![0.3, -1.2];
        assert!((c.evaluate(&z).unwrap() - (&m * &a * &z).norm_squared()).abs() < 1e-14);
    }

    #[test]
    fn nonnegative_and_zero_at_origin() {
        let c = TransportationCost::SqEuclidComposed(DMatrix::from_row_slice(1, 2, &[1.0, -1.0]));
        assert_eq!(c.evaluate(&DVector::zeros(2)).unwrap(), 0.0);
        assert!(c.evaluate(&dvector![1.0, 1.0]).unwrap() >= 0.0);
    }

    #[test]
    fn isotropic_scale_detection() {
        let half = TransportationCost::power_norm(1.0)
            .unwrap()
            .compose(&DMatrix::from_element(1, 1, 0.5))
            .unwrap();
        assert_eq!(half.isotropic_scale(), Some(0.5));
        let sq = TransportationCost::SqEuclidComposed(DMatrix::identity(2, 2) * 0.5);
        assert_eq!(sq.isotropic_scale(), Some(0.25));
        let aniso =
            TransportationCost::SqEuclidComposed(DMatrix::from_diagonal(&dvector![1.0, 2.0]));
        assert_eq!(aniso.isotropic_scale(), None);
    }
}
