use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};

/// `{x : max_j a_j' x + b_j <= 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    directions: Vec<DVector<f64>>,
    offsets: Vec<f64>,
}

impl Polytope {
    pub fn new(directions: Vec<DVector<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidArgument(
                "a polytope needs at least one halfspace".into(),
            ));
        }
        check_dim(directions.len(), offsets.len())?;
        let d = directions[0].len();
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        for a in &directions {
            check_dim(d, a.len())?;
        }
        if directions
            .iter()
            .flat_map(|a| a.iter())
            .chain(offsets.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::NonFinite("polytope data"));
        }
        Ok(Self {
            directions,
            offsets,
        })
    }

    /// `[lo, hi]` as `2d` halfspaces ordered `+e_1, -e_1, +e_2, ...`.
    pub fn axis_box(lo: &DVector<f64>, hi: &DVector<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        let d = lo.len();
        if lo.iter().zip(hi.iter()).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidArgument(
                "box bounds must satisfy lo <= hi".into(),
            ));
        }
        let mut dirs = Vec::with_capacity(2 * d);
        let mut offs = Vec::with_capacity(2 * d);
        for k in 0..d {
            let mut e = DVector::zeros(d);
            e[k] = 1.0;
            dirs.push(e.clone());
            offs.push(-hi[k]);
            dirs.push(-e);
            offs.push(lo[k]);
        }
        Self::new(dirs, offs)
    }

    /// Same halfspace normals with new offsets.
    pub fn with_offsets(&self, offsets: Vec<f64>) -> Result<Self> {
        Self::new(self.directions.clone(), offsets)
    }

    pub fn directions(&self) -> &[DVector<f64>] {
        &self.directions
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn dim(&self) -> usize {
        self.directions[0].len()
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// `max_j a_j' x + b_j`.
    pub fn loss(&self, x: &DVector<f64>) -> f64 {
        self.directions
            .iter()
            .zip(&self.offsets)
            .map(|(a, b)| a.dot(x) + b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        self.loss(x) <= 0.0
    }
}

/// All nonzero vectors of `{-1, 0, 1}^d` in lexicographic order.
pub fn grid_directions(d: usize) -> Vec<DVector<f64>> {
    let total = 3usize.pow(d as u32);
    (0..total)
        .map(|mut code| {
            let mut v = DVector::zeros(d);
            for k in (0..d).rev() {
                v[k] = (code % 3) as f64 - 1.0;
                code /= 3;
            }
            v
        })
        .filter(|v| v.iter().any(|&x| x != 0.0))
        .collect()
}
