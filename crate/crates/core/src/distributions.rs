//! Finitely supported probability distributions.
//!
//! All operations are pure and order-stable: atoms keep their insertion
//! order, and merged atoms keep the position of their first occurrence.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Tolerance on the total mass of a distribution.
pub const MASS_TOL: f64 = 1e-12;

/// Atoms closer than this (Euclidean) are merged after a pushforward.
pub const MERGE_TOL: f64 = 1e-10;

/// Default cap on the number of atoms produced by [`DiscreteDistribution::product_power`].
pub const DEFAULT_PRODUCT_CAP: usize = 100_000;

/// A probability distribution supported on finitely many atoms of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    atoms: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a distribution, validating weights and dimensions.
    pub fn new(atoms: Vec<DVector<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        check_dim(atoms.len(), weights.len())?;
        let dim = atoms[0].len();
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        for atom in &atoms {
            check_dim(dim, atom.len())?;
            if atom.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("atom"));
            }
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidWeights(format!(
                "weight {w} is negative or not finite"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { atoms, weights })
    }

    /// The point mass at `x`.
    pub fn dirac(x: DVector<f64>) -> Result<Self> {
        Self::new(vec![x], vec![1.0])
    }

    /// Uniform distribution over the given samples (duplicates are kept as separate atoms).
    pub fn empirical(samples: Vec<DVector<f64>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let n = samples.len();
        let mut weights = vec![1.0 / n as f64; n];
        // keep the mass exactly one for awkward n
        let drift = 1.0 - weights.iter().sum::<f64>();
        weights[0] += drift;
        Self::new(samples, weights)
    }

    pub fn atoms(&self) -> &[DVector<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// True when the distribution is a single point mass.
    pub fn is_dirac(&self) -> bool {
        self.atoms.len() == 1
    }

    /// Iterates over `(atom, weight)` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (&DVector<f64>, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// Mean of the distribution.
    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim());
        for (x, w) in self.iter() {
            m.axpy(w, x, 1.0);
        }
        m
    }

    /// Expectation of `f` under the distribution.
    pub fn expect(&self, mut f: impl FnMut(&DVector<f64>) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Image of the distribution under `x -> a x`, merging coincident images.
    pub fn pushforward(&self, a: &DMatrix<f64>) -> Result<Self> {
        check_dim(a.ncols(), self.dim())?;
        if a.nrows() == 0 {
            return Err(Error::ZeroDimension);
        }
        let images: Vec<DVector<f64>> = self.atoms.iter().map(|x| a * x).collect();
        let (atoms, weights) = merge_atoms(images, &self.weights);
        Ok(Self { atoms, weights })
    }

    /// Distribution of `x + y` for `x` drawn from `self`.
    pub fn convolve_delta(&self, y: &DVector<f64>) -> Result<Self> {
        check_dim(self.dim(), y.len())?;
        Ok(Self {
            atoms: self.atoms.iter().map(|x| x + y).collect(),
            weights: self.weights.clone(),
        })
    }

    /// The `t`-fold product distribution with stacked atoms `[x_{i1}; ...; x_{it}]`,
    /// the first index varying slowest.
    pub fn product_power(&self, t: usize, cap: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidHorizon);
        }
        let n = self.len();
        let total = (n as u128).checked_pow(t as u32).unwrap_or(u128::MAX);
        if total > cap as u128 {
            return Err(Error::ProductCapExceeded { atoms: total, cap });
        }
        let d = self.dim();
        let total = total as usize;
        let mut atoms = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut index = vec![0usize; t];
        for _ in 0..total {
            let mut atom = DVector::zeros(t * d);
            let mut w = 1.0;
            for (block, &i) in index.iter().enumerate() {
                atom.rows_mut(block * d, d).copy_from(&self.atoms[i]);
                w *= self.weights[i];
            }
            atoms.push(atom);
            weights.push(w);
            // odometer, last index fastest
            for k in (0..t).rev() {
                index[k] += 1;
                if index[k] < n {
                    break;
                }
                index[k] = 0;
            }
        }
        Ok(Self { atoms, weights })
    }
}

/// Greedy merge in insertion order: each atom joins the earliest
/// representative within [`MERGE_TOL`].
fn merge_atoms(images: Vec<DVector<f64>>, weights: &[f64]) -> (Vec<DVector<f64>>, Vec<f64>) {
    let mut atoms: Vec<DVector<f64>> = Vec::with_capacity(images.len());
    let mut merged: Vec<f64> = Vec::with_capacity(images.len());
    // representatives sorted by first coordinate, for a windowed search
    let mut by_key: Vec<(f64, usize)> = Vec::new();
    for (x, &w) in images.into_iter().zip(weights) {
        let key = x[0];
        let lo = by_key.partition_point(|(k, _)| *k < key - MERGE_TOL);
        let mut hit: Option<usize> = None;
        for &(k, rep) in &by_key[lo..] {
            if k > key + MERGE_TOL {
                break;
            }
            if (&atoms[rep] - &x).norm() <= MERGE_TOL && hit.is_none_or(|h| rep < h) {
                hit = Some(rep);
            }
        }
        match hit {
            Some(rep) => merged[rep] += w,
            None => {
                let pos = by_key.partition_point(|(k, _)| k.total_cmp(&key).is_le());
                by_key.insert(pos, (key, atoms.len()));
                atoms.push(x);
                merged.push(w);
            }
        }
    }
    (atoms, merged)
}

/// `N` stacked noise trajectories `[w_{t-1}; ...; w_0]` of horizon `t` and noise dimension `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    trajectories: Vec<DVector<f64>>,
    horizon: usize,
    noise_dim: usize,
}

impl TrajectoryBatch {
    pub fn new(trajectories: Vec<DVector<f64>>, horizon: usize, noise_dim: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidHorizon);
        }
        if noise_dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if trajectories.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        for w in &trajectories {
            check_dim(horizon * noise_dim, w.len())?;
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("trajectory"));
            }
        }
        Ok(Self {
            trajectories,
            horizon,
            noise_dim,
        })
    }

    /// Builds a batch from per-step noise sequences given in time order `w_0, ..., w_{t-1}`.
    pub fn from_time_ordered(sequences: &[Vec<DVector<f64>>]) -> Result<Self> {
        let first = sequences.first().ok_or(Error::EmptyDistribution)?;
        let horizon = first.len();
        if horizon == 0 {
            return Err(Error::InvalidHorizon);
        }
        let r = first[0].len();
        let mut trajectories = Vec::with_capacity(sequences.len());
        for seq in sequences {
            check_dim(horizon, seq.len())?;
            let mut stacked = DVector::zeros(horizon * r);
            for (k, w) in seq.iter().enumerate() {
                check_dim(r, w.len())?;
                // block 0 holds the latest step
                stacked.rows_mut((horizon - 1 - k) * r, r).copy_from(w);
            }
            trajectories.push(stacked);
        }
        Self::new(trajectories, horizon, r)
    }

    pub fn trajectories(&self) -> &[DVector<f64>] {
        &self.trajectories
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Noise `w_k` (time index `k`) of trajectory `i`.
    pub fn step(&self, i: usize, k: usize) -> DVector<f64> {
        let r = self.noise_dim;
        self.trajectories[i]
            .rows((self.horizon - 1 - k) * r, r)
            .into_owned()
    }

    /// Empirical distribution over the stacked trajectories.
    pub fn to_empirical(&self) -> Result<DiscreteDistribution> {
        DiscreteDistribution::empirical(self.trajectories.clone())
    }
}
