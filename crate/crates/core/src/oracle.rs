//! Brute-force verifiers for the numerical core.
//!
//! Each check here deliberately avoids the code path it certifies: transport
//! values are recomputed by enumerating permutations, pushforward membership
//! by constructing explicit preimages, the worst-case CVaR by a zooming grid
//! over `(tau, lambda)`, and lifted dynamics by step-by-step recursion.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distributions::DiscreteDistribution;
use crate::drcvar::{
    build_gamma, cvar, solve_outer, worst_case_cvar, Objective, Polytope, SolveStatus,
};
use crate::error::{check_dim, Error, Result};
use crate::lti::{lift, LtiSystem};
use crate::propagation::{propagate_linear, pseudoinverse};
use crate::transport::{ot_discrepancy, ot_discrepancy_lp, AmbiguitySet, TransportationCost};

/// Largest atom count accepted by [`permutation_ot`].
pub const PERMUTATION_LIMIT: usize = 8;

fn uniform_atoms(d: &DiscreteDistribution) -> Result<&[DVector<f64>]> {
    let n = d.len() as f64;
    if d.weights().iter().any(|w| (w * n - 1.0).abs() > 1e-12) {
        return Err(Error::InvalidArgument(
            "permutation oracle needs uniform weights".into(),
        ));
    }
    Ok(d.atoms())
}

/// Minimum mean pairing cost over all `n!` matchings; returns the matching too
/// (`perm[i]` is the atom of `q` paired with atom `i` of `p`).
pub fn permutation_ot_with_matching(
    c: &TransportationCost,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
) -> Result<(f64, Vec<usize>)> {
    let (xs, ys) = (uniform_atoms(p)?, uniform_atoms(q)?);
    check_dim(xs.len(), ys.len())?;
    let n = xs.len();
    if n > PERMUTATION_LIMIT {
        return Err(Error::SizeLimit(format!(
            "{n} atoms exceed the permutation limit {PERMUTATION_LIMIT}"
        )));
    }
    let mut cost = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            cost[i][j] = c.evaluate(&(&xs[i] - &ys[j]))?;
        }
    }
    // Heap's algorithm
    let mut perm: Vec<usize> = (0..n).collect();
    let total = |perm: &[usize]| -> f64 { (0..n).map(|i| cost[i][perm[i]]).sum() };
    let mut best = (total(&perm), perm.clone());
    let mut stack = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            let v = total(&perm);
            if v < best.0 {
                best = (v, perm.clone());
            }
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    Ok((best.0 / n as f64, best.1))
}

/// OT discrepancy between uniform distributions with the same atom count, by
/// exhaustive search over matchings.
pub fn permutation_ot(
    c: &TransportationCost,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
) -> Result<f64> {
    Ok(permutation_ot_with_matching(c, p, q)?.0)
}

/// Residuals of the four Moore-Penrose conditions, each as a max-abs entry.
pub fn penrose_residuals(a: &DMatrix<f64>, x: &DMatrix<f64>) -> [f64; 4] {
    let axa = a * x * a;
    let xax = x * a * x;
    let ax = a * x;
    let xa = x * a;
    [
        (axa - a).amax(),
        (xax - x).amax(),
        (&ax - ax.transpose()).amax(),
        (&xa - xa.transpose()).amax(),
    ]
}

/// Outcome of [`propagation_trial`].
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationReport {
    pub trials: usize,
    pub full_row_rank: bool,
    /// Max `|library distance - preimage distance|` over output-space trials
    /// (zero when `A` is not full row-rank and the trials are skipped).
    pub max_equality_gap: f64,
    /// Max amount by which `T_{c o A+}(A#P, A#Q)` exceeded `T_c(P, Q)`.
    pub max_inclusion_violation: f64,
    /// Trials where membership in the propagated ball and in the image of the
    /// original ball disagreed (away from the boundary).
    pub membership_disagreements: usize,
}

fn jitter<R: Rng + ?Sized>(rng: &mut R, x: &DVector<f64>, scale: f64) -> DVector<f64> {
    x + DVector::from_fn(x.len(), |_, _| scale * rng.random_range(-1.0..1.0))
}

/// Randomized check that pushing the ball `B_eps^c(P)` through `A` matches the
/// ball `B_eps^{c o A+}(A#P)`.
///
/// * inclusion: for random `Q` near `P`, `T_{c o A+}(A#P, A#Q) <= T_c(P, Q)`;
/// * equality (full row-rank `A` only): for random `Q` near `A#P`, the
///   explicit preimage `x_i + A+(y_j - A x_i)` along the optimal matching has
///   `T_c(P, preimage)` equal to the library's propagated distance.
///
/// `p` must be uniform with at most [`PERMUTATION_LIMIT`] atoms.
pub fn propagation_trial<R: Rng + ?Sized>(
    p: &DiscreteDistribution,
    a: &DMatrix<f64>,
    c: &TransportationCost,
    eps: f64,
    trials: usize,
    rng: &mut R,
) -> Result<PropagationReport> {
    check_dim(p.dim(), a.ncols())?;
    let pinv = pseudoinverse(a)?;
    let full_row_rank = pinv.is_full_row_rank();
    let ball = AmbiguitySet::new(p.clone(), c.clone(), eps)?;
    let prop = propagate_linear(&ball, a)?;
    let composed = c.compose(pinv.matrix())?;
    let images: Vec<DVector<f64>> = p.atoms().iter().map(|x| a * x).collect();
    let image_list = DiscreteDistribution::empirical(images.clone())?;
    let scale = eps.max(1e-3).sqrt();

    let mut report = PropagationReport {
        trials,
        full_row_rank,
        max_equality_gap: 0.0,
        max_inclusion_violation: 0.0,
        membership_disagreements: 0,
    };
    for _ in 0..trials {
        // inclusion
        let q_in = DiscreteDistribution::empirical(
            p.atoms()
                .iter()
                .map(|x| jitter(rng, x, 2.0 * scale))
                .collect(),
        )?;
        let rhs = permutation_ot(c, p, &q_in)?;
        let aq = DiscreteDistribution::empirical(q_in.atoms().iter().map(|x| a * x).collect())?;
        let lhs = prop.distance_to(&aq)?;
        report.max_inclusion_violation = report.max_inclusion_violation.max(lhs - rhs);

        if !full_row_rank {
            continue;
        }
        // equality via explicit preimage
        let q_out = DiscreteDistribution::empirical(
            images.iter().map(|y| jitter(rng, y, 2.0 * scale)).collect(),
        )?;
        let (oracle_prop, matching) = permutation_ot_with_matching(&composed, &image_list, &q_out)?;
        let pre: Vec<DVector<f64>> = p
            .atoms()
            .iter()
            .zip(&matching)
            .map(|(x, &j)| x + pinv.matrix() * (&q_out.atoms()[j] - a * x))
            .collect();
        let pre = DiscreteDistribution::empirical(pre)?;
        // the preimage must map onto Q exactly
        for (x, &j) in pre.atoms().iter().zip(&matching) {
            if (a * x - &q_out.atoms()[j]).amax() > 1e-9 * (1.0 + q_out.atoms()[j].amax()) {
                return Err(Error::InvalidArgument(
                    "preimage does not map onto Q".into(),
                ));
            }
        }
        let pre_cost = permutation_ot(c, p, &pre)?;
        let lib = prop.distance_to(&q_out)?;
        report.max_equality_gap = report
            .max_equality_gap
            .max((lib - pre_cost).abs())
            .max((lib - oracle_prop).abs());
        let near_boundary = (lib - eps).abs() <= 1e-9 || (pre_cost - eps).abs() <= 1e-9;
        if !near_boundary && ((lib <= eps) != (pre_cost <= eps)) {
            report.membership_disagreements += 1;
        }
    }
    Ok(report)
}

/// A distribution exhibiting a failure of a naive propagation rule.
#[derive(Debug, Clone)]
pub struct Witness {
    pub q: DiscreteDistribution,
    pub in_naive: bool,
    pub in_lipschitz: bool,
    /// Whether `q` belongs to `A # B_eps^c(P)`, decided by an explicit
    /// preimage or by the range of `A`.
    pub in_true_image: bool,
}

/// Naive rules compared against exact propagation.
#[derive(Debug, Clone)]
pub struct FoilReport {
    /// Radius of `B^c(A#P)` under the center-only rule (`eps`).
    pub naive_radius: f64,
    /// Radius `L^p eps` of the Lipschitz rule, `L` the spectral norm of `A`.
    pub lipschitz_radius: f64,
    /// In the naive ball but not in the true image.
    pub overestimate: Option<Witness>,
    /// In the true image but not in the naive ball.
    pub underestimate: Option<Witness>,
    /// In the Lipschitz ball but not in the true image.
    pub lipschitz_conservative: Option<Witness>,
}

/// Builds witnesses against the center-only rule `B_eps^c(A#P)` and the
/// Lipschitz rule `B_{L^p eps}^c(A#P)` for a power-norm cost `|.|^p`.
pub fn naive_foil(
    p: &DiscreteDistribution,
    a: &DMatrix<f64>,
    c: &TransportationCost,
    eps: f64,
) -> Result<FoilReport> {
    let expo = c.exponent();
    if c.map()
        .is_some_and(|m| !m.is_square() || *m != DMatrix::identity(m.nrows(), m.ncols()))
    {
        return Err(Error::WrongCostKind(
            "foils need an unmapped power-norm cost",
        ));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(
            "foils need a positive radius".into(),
        ));
    }
    check_dim(p.dim(), a.ncols())?;
    let m = a.nrows();
    let out_cost = match c {
        TransportationCost::SqEuclidComposed(_) => TransportationCost::squared_euclidean(m),
        TransportationCost::PowerNorm { p, .. } => {
            TransportationCost::PowerNorm { p: *p, map: None }
        }
    };
    let pinv = pseudoinverse(a)?;
    let sv = pinv.singular_values();
    let lip = if sv.is_empty() { 0.0 } else { sv[0] };
    let lipschitz_radius = lip.powf(expo) * eps;
    let ap = p.pushforward(a)?;
    let naive = AmbiguitySet::new(ap.clone(), out_cost.clone(), eps)?;
    let lipschitz = AmbiguitySet::new(ap.clone(), out_cost.clone(), lipschitz_radius)?;
    let prop = propagate_linear(&AmbiguitySet::new(p.clone(), c.clone(), eps)?, a)?;
    let tol = 1e-9;
    let shift = |dir: &DVector<f64>, amount: f64| -> Result<DiscreteDistribution> {
        // scale so that c(s * dir) = amount
        let s = (amount / out_cost.evaluate(dir)?).powf(1.0 / expo);
        ap.convolve_delta(&(dir * s))
    };
    let in_prop = |q: &DiscreteDistribution| -> Result<bool> {
        Ok(prop.support_in_range(q)? && prop.contains(q, tol)?)
    };

    let rank = pinv.rank();
    let u = pinv.u();
    let off_range = if rank < m {
        // a unit vector orthogonal to the range of A
        let proj = pinv.range_projector();
        (0..m)
            .map(|k| {
                let mut e = DVector::zeros(m);
                e[k] = 1.0;
                &e - &proj * &e
            })
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .map(|v| v.normalize())
    } else {
        None
    };

    let overestimate = match &off_range {
        Some(dir) => {
            let q = shift(dir, eps / 2.0)?;
            Some(Witness {
                in_naive: naive.contains(&q, tol)?,
                in_lipschitz: lipschitz.contains(&q, tol)?,
                in_true_image: prop.support_in_range(&q)?,
                q,
            })
        }
        None => None,
    };

    let underestimate = if rank > 0 && sv[0] > 1.0 {
        let v = pinv.v().column(0).clone_owned();
        let s = (eps / c.evaluate(&v)?).powf(1.0 / expo);
        let pre = p.convolve_delta(&(&v * s))?;
        let q = pre.pushforward(a)?;
        let pre_cost = ot_discrepancy_lp(c, p, &pre)?;
        Some(Witness {
            in_naive: naive.contains(&q, tol)?,
            in_lipschitz: lipschitz.contains(&q, tol)?,
            in_true_image: pre_cost <= eps + tol,
            q,
        })
    } else {
        None
    };

    let lipschitz_conservative = match (&off_range, rank) {
        (_, 0) => off_range
            .as_ref()
            .map(|dir| -> Result<Witness> {
                let q = shift(dir, eps / 2.0)?;
                Ok(Witness {
                    in_naive: naive.contains(&q, tol)?,
                    in_lipschitz: lipschitz.contains(&q, tol)?,
                    in_true_image: false,
                    q,
                })
            })
            .transpose()?,
        (Some(dir), _) => {
            let q = shift(dir, lipschitz_radius / 2.0)?;
            Some(Witness {
                in_naive: naive.contains(&q, tol)?,
                in_lipschitz: lipschitz.contains(&q, tol)?,
                in_true_image: false,
                q,
            })
        }
        (None, r) => {
            let dir = u.column(r - 1).clone_owned();
            let q = shift(&dir, lipschitz_radius / 2.0)?;
            let w = Witness {
                in_naive: naive.contains(&q, tol)?,
                in_lipschitz: lipschitz.contains(&q, tol)?,
                in_true_image: in_prop(&q)?,
                q,
            };
            (w.in_lipschitz && !w.in_true_image).then_some(w)
        }
    };

    Ok(FoilReport {
        naive_radius: eps,
        lipschitz_radius,
        overestimate,
        underestimate,
        lipschitz_conservative,
    })
}

/// `(OT(P^t, Q^t), t OT(P, Q))` under the plain squared Euclidean cost, with
/// the products enumerated.
pub fn product_lift_check(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    t: usize,
    cap: usize,
) -> Result<(f64, f64)> {
    let d = p.dim();
    let base = ot_discrepancy_lp(&TransportationCost::squared_euclidean(d), p, q)?;
    let pt = p.product_power(t, cap)?;
    let qt = q.product_power(t, cap)?;
    let lifted = ot_discrepancy_lp(&TransportationCost::squared_euclidean(d * t), &pt, &qt)?;
    Ok((lifted, t as f64 * base))
}

/// CVaR by minimizing `tau + E[(f - tau)+] / gamma` over every breakpoint and
/// a uniform grid between the extreme values.
pub fn cvar_tau_grid(values: &[f64], weights: &[f64], gamma: f64, resolution: usize) -> f64 {
    let phi = |tau: f64| {
        tau + values
            .iter()
            .zip(weights)
            .map(|(v, w)| w * (v - tau).max(0.0))
            .sum::<f64>()
            / gamma
    };
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid = (0..=resolution).map(|k| lo + (hi - lo) * k as f64 / resolution.max(1) as f64);
    values
        .iter()
        .copied()
        .chain(grid)
        .map(phi)
        .fold(f64::INFINITY, f64::min)
}

/// Dual objective `lambda eps_t + sum_i w_i max_j [...]` minimized over a
/// log-`lambda` by `tau` grid, zooming into the best cell several times.
/// Returns an upper bound on the worst-case CVaR.
pub fn cvar_grid(
    state_ball: &AmbiguitySet,
    poly: &Polytope,
    gamma: f64,
    resolution: usize,
) -> Result<f64> {
    if resolution < 50 {
        return Err(Error::InvalidArgument(
            "grid resolution must be at least 50".into(),
        ));
    }
    let TransportationCost::SqEuclidComposed(m) = state_ball.cost() else {
        return Err(Error::WrongCostKind(
            "grid oracle needs a composed squared Euclidean cost",
        ));
    };
    let qc = (m.transpose() * m)
        .try_inverse()
        .ok_or(Error::RankDeficient {
            rank: 0,
            rows: m.ncols(),
        })?;
    let atoms = state_ball.center().atoms();
    let weights = state_ball.center().weights();
    let eps_t = state_ball.radius();
    // per face: (a_j' x_i + b_j) and a_j' Qc a_j
    let faces: Vec<(Vec<f64>, f64)> = poly
        .directions()
        .iter()
        .zip(poly.offsets())
        .map(|(a, b)| {
            (
                atoms.iter().map(|x| a.dot(x) + b).collect(),
                (a.transpose() * &qc * a)[(0, 0)],
            )
        })
        .collect();
    let objective = |tau: f64, lambda: f64| -> f64 {
        let mut total = lambda * eps_t;
        for (i, w) in weights.iter().enumerate() {
            let mut worst = tau; // the extra row: alpha = 0, beta = tau
            for (lin, qa) in &faces {
                let alpha_x_beta = (lin[i] + gamma * tau - tau) / gamma;
                worst = worst.max(alpha_x_beta + qa / (gamma * gamma) / (4.0 * lambda));
            }
            total += w * worst;
        }
        total
    };
    let tau_range = |lambda: f64| -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (lin, qa) in &faces {
            for v in lin {
                let l = v + qa / gamma / (4.0 * lambda);
                lo = lo.min(l);
                hi = hi.max(l);
            }
        }
        (lo.min(hi - 1e-12), hi)
    };
    let (mut l0, mut l1) = (-6.0_f64, 6.0_f64);
    let (mut u0, mut u1) = (0.0_f64, 1.0_f64);
    let mut best = f64::INFINITY;
    for _ in 0..12 {
        let mut arg = (0, 0);
        let mut round_best = f64::INFINITY;
        for a in 0..resolution {
            let ll = l0 + (l1 - l0) * a as f64 / (resolution - 1) as f64;
            let lambda = 10f64.powf(ll);
            let (lo, hi) = tau_range(lambda);
            for b in 0..resolution {
                let u = u0 + (u1 - u0) * b as f64 / (resolution - 1) as f64;
                let v = objective(lo + u * (hi - lo), lambda);
                if v < round_best {
                    round_best = v;
                    arg = (a, b);
                }
            }
        }
        best = best.min(round_best);
        let (dl, du) = (
            (l1 - l0) / (resolution - 1) as f64,
            (u1 - u0) / (resolution - 1) as f64,
        );
        let (cl, cu) = (l0 + dl * arg.0 as f64, u0 + du * arg.1 as f64);
        l0 = (cl - 2.0 * dl).max(-6.0);
        l1 = (cl + 2.0 * dl).min(6.0);
        u0 = (cu - 2.0 * du).max(0.0);
        u1 = (cu + 2.0 * du).min(1.0);
    }
    Ok(best)
}

/// `x_t` by iterating `x+ = (A + BK) x + B v_k + D w_k`; `v`, `w` latest-first.
pub fn step_simulation(
    sys: &LtiSystem,
    t: usize,
    v: &DVector<f64>,
    w: &DVector<f64>,
) -> DVector<f64> {
    let (m, r) = (sys.input_dim(), sys.noise_dim());
    let mut x = sys.x0().clone();
    for k in 0..t {
        let u = sys.k() * &x + v.rows((t - 1 - k) * m, m);
        x = sys.a() * &x + sys.b() * u + sys.d() * w.rows((t - 1 - k) * r, r);
    }
    x
}

/// Uniform distribution on `n` atoms with entries uniform in `[-1, 1]`.
pub fn random_uniform<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> DiscreteDistribution {
    let atoms = (0..n)
        .map(|_| DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    DiscreteDistribution::empirical(atoms).expect("n >= 1 and d >= 1")
}

/// Random `rows x cols` matrix of rank `min(rank, rows, cols)`.
pub fn random_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    rank: usize,
) -> DMatrix<f64> {
    let k = rank.min(rows).min(cols);
    let l = DMatrix::from_fn(rows, k, |_, _| rng.random_range(-1.0..1.0));
    let r = DMatrix::from_fn(k, cols, |_, _| rng.random_range(-1.0..1.0));
    l * r
}

/// Per-trial generator: stream `trial` of the suite seed.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Random planar-style instance for the constraint-system checks: `N <= 5`
/// atoms in the plane, `J <= 4` faces, random `D`.
pub fn random_gamma_instance<R: Rng + ?Sized>(rng: &mut R) -> (AmbiguitySet, Polytope, f64) {
    let n = rng.random_range(1..=5);
    let j = rng.random_range(1..=4);
    let atoms = (0..n)
        .map(|_| DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let d = loop {
        let d = DMatrix::from_fn(2, 4, |_, _| rng.random_range(-0.5..0.5));
        if d.clone().svd(false, false).singular_values.min() > 0.05 {
            break d;
        }
    };
    let pinv = pseudoinverse(&d).expect("finite").into_matrix();
    let eps = if rng.random_bool(0.2) {
        0.0
    } else {
        rng.random_range(0.0..0.3)
    };
    let ball = AmbiguitySet::new(
        DiscreteDistribution::empirical(atoms).expect("non-empty"),
        TransportationCost::SqEuclidComposed(pinv),
        eps,
    )
    .expect("valid ball");
    let dirs: Vec<DVector<f64>> = (0..j)
        .map(|_| {
            let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            DVector::from_vec(vec![th.cos(), th.sin()])
        })
        .collect();
    let offs = (0..j).map(|_| rng.random_range(-1.5..0.5)).collect();
    let gamma = rng.random_range(0.05..0.6);
    (
        ball,
        Polytope::new(dirs, offs).expect("valid polytope"),
        gamma,
    )
}

/// One named check of the suite.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub trials: usize,
    /// Worst observed error (or violation) across trials.
    pub worst: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

/// Transport LP vs. exhaustive matching on random uniform instances.
pub fn check_ot(seed: u64, trials: usize) -> Result<Check> {
    let mut worst = 0.0_f64;
    for k in 0..trials {
        let mut rng = trial_rng(seed, k as u64);
        let n = rng.random_range(1..=6);
        let d = rng.random_range(1..=3);
        let (p, q) = (
            random_uniform(&mut rng, n, d),
            random_uniform(&mut rng, n, d),
        );
        let c = if rng.random_bool(0.5) {
            TransportationCost::squared_euclidean(d)
        } else {
            TransportationCost::power_norm(rng.random_range(1.0..3.0))?
        };
        worst = worst.max((ot_discrepancy(&c, &p, &q)?.0 - permutation_ot(&c, &p, &q)?).abs());
    }
    Ok(Check {
        name: "ot-vs-permutation",
        trials,
        worst,
        tolerance: 1e-9,
    })
}

/// Dirac closed form vs. the transport LP.
pub fn check_dirac(seed: u64, trials: usize) -> Result<Check> {
    let mut worst = 0.0_f64;
    for k in 0..trials {
        let mut rng = trial_rng(seed ^ 0xD1AC, k as u64);
        let d = rng.random_range(1..=3);
        let n = rng.random_range(1..=7);
        let x =
            DiscreteDistribution::dirac(DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)))?;
        let q = random_uniform(&mut rng, n, d);
        let c = TransportationCost::squared_euclidean(d);
        worst = worst.max((ot_discrepancy(&c, &x, &q)?.0 - ot_discrepancy_lp(&c, &x, &q)?).abs());
        worst = worst.max((ot_discrepancy(&c, &q, &x)?.0 - ot_discrepancy_lp(&c, &q, &x)?).abs());
    }
    Ok(Check {
        name: "dirac-closed-form",
        trials,
        worst,
        tolerance: 1e-9,
    })
}

/// Penrose conditions on random, possibly rank-deficient matrices, and the
/// full-row-rank formula `A' (A A')^{-1}`.
pub fn check_pinv(seed: u64, trials: usize) -> Result<Check> {
    let mut worst = 0.0_f64;
    for k in 0..trials {
        let mut rng = trial_rng(seed ^ 0x9E11, k as u64);
        let rows = rng.random_range(1..=5);
        let cols = rng.random_range(1..=5);
        let rank = rng.random_range(0..=rows.min(cols));
        let a = random_matrix(&mut rng, rows, cols, rank);
        let pinv = pseudoinverse(&a)?;
        for r in penrose_residuals(&a, pinv.matrix()) {
            worst = worst.max(r);
        }
        if rank == rows {
            if let Some(inv) = (&a * a.transpose()).try_inverse() {
                worst = worst.max((a.transpose() * inv - pinv.matrix()).amax());
            }
        }
    }
    Ok(Check {
        name: "pseudoinverse",
        trials,
        worst,
        tolerance: 1e-9,
    })
}

/// Propagation trials: equality for invertible maps, inclusion
/// for arbitrary ones. Returns `(equality, inclusion)` checks.
pub fn check_propagation(seed: u64, trials: usize) -> Result<(Check, Check)> {
    let mut eq_worst = 0.0_f64;
    let mut inc_worst = 0.0_f64;
    for k in 0..trials {
        let mut rng = trial_rng(seed ^ 0x7E01, k as u64);
        let d = rng.random_range(1..=3);
        let n = rng.random_range(1..=5);
        let p = random_uniform(&mut rng, n, d);
        let c = TransportationCost::squared_euclidean(d);
        let eps = rng.random_range(0.01..0.5);
        let a = loop {
            let a = random_matrix(&mut rng, d, d, d);
            if a.clone().svd(false, false).singular_values.min() > 0.1 {
                break a;
            }
        };
        let rep = propagation_trial(&p, &a, &c, eps, 1, &mut rng)?;
        eq_worst = eq_worst.max(rep.max_equality_gap);
        if rep.membership_disagreements > 0 {
            eq_worst = f64::INFINITY;
        }
        let rows = rng.random_range(1..=3);
        let rank = rng.random_range(0..=rows.min(d));
        let b = random_matrix(&mut rng, rows, d, rank);
        let rep = propagation_trial(&p, &b, &c, eps, 1, &mut rng)?;
        inc_worst = inc_worst.max(rep.max_inclusion_violation);
    }
    Ok((
        Check {
            name: "propagation-equality",
            trials,
            worst: eq_worst,
            tolerance: 1e-6,
        },
        Check {
            name: "propagation-inclusion",
            trials,
            worst: inc_worst,
            tolerance: 1e-9,
        },
    ))
}

/// `OT(P^2, Q^2) <= 2 OT(P, Q)` on enumerated products; reports the max excess.
pub fn check_product_lift(seed: u64, trials: usize) -> Result<Check> {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..trials {
        let mut rng = trial_rng(seed ^ 0x1E2A, k as u64);
        let d = rng.random_range(1..=2);
        let (np, nq) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let (p, q) = (
            random_uniform(&mut rng, np, d),
            random_uniform(&mut rng, nq, d),
        );
        let (lifted, bound) = product_lift_check(&p, &q, 2, 1000)?;
        worst = worst.max(lifted - bound);
    }
    Ok(Check {
        name: "product-lift",
        trials,
        worst: worst.max(0.0),
        tolerance: 1e-9,
    })
}

/// Lifted operators vs. step-by-step simulation on random systems.
pub fn check_lift(seed: u64, trials: usize) -> Result<Check> {
    let mut worst = 0.0_f64;
    for k in 0..trials {
        let mut rng = trial_rng(seed ^ 0x11F7, k as u64);
        let (d, m, r) = (
            rng.random_range(1..=3),
            rng.random_range(1..=3),
            rng.random_range(1..=3),
        );
        let t = rng.random_range(1..=12);
        let mut mat = |rows: usize, cols: usize, s: f64| {
            DMatrix::from_fn(rows, cols, |_, _| s * rng.random_range(-1.0..1.0))
        };
        let a = mat(d, d, 0.6);
        let b = mat(d, m, 1.0);
        let dd = mat(d, r, 1.0);
        let kk = mat(m, d, 0.2);
        let x0 = DVector::from_fn(d, |_, _| 1.0);
        let sys = LtiSystem::new(a, b, dd, kk, x0)?;
        let v = DVector::from_fn(t * m, |_, _| rng.random_range(-1.0..1.0));
        let w = DVector::from_fn(t * r, |_, _| rng.random_range(-1.0..1.0));
        let ops = lift(&sys, t)?;
        let lifted = ops.final_state(sys.x0(), &v, &w)?;
        let stepped = step_simulation(&sys, t, &v, &w);
        worst = worst.max((lifted - &stepped).amax() / (1.0 + stepped.amax()));
    }
    Ok(Check {
        name: "lift-vs-simulation",
        trials,
        worst,
        tolerance: 1e-9,
    })
}

/// Exact CVaR vs. the breakpoint-and-grid minimization.
pub fn check_cvar(seed: u64, trials: usize) -> Result<Check> {
    let mut worst = 0.0_f64;
    for k in 0..trials {
        let mut rng = trial_rng(seed ^ 0xC0A2, k as u64);
        let n = rng.random_range(1..=20);
        let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let gamma = rng.random_range(0.01..0.99);
        worst = worst.max((cvar(&vals, &w, gamma)? - cvar_tau_grid(&vals, &w, gamma, 200)).abs());
    }
    Ok(Check {
        name: "cvar-closed-form",
        trials,
        worst,
        tolerance: 1e-8,
    })
}

/// Constraint-system checks on random small instances:
/// `(feasibility equivalence, grid gap, zero-radius reduction)`.
pub fn check_gamma(seed: u64, trials: usize, resolution: usize) -> Result<(Check, Check, Check)> {
    let mut eq_worst = 0.0_f64;
    let mut grid_worst = 0.0_f64;
    let mut zero_worst = 0.0_f64;
    for k in 0..trials {
        let mut rng = trial_rng(seed ^ 0x6A33, k as u64);
        let (ball, poly, gamma) = random_gamma_instance(&mut rng);
        let prog = build_gamma(&ball, &poly, gamma)?;
        let wc = worst_case_cvar(&ball, &poly, gamma)?;
        // feasibility of the system (value <= 0) must agree with wc <= 0
        let rep = solve_outer(&prog, &Objective::Feasibility)?;
        if rep.status != SolveStatus::Optimal {
            eq_worst = f64::INFINITY;
        } else {
            let lp_wc = rep.objective / prog.n_samples() as f64;
            let gap = (lp_wc - wc).abs();
            let disagree = (lp_wc <= 0.0) != (wc <= 0.0) && gap > 1e-5;
            eq_worst = eq_worst.max(if disagree { f64::INFINITY } else { gap });
        }
        let grid = cvar_grid(&ball, &poly, gamma, resolution)?;
        // the grid is an upper bound; a negative gap means the search missed the infimum
        let g = grid - wc;
        grid_worst = grid_worst.max(if g < -1e-7 { f64::INFINITY } else { g });
        let zero = ball.with_radius(0.0)?;
        let losses: Vec<f64> = zero.center().atoms().iter().map(|x| poly.loss(x)).collect();
        let sample = cvar(&losses, zero.center().weights(), gamma)?;
        zero_worst = zero_worst.max((worst_case_cvar(&zero, &poly, gamma)? - sample).abs());
    }
    Ok((
        Check {
            name: "constraint-system-equivalence",
            trials,
            worst: eq_worst,
            tolerance: 1e-5,
        },
        Check {
            name: "worst-case-vs-grid",
            trials,
            worst: grid_worst,
            tolerance: 1e-3,
        },
        Check {
            name: "zero-radius-reduction",
            trials,
            worst: zero_worst,
            tolerance: 1e-7,
        },
    ))
}

/// A check that always fails: the distance between two distinct Diracs
/// compared against zero. Used to exercise failure reporting end to end.
pub fn forced_failure_check() -> Result<Check> {
    let c = TransportationCost::squared_euclidean(1);
    let p = DiscreteDistribution::dirac(DVector::from_element(1, 0.0))?;
    let q = DiscreteDistribution::dirac(DVector::from_element(1, 1.0))?;
    Ok(Check {
        name: "forced-failure",
        trials: 1,
        worst: ot_discrepancy_lp(&c, &p, &q)?,
        tolerance: 0.0,
    })
}

/// Runs every check with `trials` random instances each.
pub fn run_suite(seed: u64, trials: usize) -> Result<SuiteReport> {
    let mut checks = vec![
        check_ot(seed, trials)?,
        check_dirac(seed, trials)?,
        check_pinv(seed, trials)?,
    ];
    let (eq, inc) = check_propagation(seed, trials)?;
    checks.extend([eq, inc]);
    checks.push(check_product_lift(seed, trials)?);
    checks.push(check_lift(seed, trials)?);
    checks.push(check_cvar(seed, trials)?);
    let (g1, g2, g3) = check_gamma(seed, trials, 100)?;
    checks.extend([g1, g2, g3]);
    Ok(SuiteReport { checks })
}
