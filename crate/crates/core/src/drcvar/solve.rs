use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use super::cvar::cvar_with_threshold;
use super::gamma::{build_gamma, GammaProgram};
use super::lp::{self, LpStatus};
use super::qp::{self, AdmmSettings, QpProblem, QpStatus};
use super::Polytope;
use crate::error::{check_dim, Error, Result};
use crate::transport::AmbiguitySet;

/// Search interval for `log10(lambda)`.
pub const LOG_LAMBDA_MIN: f64 = -6.0;
pub const LOG_LAMBDA_MAX: f64 = 6.0;
const GRID_POINTS: usize = 25;
const GOLDEN_WIDTH: f64 = 1e-10;
const GOLDEN_MAX_ITER: usize = 200;

/// What to optimize over the constraint system.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// No decision block; minimizes `lambda eps_t N + sum_i s_i`, which is
    /// `N` times the worst-case CVaR when optimized over `lambda` too.
    Feasibility,
    /// Offsets `b` are decisions; maximizes `sum_j b_j` (smallest polytope).
    ReachOffsets,
    /// Atoms move as `x_i + G v`; minimizes `|v|^2`.
    InputEnergy(&'a DMatrix<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

impl SolveStatus {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::Infeasible => "infeasible",
            Self::MaxIter => "max-iter",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Primal {
    pub tau: f64,
    /// `None` when the radius or all `q_j` vanish and `lambda` drops out.
    pub lambda: Option<f64>,
    pub s: DVector<f64>,
    /// `b` or `v`; empty for the feasibility objective.
    pub decision: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaEval {
    pub lambda: f64,
    /// Objective in reporting units; `None` if infeasible or unsolved at this `lambda`.
    pub value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// `lambda eps_t N + sum s` (feasibility), `sum b` (offsets) or `|v|^2` (energy).
    pub objective: f64,
    pub primal: Option<Primal>,
    pub trace: Vec<LambdaEval>,
    pub wall_time: Duration,
}

impl SolveReport {
    fn failed(status: SolveStatus, trace: Vec<LambdaEval>, start: Instant) -> Self {
        Self {
            status,
            objective: f64::NAN,
            primal: None,
            trace,
            wall_time: start.elapsed(),
        }
    }
}

struct Inner {
    status: SolveStatus,
    value: f64,
    x: DVector<f64>,
    y: DVector<f64>,
}

/// Row data of the constraint system at a fixed `1/(4 lambda)` multiplier
/// (`None` drops the `q` terms) and budget right-hand side (`None` drops the row).
fn assemble(
    prog: &GammaProgram,
    inv4l: Option<f64>,
    budget_rhs: Option<f64>,
    objective: &Objective<'_>,
) -> Result<(DMatrix<f64>, DVector<f64>, usize)> {
    let n = prog.n_samples();
    let jp1 = prog.n_rows_per_sample();
    let faces = prog.n_faces();
    let poly = prog.polytope();
    let gamma = prog.gamma();
    let n_dec = match objective {
        Objective::Feasibility => 0,
        Objective::ReachOffsets => faces,
        Objective::InputEnergy(g) => {
            check_dim(poly.dim(), g.nrows())?;
            g.ncols()
        }
    };
    let nvar = 1 + n + n_dec;
    let rows = n * jp1 + usize::from(budget_rhs.is_some());
    let mut a = DMatrix::zeros(rows, nvar);
    let mut b = DVector::zeros(rows);
    let dir_g: Vec<DVector<f64>> = match objective {
        Objective::InputEnergy(g) => poly
            .directions()
            .iter()
            .map(|d| g.transpose() * d / gamma)
            .collect(),
        _ => Vec::new(),
    };
    for i in 0..n {
        for j in 0..jp1 {
            let r = i * jp1 + j;
            let (mut c, t) = prog.cell_affine(i, j);
            a[(r, 0)] = t;
            a[(r, 1 + i)] = -1.0;
            if j < faces {
                match objective {
                    Objective::ReachOffsets => {
                        c -= poly.offsets()[j] / gamma;
                        a[(r, 1 + n + j)] = 1.0 / gamma;
                    }
                    Objective::InputEnergy(_) => {
                        for (k, v) in dir_g[j].iter().enumerate() {
                            a[(r, 1 + n + k)] = *v;
                        }
                    }
                    Objective::Feasibility => {}
                }
            }
            let q = inv4l.map_or(0.0, |f| prog.q()[j] * f);
            b[r] = -c - q;
        }
    }
    if let Some(rhs) = budget_rhs {
        let r = n * jp1;
        let scale = n as f64;
        for i in 0..n {
            a[(r, 1 + i)] = scale * prog.weights()[i];
        }
        b[r] = rhs;
    }
    Ok((a, b, n_dec))
}

/// `lambda = None` solves the `lambda`-free limit (radius or `q` vanishing).
fn solve_inner(
    prog: &GammaProgram,
    lambda: Option<f64>,
    objective: &Objective<'_>,
    warm: Option<(&DVector<f64>, &DVector<f64>)>,
) -> Result<Inner> {
    let n = prog.n_samples();
    let n_f = n as f64;
    let (inv4l, budget_const) = match lambda {
        Some(l) => (Some(0.25 / l), l * prog.eps_t() * n_f),
        None => (None, 0.0),
    };
    let feasibility = matches!(objective, Objective::Feasibility);
    let budget = if feasibility {
        None
    } else {
        Some(-budget_const)
    };
    let (a, b, n_dec) = assemble(prog, inv4l, budget, objective)?;
    let nvar = a.ncols();
    let mut c = DVector::zeros(nvar);
    match objective {
        Objective::Feasibility => {
            for i in 0..n {
                c[1 + i] = n_f * prog.weights()[i];
            }
        }
        Objective::ReachOffsets => {
            for k in 0..n_dec {
                c[1 + n + k] = -1.0;
            }
        }
        Objective::InputEnergy(_) => {}
    }

    match objective {
        Objective::Feasibility | Objective::ReachOffsets => {
            let sol = lp::solve(&c, &a, &b)?;
            match sol.status {
                LpStatus::Optimal => {
                    let value = if feasibility {
                        sol.objective + budget_const
                    } else {
                        -sol.objective
                    };
                    Ok(Inner {
                        status: SolveStatus::Optimal,
                        value,
                        x: sol.x,
                        y: DVector::zeros(0),
                    })
                }
                LpStatus::Infeasible => Ok(Inner {
                    status: SolveStatus::Infeasible,
                    value: f64::NAN,
                    x: sol.x,
                    y: DVector::zeros(0),
                }),
                LpStatus::Unbounded => Err(Error::Unbounded),
            }
        }
        Objective::InputEnergy(_) => {
            // exact feasibility check first; it also supplies a starting point
            let probe = lp::solve(&DVector::zeros(nvar), &a, &b)?;
            if probe.status == LpStatus::Infeasible {
                return Ok(Inner {
                    status: SolveStatus::Infeasible,
                    value: f64::NAN,
                    x: probe.x,
                    y: DVector::zeros(0),
                });
            }
            let mut p = DMatrix::zeros(nvar, nvar);
            for k in 0..n_dec {
                p[(1 + n + k, 1 + n + k)] = 2.0;
            }
            let qv = DVector::zeros(nvar);
            let prob = QpProblem {
                p: &p,
                q: &qv,
                a: &a,
                u: &b,
            };
            let zero_y = DVector::zeros(a.nrows());
            let start = warm.unwrap_or((&probe.x, &zero_y));
            let sol = qp::solve(&prob, Some(start), &AdmmSettings::default())?;
            let status = match sol.status {
                QpStatus::Solved => SolveStatus::Optimal,
                QpStatus::PrimalInfeasible => SolveStatus::Infeasible,
                QpStatus::MaxIter => SolveStatus::MaxIter,
            };
            Ok(Inner {
                status,
                value: sol.objective,
                x: sol.x,
                y: sol.y,
            })
        }
    }
}

/// `min lambda eps_t N + sum_i N w_i s_i` over the system without the budget
/// row, decision columns included. Jointly convex in `(lambda, tau, s, decision)`,
/// so convex in `lambda`; the full system is feasible at `lambda` iff this is `<= 0`.
fn budget_gap(prog: &GammaProgram, lambda: f64, objective: &Objective<'_>) -> Result<f64> {
    let n = prog.n_samples();
    let n_f = n as f64;
    let (a, b, _) = assemble(prog, Some(0.25 / lambda), None, objective)?;
    let mut c = DVector::zeros(a.ncols());
    for i in 0..n {
        c[1 + i] = n_f * prog.weights()[i];
    }
    let sol = lp::solve(&c, &a, &b)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective + lambda * prog.eps_t() * n_f),
        LpStatus::Infeasible => Err(Error::Infeasible),
        LpStatus::Unbounded => Err(Error::Unbounded),
    }
}

/// Interval of `log10(lambda)` on which the system admits a decision, or
/// `None` if there is none.
fn feasible_interval(prog: &GammaProgram, objective: &Objective<'_>) -> Result<Option<(f64, f64)>> {
    let gap = |log_l: f64| budget_gap(prog, 10f64.powf(log_l), objective);
    let (center, value) = match minimize_log_lambda(|x| gap(x).map(Some)) {
        Ok(Some(best)) => best,
        Ok(None) => return Ok(None),
        // the gap decreasing into a clamp still leaves a feasible interval there
        Err(Error::LambdaClamped { lambda }) => {
            let x = lambda.log10();
            (x, gap(x)?)
        }
        Err(e) => return Err(e),
    };
    if value > 0.0 {
        return Ok(None);
    }
    let edge = |outside: f64| -> Result<f64> {
        if gap(outside)? <= 0.0 {
            return Ok(outside);
        }
        let (mut inside, mut outside) = (center, outside);
        while (outside - inside).abs() > GOLDEN_WIDTH {
            let mid = 0.5 * (inside + outside);
            if gap(mid)? <= 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(inside)
    };
    Ok(Some((edge(LOG_LAMBDA_MIN)?, edge(LOG_LAMBDA_MAX)?)))
}

fn primal_from(prog: &GammaProgram, x: &DVector<f64>, lambda: Option<f64>) -> Primal {
    let n = prog.n_samples();
    Primal {
        tau: x[0],
        lambda,
        s: x.rows(1, n).clone_owned(),
        decision: x.rows(1 + n, x.len() - 1 - n).clone_owned(),
    }
}

/// Solves the constraint system at a fixed `lambda > 0`.
pub fn solve_fixed_lambda(
    program: &GammaProgram,
    lambda: f64,
    objective: &Objective<'_>,
) -> Result<SolveReport> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    let start = Instant::now();
    let inner = solve_inner(program, Some(lambda), objective, None)?;
    let ok = inner.status == SolveStatus::Optimal;
    let trace = vec![LambdaEval {
        lambda,
        value: ok.then_some(inner.value),
    }];
    if !ok {
        return Ok(SolveReport::failed(inner.status, trace, start));
    }
    Ok(SolveReport {
        status: SolveStatus::Optimal,
        objective: inner.value,
        primal: Some(primal_from(program, &inner.x, Some(lambda))),
        trace,
        wall_time: start.elapsed(),
    })
}

fn lambda_free(program: &GammaProgram) -> bool {
    program.eps_t() == 0.0 || program.q().iter().all(|&q| q == 0.0)
}

/// Optimizes over `lambda` as well: a coarse log grid on
/// `[1e-6, 1e6]` followed by golden-section refinement in the best bracket.
pub fn solve_outer(program: &GammaProgram, objective: &Objective<'_>) -> Result<SolveReport> {
    let start = Instant::now();
    if lambda_free(program) {
        let inner = solve_inner(program, None, objective, None)?;
        if inner.status != SolveStatus::Optimal {
            return Ok(SolveReport::failed(inner.status, Vec::new(), start));
        }
        return Ok(SolveReport {
            status: SolveStatus::Optimal,
            objective: inner.value,
            primal: Some(primal_from(program, &inner.x, None)),
            trace: Vec::new(),
            wall_time: start.elapsed(),
        });
    }
    // the energy program is feasible only on an interval of lambda that can
    // be far narrower than the grid spacing; locate it first
    let (lo, hi) = if matches!(objective, Objective::InputEnergy(_)) {
        match feasible_interval(program, objective)? {
            Some(iv) => iv,
            None => {
                return Ok(SolveReport::failed(
                    SolveStatus::Infeasible,
                    Vec::new(),
                    start,
                ))
            }
        }
    } else {
        (LOG_LAMBDA_MIN, LOG_LAMBDA_MAX)
    };
    // everything is minimized internally
    let sign = if matches!(objective, Objective::ReachOffsets) {
        -1.0
    } else {
        1.0
    };
    let mut trace = Vec::new();
    let mut saw_max_iter = false;
    let mut best: Option<(f64, Inner)> = None;
    let mut warm: Option<(DVector<f64>, DVector<f64>)> = None;
    let search = minimize_on(
        |log_l| {
            let lambda = 10f64.powf(log_l);
            let w = warm.as_ref().map(|(x, y)| (x, y));
            let inner = solve_inner(program, Some(lambda), objective, w)?;
            let ok = inner.status == SolveStatus::Optimal;
            saw_max_iter |= inner.status == SolveStatus::MaxIter;
            trace.push(LambdaEval {
                lambda,
                value: ok.then_some(inner.value),
            });
            if !ok {
                return Ok(None);
            }
            let score = sign * inner.value;
            if matches!(objective, Objective::InputEnergy(_)) {
                warm = Some((inner.x.clone(), inner.y.clone()));
            }
            if best.as_ref().is_none_or(|(b, _)| score < *b) {
                best = Some((log_l, inner));
            }
            Ok(Some(score))
        },
        lo,
        hi,
    )?;
    let Some((log_l, _)) = search else {
        let status = if saw_max_iter {
            SolveStatus::MaxIter
        } else {
            SolveStatus::Infeasible
        };
        return Ok(SolveReport::failed(status, trace, start));
    };
    let lambda = 10f64.powf(log_l);
    // the search returns the best evaluated point; re-solve there for its primal
    let inner = match best {
        Some((bl, inner)) if bl == log_l => inner,
        _ => solve_inner(program, Some(lambda), objective, None)?,
    };
    Ok(SolveReport {
        status: SolveStatus::Optimal,
        objective: inner.value,
        primal: Some(primal_from(program, &inner.x, Some(lambda))),
        trace,
        wall_time: start.elapsed(),
    })
}

/// Minimizes a convex (possibly `+inf`) function of `log10(lambda)`.
/// Returns `None` if it is infinite on the whole grid, and errs if the
/// minimizer pins the edge of the search interval.
pub(crate) fn minimize_log_lambda<F>(f: F) -> Result<Option<(f64, f64)>>
where
    F: FnMut(f64) -> Result<Option<f64>>,
{
    minimize_on(f, LOG_LAMBDA_MIN, LOG_LAMBDA_MAX)
}

/// [`minimize_log_lambda`] restricted to `[lo, hi]`; only the global clamps
/// count as search edges.
fn minimize_on<F>(mut f: F, lo: f64, hi: f64) -> Result<Option<(f64, f64)>>
where
    F: FnMut(f64) -> Result<Option<f64>>,
{
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|k| {
            if k + 1 == GRID_POINTS {
                hi
            } else {
                lo + step * k as f64
            }
        })
        .collect();
    let mut values = Vec::with_capacity(GRID_POINTS);
    for &x in &grid {
        values.push(f(x)?.unwrap_or(f64::INFINITY));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Ok(None);
    }
    let tie = 1e-12 * min.abs().max(1.0);
    let tied: Vec<usize> = (0..GRID_POINTS)
        .filter(|&k| values[k] <= min + tie)
        .collect();
    let k = tied[tied.len() / 2];
    let mut best = (grid[k], values[k]);

    let (mut a, mut b) = (
        grid[k.saturating_sub(1)],
        grid[(k + 1).min(GRID_POINTS - 1)],
    );
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c)?.unwrap_or(f64::INFINITY);
    let mut fd = f(d)?.unwrap_or(f64::INFINITY);
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    let mut iter = 0;
    while b - a > GOLDEN_WIDTH {
        iter += 1;
        if iter > GOLDEN_MAX_ITER {
            return Err(Error::MaxIterations("golden-section search over lambda"));
        }
        let left = if fc == fd {
            best.0 < c || (best.0 <= d && best.0 - a < b - best.0)
        } else {
            fc < fd
        };
        if left {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c)?.unwrap_or(f64::INFINITY);
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d)?.unwrap_or(f64::INFINITY);
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    // flat at the edge is fine; strictly better only at the clamp is not
    let at_min = lo <= LOG_LAMBDA_MIN && best.0 - LOG_LAMBDA_MIN < 1e-6;
    let at_max = hi >= LOG_LAMBDA_MAX && LOG_LAMBDA_MAX - best.0 < 1e-6;
    if at_min || at_max {
        let inner_neighbor = if at_min {
            values[1]
        } else {
            values[GRID_POINTS - 2]
        };
        if best.1 < inner_neighbor - tie {
            return Err(Error::LambdaClamped {
                lambda: 10f64.powf(best.0),
            });
        }
    }
    Ok(Some(best))
}

/// Value and optimal `(tau, lambda)` of the worst-case CVaR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    pub value: f64,
    pub tau: f64,
    pub lambda: Option<f64>,
}

impl GammaProgram {
    /// Losses `max_j a_j' x_i + b_j + gamma q_j / (4 lambda)`; `None` drops the `q` term.
    fn tilted_losses(&self, lambda: Option<f64>) -> Vec<f64> {
        let poly = self.polytope();
        let g = self.gamma();
        self.atoms()
            .iter()
            .map(|x| {
                poly.directions()
                    .iter()
                    .zip(poly.offsets())
                    .zip(self.q())
                    .map(|((a, b), q)| a.dot(x) + b + lambda.map_or(0.0, |l| g * q / (4.0 * l)))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    /// `inf_{tau, lambda} lambda eps_t + sum_i w_i max_j [...]`. For fixed
    /// `lambda` the infimum over `tau` is the CVaR of the tilted losses, so only
    /// `lambda` is searched.
    pub fn worst_case(&self) -> Result<WorstCase> {
        if lambda_free(self) {
            let (value, tau) =
                cvar_with_threshold(&self.tilted_losses(None), self.weights(), self.gamma())?;
            return Ok(WorstCase {
                value,
                tau,
                lambda: None,
            });
        }
        let eval = |log_l: f64| -> Result<f64> {
            let l = 10f64.powf(log_l);
            Ok(l * self.eps_t()
                + cvar_with_threshold(&self.tilted_losses(Some(l)), self.weights(), self.gamma())?
                    .0)
        };
        let (log_l, value) = minimize_log_lambda(|x| eval(x).map(Some))?
            .ok_or(Error::MaxIterations("worst-case CVaR search"))?;
        let lambda = 10f64.powf(log_l);
        let tau = cvar_with_threshold(
            &self.tilted_losses(Some(lambda)),
            self.weights(),
            self.gamma(),
        )?
        .1;
        Ok(WorstCase {
            value,
            tau,
            lambda: Some(lambda),
        })
    }
}

/// `sup_{Q in ball} CVaR_{1-gamma}^Q(max_j a_j' x + b_j)`; the risk constraint
/// holds iff this is `<= 0`.
pub fn worst_case_cvar(state_ball: &AmbiguitySet, poly: &Polytope, gamma: f64) -> Result<f64> {
    Ok(build_gamma(state_ball, poly, gamma)?.worst_case()?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DiscreteDistribution;
    use crate::drcvar::empirical_cvar;
    use crate::transport::TransportationCost;
    use nalgebra::dvector;

    fn program(
        atoms: Vec<DVector<f64>>,
        d: f64,
        eps: f64,
        poly: &Polytope,
        gamma: f64,
    ) -> GammaProgram {
        let dim = atoms[0].len();
        let cost = TransportationCost::SqEuclidComposed(DMatrix::identity(dim, dim) / d);
        let ball =
            AmbiguitySet::new(DiscreteDistribution::empirical(atoms).unwrap(), cost, eps).unwrap();
        build_gamma(&ball, poly, gamma).unwrap()
    }

    fn square() -> Polytope {
        Polytope::axis_box(&dvector![-1.0, -1.0], &dvector![1.0, 1.0]).unwrap()
    }

    fn cloud() -> Vec<DVector<f64>> {
        vec![
            dvector![0.1, 0.2],
            dvector![-0.3, 0.0],
            dvector![0.4, -0.5],
            dvector![0.0, 0.6],
        ]
    }

    #[test]
    fn zero_radius_is_sample_cvar() {
        let poly = square();
        let prog = program(cloud(), 0.3, 0.0, &poly, 0.3);
        let losses: Vec<f64> = cloud().iter().map(|x| poly.loss(x)).collect();
        let wc = prog.worst_case().unwrap();
        assert!((wc.value - empirical_cvar(&losses, 0.3).unwrap()).abs() < 1e-12);
        assert_eq!(wc.lambda, None);
    }

    #[test]
    fn feasibility_lp_value_is_n_times_worst_case() {
        let poly = square();
        for eps in [0.0, 0.01, 0.2] {
            let prog = program(cloud(), 0.3, eps, &poly, 0.25);
            let wc = prog.worst_case().unwrap().value;
            let rep = solve_outer(&prog, &Objective::Feasibility).unwrap();
            assert_eq!(rep.status, SolveStatus::Optimal);
            assert!(
                (rep.objective / 4.0 - wc).abs() < 1e-7,
                "eps {eps}: {} vs {wc}",
                rep.objective / 4.0
            );
        }
    }

    #[test]
    fn fixed_lambda_lp_matches_closed_form() {
        let poly = square();
        let prog = program(cloud(), 0.3, 0.05, &poly, 0.25);
        let lambda = 0.7;
        let rep = solve_fixed_lambda(&prog, lambda, &Objective::Feasibility).unwrap();
        let losses = prog.tilted_losses(Some(lambda));
        let w = vec![0.25; 4];
        let expected = 4.0 * (lambda * 0.05 + cvar_with_threshold(&losses, &w, 0.25).unwrap().0);
        assert!((rep.objective - expected).abs() < 1e-10);
    }

    #[test]
    fn one_dimensional_reach_offset_by_hand() {
        let poly = Polytope::new(vec![dvector![1.0]], vec![0.0]).unwrap();
        let prog = program(vec![dvector![0.5]], 1.0, 0.04, &poly, 0.5);
        let lambda = 2.0;
        let rep = solve_fixed_lambda(&prog, lambda, &Objective::ReachOffsets).unwrap();
        // single sample: CVaR is the loss itself; constraint x + b + gamma q/(4 lambda) + lambda eps <= 0
        let q = 1.0 / 0.25;
        let expected = -(0.5 + 0.5 * q / (4.0 * lambda) + lambda * 0.04);
        assert!(
            (rep.objective - expected).abs() < 1e-10,
            "{} vs {expected}",
            rep.objective
        );
    }

    #[test]
    fn reach_offsets_make_constraint_tight() {
        let prog = program(cloud(), 0.3, 0.05, &square(), 0.2);
        let rep = solve_outer(&prog, &Objective::ReachOffsets).unwrap();
        let b = rep.primal.unwrap().decision;
        let wc = prog
            .with_offsets(b.iter().copied().collect())
            .unwrap()
            .worst_case()
            .unwrap()
            .value;
        assert!(wc.abs() < 1e-6, "{wc}");
    }

    #[test]
    fn zero_input_when_target_is_loose() {
        let prog = program(
            cloud(),
            0.1,
            0.001,
            &Polytope::axis_box(&dvector![-5.0, -5.0], &dvector![5.0, 5.0]).unwrap(),
            0.2,
        );
        let g = DMatrix::identity(2, 2);
        let rep = solve_outer(&prog, &Objective::InputEnergy(&g)).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        assert!(rep.objective < 1e-12);
    }

    #[test]
    fn input_energy_moves_cloud_into_target() {
        let target = Polytope::axis_box(&dvector![2.0, 2.0], &dvector![4.0, 4.0]).unwrap();
        let prog = program(cloud(), 0.1, 0.001, &target, 0.2);
        let g = DMatrix::identity(2, 2);
        let rep = solve_outer(&prog, &Objective::InputEnergy(&g)).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        let v = rep.primal.unwrap().decision;
        let wc = prog.shifted(&v).unwrap().worst_case().unwrap().value;
        assert!(wc <= 1e-6, "{wc}");
        assert!(wc > -1e-4, "constraint should be active: {wc}");
    }

    #[test]
    fn impossible_target_is_infeasible() {
        let target = Polytope::axis_box(&dvector![0.0, 0.0], &dvector![0.01, 0.01]).unwrap();
        let prog = program(cloud(), 0.1, 0.0, &target, 0.2);
        let g = DMatrix::identity(2, 2);
        let rep = solve_outer(&prog, &Objective::InputEnergy(&g)).unwrap();
        assert_eq!(rep.status, SolveStatus::Infeasible);
    }
}
