//! Distributionally robust reachability analysis and trajectory planning for
//! a noisy LTI system, plus out-of-sample evaluation of the resulting decisions.
//!
//! An [`Experiment`] fixes the system, horizon, risk level, radius sweep, the
//! training noise trajectories and a held-out test batch. Independent radii are
//! solved on separate threads and collected in sweep order.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distributions::{TrajectoryBatch, DEFAULT_PRODUCT_CAP};
use crate::drcvar::{
    build_gamma, check_level, empirical_cvar, grid_directions, GammaProgram, Objective, Polytope,
    SolveReport, SolveStatus,
};
use crate::error::{check_dim, Error, Result};
use crate::lti::{lift, simulate, state_ambiguity, LiftedOperators, LtiSystem, SystemConfig};
use crate::propagation::{noise_ball, radius_rate, LiftMode};
use crate::transport::AmbiguitySet;

/// Tolerance of the post-hoc worst-case CVaR check on returned decisions.
pub const CERTIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterMode {
    /// Center on the observed noise trajectories.
    #[default]
    Trajectory,
    /// Center on the enumerated product of the per-step empirical noise.
    Product,
}

impl CenterMode {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Trajectory => "trajectory",
            Self::Product => "product",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Either generate `count` Gaussian trajectories or read them from a CSV file
/// with one row per trajectory, `w_0, ..., w_{t-1}` back to back (relative
/// paths resolve against the config file; `header` skips a first line).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub header: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            count: Some(5),
            file: None,
            header: false,
        }
    }
}

fn default_test_count() -> usize {
    1000
}

fn default_noise_std() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub horizon: usize,
    pub gamma: f64,
    /// Per-step radii; defaults to `{0, r/2, r}` with `r = radius_rate(N, noise_dim, 1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    /// Halfspace normals; default is every nonzero vector of `{-1,0,1}^d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<Vec<f64>>>,
    /// Offsets paired with `directions`, for evaluating a fixed polytope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<f64>>,
    /// Box target for planning.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<BoxConfig>,
    /// Stacked feedforward `[v_{t-1}; ...; v_0]` used by reachability and CVaR
    /// evaluation; zero by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedforward: Option<Vec<f64>>,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default = "default_test_count")]
    pub test_count: usize,
    #[serde(default)]
    pub seed: u64,
    /// Standard deviation of the generated Gaussian noise, per component.
    #[serde(default = "default_noise_std")]
    pub noise_std: f64,
    #[serde(default)]
    pub mode: CenterMode,
}

impl ExperimentConfig {
    /// The planar benchmark: `A = [[.5,-.5],[1,.5]]`, `B = I`, `D = 0.1 I`,
    /// LQR gain with `Q = R = I`, `t = 10`, `gamma = 0.05`, 5 training
    /// trajectories, target box `[1,2]^2`.
    pub fn planar_benchmark() -> Self {
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        Self {
            system: SystemConfig {
                a: vec![vec![0.5, -0.5], vec![1.0, 0.5]],
                b: eye.clone(),
                d: vec![vec![0.1, 0.0], vec![0.0, 0.1]],
                k: None,
                lqr: Some(crate::lti::LqrWeights {
                    q: eye.clone(),
                    r: eye,
                }),
                x0: vec![0.0, 0.0],
            },
            horizon: 10,
            gamma: 0.05,
            epsilons: None,
            directions: None,
            offsets: None,
            target: Some(BoxConfig {
                lo: vec![1.0, 1.0],
                hi: vec![2.0, 2.0],
            }),
            feedforward: None,
            training: TrainingConfig::default(),
            test_count: default_test_count(),
            seed: 0,
            noise_std: default_noise_std(),
            mode: CenterMode::Trajectory,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// `count` trajectories of i.i.d. `N(0, std^2)` noise, generated in time order.
pub fn gaussian_batch<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    horizon: usize,
    dim: usize,
    std: f64,
) -> Result<TrajectoryBatch> {
    if count == 0 {
        return Err(Error::EmptyDistribution);
    }
    let seqs: Vec<Vec<DVector<f64>>> = (0..count)
        .map(|_| {
            (0..horizon)
                .map(|_| DVector::from_fn(dim, |_, _| std * rng.sample::<f64, _>(StandardNormal)))
                .collect()
        })
        .collect();
    TrajectoryBatch::from_time_ordered(&seqs)
}

/// Independent generators for the training and test batches of a seed.
pub fn seeded_streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let train = ChaCha8Rng::seed_from_u64(seed);
    let mut test = ChaCha8Rng::seed_from_u64(seed);
    test.set_stream(1);
    (train, test)
}

/// A validated, fully materialized experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub system: LtiSystem,
    pub ops: LiftedOperators,
    pub training: TrajectoryBatch,
    pub test: TrajectoryBatch,
    pub epsilons: Vec<f64>,
    pub directions: Vec<DVector<f64>>,
    pub feedforward: DVector<f64>,
}

impl Experiment {
    /// Validates the config and draws the noise batches. Relative training
    /// file paths resolve against `base_dir`.
    pub fn prepare(config: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Self> {
        check_level(config.gamma).map_err(|e| Error::Config(e.to_string()))?;
        if config.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if !(config.noise_std.is_finite() && config.noise_std >= 0.0) {
            return Err(Error::Config("noise_std must be finite and >= 0".into()));
        }
        let system = config.system.build()?;
        let (d, r, m, t) = (
            system.state_dim(),
            system.noise_dim(),
            system.input_dim(),
            config.horizon,
        );
        let ops = lift(&system, t)?;
        let (mut train_rng, mut test_rng) = seeded_streams(config.seed);
        let training = match (&config.training.count, &config.training.file) {
            (Some(n), None) => gaussian_batch(&mut train_rng, *n, t, r, config.noise_std)
                .map_err(|e| Error::Config(format!("training: {e}")))?,
            (None, Some(file)) => {
                let path = match base_dir {
                    Some(base) if file.is_relative() => base.join(file),
                    _ => file.clone(),
                };
                crate::io::read_noise_csv(&path, t, r, config.training.header)?
            }
            _ => {
                return Err(Error::Config(
                    "training needs exactly one of \"count\" and \"file\"".into(),
                ))
            }
        };
        let test = if config.test_count == 0 {
            training.clone()
        } else {
            gaussian_batch(&mut test_rng, config.test_count, t, r, config.noise_std)?
        };
        let epsilons = match &config.epsilons {
            Some(e) => e.clone(),
            None => {
                let rr = radius_rate(training.len(), r, 1.0);
                vec![0.0, rr / 2.0, rr]
            }
        };
        if epsilons.is_empty() || epsilons.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::Config(
                "epsilons must be a non-empty list of finite values >= 0".into(),
            ));
        }
        let directions = match &config.directions {
            Some(rows) => rows.iter().map(|a| DVector::from_vec(a.clone())).collect(),
            None => grid_directions(d),
        };
        if directions.is_empty() || directions.iter().any(|a| a.len() != d) {
            return Err(Error::Config(format!(
                "directions must be non-empty vectors of length {d}"
            )));
        }
        if let Some(off) = &config.offsets {
            if off.len() != directions.len() {
                return Err(Error::Config("offsets must pair with directions".into()));
            }
        }
        if let Some(b) = &config.target {
            if b.lo.len() != d || b.hi.len() != d {
                return Err(Error::Config(format!("target bounds must have length {d}")));
            }
        }
        let feedforward = match &config.feedforward {
            Some(v) if v.len() == t * m => DVector::from_vec(v.clone()),
            Some(_) => {
                return Err(Error::Config(format!(
                    "feedforward must have length t * m = {}",
                    t * m
                )))
            }
            None => DVector::zeros(t * m),
        };
        Ok(Self {
            config: config.clone(),
            system,
            ops,
            training,
            test,
            epsilons,
            directions,
            feedforward,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.config.gamma
    }

    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    /// Per-step noise ball: empirical distribution of all training steps.
    pub fn noise_ball(&self, eps: f64) -> Result<AmbiguitySet> {
        let b = &self.training;
        let steps = (0..b.len())
            .flat_map(|i| (0..b.horizon()).map(move |k| b.step(i, k)))
            .collect();
        noise_ball(steps, eps)
    }

    /// State ambiguity set at the horizon for feedforward `v`.
    pub fn state_ball(&self, eps: f64, v: &DVector<f64>) -> Result<AmbiguitySet> {
        let nb = self.noise_ball(eps)?;
        let mode = match self.config.mode {
            CenterMode::Trajectory => LiftMode::Trajectories(&self.training),
            CenterMode::Product => LiftMode::Enumerate {
                cap: DEFAULT_PRODUCT_CAP,
            },
        };
        state_ambiguity(&self.system, self.horizon(), v, &nb, mode)
    }

    pub fn target(&self) -> Result<Polytope> {
        let b = self
            .config
            .target
            .as_ref()
            .ok_or(Error::Config("planning needs a \"target\" box".into()))?;
        Polytope::axis_box(
            &DVector::from_vec(b.lo.clone()),
            &DVector::from_vec(b.hi.clone()),
        )
    }

    /// Polytope with the configured directions and offsets (zero if absent).
    pub fn direction_polytope(&self) -> Result<Polytope> {
        let offsets = self
            .config
            .offsets
            .clone()
            .unwrap_or_else(|| vec![0.0; self.directions.len()]);
        Polytope::new(self.directions.clone(), offsets)
    }

    fn program(&self, eps: f64, v: &DVector<f64>, poly: &Polytope) -> Result<GammaProgram> {
        build_gamma(&self.state_ball(eps, v)?, poly, self.gamma())
    }
}

/// Runs `f` for every radius on its own thread, keeping sweep order.
fn sweep<T: Send>(eps: &[f64], f: impl Fn(f64) -> Result<T> + Sync) -> Result<Vec<T>> {
    std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = eps.iter().map(|&e| s.spawn(move || f(e))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

#[derive(Debug, Clone)]
pub struct ReachOutcome {
    pub epsilon: f64,
    pub report: SolveReport,
    /// Optimal offsets; the reachable set is `{x : a_j' x + b_j <= 0 for all j}`.
    pub offsets: Option<Vec<f64>>,
    pub offset_sum: f64,
    /// Worst-case CVaR of the returned polytope, recomputed independently.
    pub certified_cvar: Option<f64>,
}

impl ReachOutcome {
    pub fn polytope(&self, directions: &[DVector<f64>]) -> Option<Polytope> {
        self.offsets
            .as_ref()
            .and_then(|b| Polytope::new(directions.to_vec(), b.clone()).ok())
    }
}

/// Smallest polytope with the configured normals whose worst-case CVaR over
/// the state ambiguity set is non-positive, for each radius of the sweep.
pub fn reachability(exp: &Experiment) -> Result<Vec<ReachOutcome>> {
    let poly = exp.direction_polytope()?;
    sweep(&exp.epsilons, |eps| {
        let prog = exp.program(eps, &exp.feedforward, &poly)?;
        let report = crate::drcvar::solve_outer(&prog, &Objective::ReachOffsets)?;
        let offsets = report
            .primal
            .as_ref()
            .map(|p| p.decision.iter().copied().collect::<Vec<f64>>());
        let certified_cvar = match &offsets {
            Some(b) if report.status == SolveStatus::Optimal => {
                Some(prog.with_offsets(b.clone())?.worst_case()?.value)
            }
            _ => None,
        };
        Ok(ReachOutcome {
            epsilon: eps,
            offset_sum: report.objective,
            report,
            offsets,
            certified_cvar,
        })
    })
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub epsilon: f64,
    pub report: SolveReport,
    /// Stacked feedforward `[v_{t-1}; ...; v_0]`.
    pub input: Option<DVector<f64>>,
    pub energy: f64,
    pub certified_cvar: Option<f64>,
}

/// Cheapest feedforward input whose worst-case CVaR of leaving the target is
/// non-positive, for each radius of the sweep.
pub fn plan_trajectory(exp: &Experiment) -> Result<Vec<PlanOutcome>> {
    let target = exp.target()?;
    let g = exp.ops.input_map().clone();
    let zero = DVector::zeros(g.ncols());
    sweep(&exp.epsilons, |eps| {
        let prog = exp.program(eps, &zero, &target)?;
        let report = crate::drcvar::solve_outer(&prog, &Objective::InputEnergy(&g))?;
        let input = (report.status == SolveStatus::Optimal)
            .then(|| report.primal.as_ref().map(|p| p.decision.clone()))
            .flatten();
        let certified_cvar = match &input {
            Some(v) => Some(prog.shifted(&(&g * v))?.worst_case()?.value),
            None => None,
        };
        Ok(PlanOutcome {
            epsilon: eps,
            energy: report.objective,
            report,
            input,
            certified_cvar,
        })
    })
}

#[derive(Debug, Clone)]
pub struct CvarOutcome {
    pub epsilon: f64,
    pub worst_case: f64,
    /// CVaR under the center distribution itself.
    pub sample_cvar: f64,
}

/// Worst-case and center CVaR of a fixed polytope for each radius.
pub fn evaluate_cvar(exp: &Experiment, poly: &Polytope) -> Result<Vec<CvarOutcome>> {
    sweep(&exp.epsilons, |eps| {
        let prog = exp.program(eps, &exp.feedforward, poly)?;
        let losses: Vec<f64> = prog.atoms().iter().map(|x| poly.loss(x)).collect();
        let sample_cvar = crate::drcvar::cvar(&losses, prog.weights(), exp.gamma())?;
        Ok(CvarOutcome {
            epsilon: eps,
            worst_case: prog.worst_case()?.value,
            sample_cvar,
        })
    })
}

/// A polytope together with the feedforward that was applied.
#[derive(Debug, Clone)]
pub struct Decision {
    pub poly: Polytope,
    pub input: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub terminal_states: Vec<DVector<f64>>,
    /// Empirical CVaR of `max_j a_j' x_t + b_j` over the batch.
    pub empirical_cvar: f64,
    /// Fraction of terminal states outside the polytope.
    pub violation_fraction: f64,
}

/// Simulates `batch` under the decision and scores the terminal states.
pub fn evaluate_out_of_sample(
    exp: &Experiment,
    decision: &Decision,
    batch: &TrajectoryBatch,
) -> Result<Evaluation> {
    check_dim(exp.system.state_dim(), decision.poly.dim())?;
    let paths = simulate(&exp.system, &decision.input, batch)?;
    let terminal_states: Vec<DVector<f64>> = paths
        .into_iter()
        .map(|mut p| p.pop().expect("path has x_0"))
        .collect();
    let losses: Vec<f64> = terminal_states
        .iter()
        .map(|x| decision.poly.loss(x))
        .collect();
    let empirical_cvar = empirical_cvar(&losses, exp.gamma())?;
    let violations = losses.iter().filter(|&&l| l > 0.0).count();
    let violation_fraction = violations as f64 / losses.len() as f64;
    Ok(Evaluation {
        terminal_states,
        empirical_cvar,
        violation_fraction,
    })
}

/// Terminal states of the training trajectories under feedforward `v`.
pub fn training_states(exp: &Experiment, v: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    Ok(simulate(&exp.system, v, &exp.training)?
        .into_iter()
        .map(|mut p| p.pop().expect("path has x_0"))
        .collect())
}

/// Input map of the lifted dynamics, `[B, (A+BK) B, ...]`.
pub fn input_map(exp: &Experiment) -> &DMatrix<f64> {
    exp.ops.input_map()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench(eps: Vec<f64>, seed: u64) -> Experiment {
        let mut cfg = ExperimentConfig::planar_benchmark();
        cfg.epsilons = Some(eps);
        cfg.seed = seed;
        cfg.test_count = 200;
        Experiment::prepare(&cfg, None).unwrap()
    }

    #[test]
    fn benchmark_gain_is_stabilizing() {
        let exp = bench(vec![0.0], 0);
        assert!(crate::lti::spectral_radius(&exp.system.closed_loop()) < 1.0);
        assert!(exp.ops.noise_map_full_row_rank());
    }

    #[test]
    fn state_ball_atoms_are_the_controlled_samples() {
        let exp = bench(vec![0.1], 3);
        let ball = exp.state_ball(0.1, &exp.feedforward).unwrap();
        let states = training_states(&exp, &exp.feedforward).unwrap();
        assert_eq!(ball.center().len(), 5);
        for (a, s) in ball.center().atoms().iter().zip(&states) {
            assert!((a - s).amax() < 1e-12);
        }
        assert!((ball.radius() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reach_sum_decreases_with_radius() {
        let exp = bench(vec![0.0, 0.05, 0.2], 1);
        let out = reachability(&exp).unwrap();
        for w in out.windows(2) {
            assert!(w[1].offset_sum <= w[0].offset_sum + 1e-7);
        }
        for o in &out {
            assert!(
                o.certified_cvar.unwrap() <= CERTIFY_TOL,
                "{:?}",
                o.certified_cvar
            );
        }
    }

    #[test]
    fn in_sample_cvar_is_nonpositive_at_zero_radius() {
        let exp = bench(vec![0.0], 2);
        let out = reachability(&exp).unwrap();
        let poly = out[0].polytope(&exp.directions).unwrap();
        let eval = evaluate_out_of_sample(
            &exp,
            &Decision {
                poly,
                input: exp.feedforward.clone(),
            },
            &exp.training,
        )
        .unwrap();
        assert!(eval.empirical_cvar <= 1e-6, "{}", eval.empirical_cvar);
    }

    #[test]
    fn deterministic_rollout_scores_zero_or_one() {
        let exp = bench(vec![0.0], 0);
        let mut sys = exp.clone();
        sys.system = LtiSystem::new(
            exp.system.a().clone(),
            exp.system.b().clone(),
            DMatrix::zeros(2, 2),
            exp.system.k().clone(),
            exp.system.x0().clone(),
        )
        .unwrap();
        let poly = Polytope::axis_box(
            &DVector::from_vec(vec![1.0, 1.0]),
            &DVector::from_vec(vec![2.0, 2.0]),
        )
        .unwrap();
        let eval = evaluate_out_of_sample(
            &sys,
            &Decision {
                poly,
                input: exp.feedforward.clone(),
            },
            &exp.test,
        )
        .unwrap();
        assert!(eval.violation_fraction == 0.0 || eval.violation_fraction == 1.0);
    }
}
