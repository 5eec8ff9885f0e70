//! Command-line front end: `propagate`, `reach`, `plan`, `cvar` and `verify`.
//!
//! Every run command reads an experiment config (JSON), applies flag
//! overrides, writes its artifacts into `--out` and exits with
//! 0 (ok), 1 (verification failure), 2 (config error) or 3 (numeric failure,
//! including an infeasible radius).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use crate::apps::{
    evaluate_cvar, evaluate_out_of_sample, plan_trajectory, reachability, training_states,
    CenterMode, Decision, Experiment, ExperimentConfig,
};
use crate::drcvar::{Polytope, SolveStatus};
use crate::error::{Error, Result};
use crate::io::{
    to_json_string, validate_results, write_atoms_csv, write_json, write_matrix_csv,
    write_noise_csv, write_scatter_csv,
};
use crate::oracle::{forced_failure_check, run_suite};
use crate::propagation::cost_spectrum;
use crate::svg::{clip_polytope, Scatter, PALETTE};
use crate::transport::TransportationCost;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ot-tube",
    version,
    about = "Optimal transport ambiguity sets for stochastic linear systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the state ambiguity set at the horizon (center atoms, cost matrix, radii).
    Propagate(PropagateArgs),
    /// Smallest polytope containing the state with worst-case CVaR <= 0.
    Reach(RunArgs),
    /// Cheapest feedforward steering the state into the target box.
    Plan(RunArgs),
    /// Worst-case and sample CVaR of a fixed polytope.
    Cvar(RunArgs),
    /// Run the brute-force oracle suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Product,
    Trajectory,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config (JSON); the built-in planar benchmark if omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated radii, overriding the config.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub epsilon: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Also render `plot.svg`.
    #[arg(long)]
    pub svg: bool,
    /// The training noise CSV starts with a header line.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Horizon override.
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random instances per check.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Optional directory for `verify.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append a check that always fails (exercises the failure path).
    #[arg(long)]
    pub force_failure: bool,
}

/// Maps a library error to the documented exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::InvalidArgument(_) => EXIT_CONFIG,
        Error::InvalidLevel(_)
        | Error::InvalidHorizon
        | Error::ProductCapExceeded { .. }
        | Error::SizeLimit(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Propagate(a) => cmd_propagate(a),
        Command::Reach(a) => cmd_reach(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Cvar(a) => cmd_cvar(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Loads the config and applies the flag overrides.
pub fn load_experiment(args: &RunArgs, horizon: Option<usize>) -> Result<Experiment> {
    let (mut cfg, base) = match &args.config {
        Some(p) => (
            ExperimentConfig::from_json_file(p)?,
            p.parent().map(Path::to_path_buf),
        ),
        None => (ExperimentConfig::planar_benchmark(), None),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(e) = &args.epsilon {
        cfg.epsilons = Some(e.clone());
    }
    if let Some(m) = args.mode {
        cfg.mode = match m {
            ModeArg::Product => CenterMode::Product,
            ModeArg::Trajectory => CenterMode::Trajectory,
        };
    }
    if args.header {
        cfg.training.header = true;
    }
    if let Some(t) = horizon {
        cfg.horizon = t;
        cfg.feedforward = None;
    }
    Experiment::prepare(&cfg, base.as_deref())
}

#[derive(Debug, Serialize)]
struct RunHeader<'a> {
    command: &'a str,
    seed: u64,
    horizon: usize,
    gamma: f64,
    mode: &'a str,
    noise_std: f64,
    training_count: usize,
    test_count: usize,
}

impl<'a> RunHeader<'a> {
    fn new(command: &'a str, exp: &Experiment) -> Self {
        Self {
            command,
            seed: exp.config.seed,
            horizon: exp.horizon(),
            gamma: exp.gamma(),
            mode: exp.config.mode.label(),
            noise_std: exp.config.noise_std,
            training_count: exp.training.len(),
            test_count: exp.test.len(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Timings {
    runtime_ms: f64,
    solver_ms: Vec<f64>,
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Validates the document against the results schema and writes it.
fn emit_results<T: Serialize>(dir: &Path, doc: &T) -> Result<()> {
    let text = to_json_string(doc)?;
    validate_results(&serde_json::from_str(&text)?)?;
    std::fs::write(dir.join("results.json"), text)?;
    Ok(())
}

fn emit_timings(dir: &Path, start: Instant, solver_ms: Vec<f64>) -> Result<()> {
    write_json(
        &dir.join("timings.json"),
        &Timings {
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            solver_ms,
        },
    )
}

fn lambda_of(status: SolveStatus, report: &crate::drcvar::SolveReport) -> Option<f64> {
    if status == SolveStatus::Optimal {
        report.primal.as_ref().and_then(|p| p.lambda)
    } else {
        None
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Serialize)]
struct SummaryDoc<'a> {
    command: &'a str,
    seed: u64,
    horizon: usize,
    mode: &'a str,
    state_dim: usize,
    noise_dim: usize,
    atoms: usize,
    exactness: &'a str,
    epsilons: Vec<f64>,
    /// Radius of the state ball for each noise radius.
    radii: Vec<f64>,
    nominal_state: Vec<f64>,
    /// Eigenvalues of the cost's Gram matrix, largest first.
    cost_spectrum: Vec<f64>,
    files: [&'a str; 3],
}

fn cmd_propagate(args: &PropagateArgs) -> Result<i32> {
    let start = Instant::now();
    let exp = load_experiment(&args.run, args.horizon)?;
    prepare_out(&args.run.out)?;
    let balls = exp
        .epsilons
        .iter()
        .map(|&e| exp.state_ball(e, &exp.feedforward))
        .collect::<Result<Vec<_>>>()?;
    let ball = &balls[0];
    let TransportationCost::SqEuclidComposed(m) = ball.cost() else {
        return Err(Error::WrongCostKind(
            "state ambiguity set must carry a composed cost",
        ));
    };
    write_atoms_csv(&args.run.out.join("center.csv"), ball.center())?;
    write_matrix_csv(&args.run.out.join("cost_matrix.csv"), m)?;
    write_noise_csv(&args.run.out.join("training_noise.csv"), &exp.training)?;
    let nominal = exp.ops.nominal_state(exp.system.x0(), &exp.feedforward)?;
    let summary = SummaryDoc {
        command: "propagate",
        seed: exp.config.seed,
        horizon: exp.horizon(),
        mode: exp.config.mode.label(),
        state_dim: exp.system.state_dim(),
        noise_dim: exp.system.noise_dim(),
        atoms: ball.center().len(),
        exactness: ball.exactness().label(),
        epsilons: exp.epsilons.clone(),
        radii: balls.iter().map(|b| b.radius()).collect(),
        nominal_state: nominal.iter().copied().collect(),
        cost_spectrum: cost_spectrum(m).into_iter().map(|(s, _)| s).collect(),
        files: ["center.csv", "cost_matrix.csv", "training_noise.csv"],
    };
    write_json(&args.run.out.join("summary.json"), &summary)?;
    emit_timings(&args.run.out, start, Vec::new())?;
    println!(
        "propagate: t = {}, {} atoms, {}, radii {:?}",
        summary.horizon, summary.atoms, summary.exactness, summary.radii
    );
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct ReachEntry {
    epsilon: f64,
    status: SolveStatus,
    objective: Option<f64>,
    lambda: Option<f64>,
    b: Option<Vec<f64>>,
    worst_case_cvar: Option<f64>,
    empirical_cvar: Option<f64>,
    violation_fraction: Option<f64>,
    train_violation_fraction: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ReachDoc<'a> {
    #[serde(flatten)]
    header: RunHeader<'a>,
    directions: Vec<Vec<f64>>,
    results: Vec<ReachEntry>,
}

fn cmd_reach(args: &RunArgs) -> Result<i32> {
    let start = Instant::now();
    let exp = load_experiment(args, None)?;
    prepare_out(&args.out)?;
    let outcomes = reachability(&exp)?;
    let train = training_states(&exp, &exp.feedforward)?;
    let test = crate::lti::simulate(&exp.system, &exp.feedforward, &exp.test)?
        .into_iter()
        .map(|mut p| p.pop().expect("path has x_0"))
        .collect::<Vec<_>>();
    let mut entries = Vec::new();
    let mut polys = Vec::new();
    for o in &outcomes {
        let poly = o
            .polytope(&exp.directions)
            .filter(|_| o.report.status == SolveStatus::Optimal);
        let (emp, viol, train_viol) = match &poly {
            Some(p) => {
                let ev = evaluate_out_of_sample(
                    &exp,
                    &Decision {
                        poly: p.clone(),
                        input: exp.feedforward.clone(),
                    },
                    &exp.test,
                )?;
                let tv =
                    train.iter().filter(|x| !p.contains(x)).count() as f64 / train.len() as f64;
                (
                    Some(ev.empirical_cvar),
                    Some(ev.violation_fraction),
                    Some(tv),
                )
            }
            None => (None, None, None),
        };
        entries.push(ReachEntry {
            epsilon: o.epsilon,
            status: o.report.status,
            objective: finite(o.offset_sum),
            lambda: lambda_of(o.report.status, &o.report),
            b: poly.as_ref().map(|p| p.offsets().to_vec()),
            worst_case_cvar: o.certified_cvar,
            empirical_cvar: emp,
            violation_fraction: viol,
            train_violation_fraction: train_viol,
        });
        polys.push(poly);
        println!(
            "reach eps = {:<10.4e} {:<10} sum b = {:>12}  test violation = {}",
            o.epsilon,
            o.report.status.label(),
            finite(o.offset_sum).map_or("-".into(), |v| format!("{v:.6}")),
            viol.map_or("-".into(), |v| format!("{v:.4}"))
        );
    }
    let doc = ReachDoc {
        header: RunHeader::new("reach", &exp),
        directions: exp
            .directions
            .iter()
            .map(|a| a.iter().copied().collect())
            .collect(),
        results: entries,
    };
    emit_results(&args.out, &doc)?;
    let mut points: Vec<(String, &DVector<f64>)> =
        train.iter().map(|x| ("train".to_string(), x)).collect();
    points.extend(test.iter().map(|x| ("test".to_string(), x)));
    let (lo, hi) = scatter_box(&train, &test);
    let vertices: Vec<Vec<DVector<f64>>> = polys
        .iter()
        .map(|p| p.as_ref().map_or_else(Vec::new, |p| polygon(p, lo, hi)))
        .collect();
    for (k, vs) in vertices.iter().enumerate() {
        points.extend(vs.iter().map(|v| (format!("vertex_{k}"), v)));
    }
    write_scatter(&args.out, &points)?;
    if args.svg {
        let mut sc = Scatter::new(format!("reachable sets, t = {}", exp.horizon()));
        sc.add_series("train", "#1f77b4", &train);
        sc.add_series("test", "#7f7f7f", &test);
        for (k, vs) in vertices.iter().enumerate() {
            sc.add_outline(
                &format!("eps = {:.3e}", exp.epsilons[k]),
                PALETTE[k % PALETTE.len()],
                vs.iter().map(|v| (v[0], v[1])).collect(),
            );
        }
        std::fs::write(args.out.join("plot.svg"), sc.render())?;
    }
    emit_timings(
        &args.out,
        start,
        outcomes
            .iter()
            .map(|o| o.report.wall_time.as_secs_f64() * 1e3)
            .collect(),
    )?;
    Ok(
        if outcomes
            .iter()
            .all(|o| o.report.status == SolveStatus::Optimal)
        {
            EXIT_OK
        } else {
            EXIT_NUMERIC
        },
    )
}

#[derive(Debug, Serialize)]
struct PlanEntry {
    epsilon: f64,
    status: SolveStatus,
    objective: Option<f64>,
    lambda: Option<f64>,
    v: Option<Vec<f64>>,
    worst_case_cvar: Option<f64>,
    empirical_cvar: Option<f64>,
    violation_fraction: Option<f64>,
    inside_fraction: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PlanDoc<'a> {
    #[serde(flatten)]
    header: RunHeader<'a>,
    target_lo: Vec<f64>,
    target_hi: Vec<f64>,
    results: Vec<PlanEntry>,
}

fn cmd_plan(args: &RunArgs) -> Result<i32> {
    let start = Instant::now();
    let exp = load_experiment(args, None)?;
    let target = exp.target()?;
    prepare_out(&args.out)?;
    let outcomes = plan_trajectory(&exp)?;
    let mut entries = Vec::new();
    let mut clouds: Vec<(Vec<DVector<f64>>, Vec<DVector<f64>>)> = Vec::new();
    for o in &outcomes {
        let (emp, viol, cloud) = match &o.input {
            Some(v) => {
                let ev = evaluate_out_of_sample(
                    &exp,
                    &Decision {
                        poly: target.clone(),
                        input: v.clone(),
                    },
                    &exp.test,
                )?;
                let tr = training_states(&exp, v)?;
                (
                    Some(ev.empirical_cvar),
                    Some(ev.violation_fraction),
                    (tr, ev.terminal_states),
                )
            }
            None => (None, None, (Vec::new(), Vec::new())),
        };
        entries.push(PlanEntry {
            epsilon: o.epsilon,
            status: o.report.status,
            objective: o.input.as_ref().and_then(|_| finite(o.energy)),
            lambda: lambda_of(o.report.status, &o.report),
            v: o.input.as_ref().map(|v| v.iter().copied().collect()),
            worst_case_cvar: o.certified_cvar,
            empirical_cvar: emp,
            violation_fraction: viol,
            inside_fraction: viol.map(|f| 1.0 - f),
        });
        clouds.push(cloud);
        println!(
            "plan  eps = {:<10.4e} {:<10} |v|^2 = {:>10}  test inside = {}",
            o.epsilon,
            o.report.status.label(),
            o.input
                .as_ref()
                .map_or("-".into(), |_| format!("{:.6}", o.energy)),
            viol.map_or("-".into(), |f| format!("{:.4}", 1.0 - f))
        );
    }
    let b = exp.config.target.as_ref().expect("target checked above");
    let doc = PlanDoc {
        header: RunHeader::new("plan", &exp),
        target_lo: b.lo.clone(),
        target_hi: b.hi.clone(),
        results: entries,
    };
    emit_results(&args.out, &doc)?;
    let mut points: Vec<(String, &DVector<f64>)> = Vec::new();
    for (k, (tr, te)) in clouds.iter().enumerate() {
        points.extend(tr.iter().map(|x| (format!("train_{k}"), x)));
        points.extend(te.iter().map(|x| (format!("test_{k}"), x)));
    }
    let all: Vec<DVector<f64>> = clouds
        .iter()
        .flat_map(|(a, b)| a.iter().chain(b))
        .cloned()
        .collect();
    let (lo, hi) = scatter_box(&all, &[]);
    let target_vs = polygon(&target, lo, hi);
    points.extend(target_vs.iter().map(|v| ("target".to_string(), v)));
    write_scatter(&args.out, &points)?;
    if args.svg {
        let mut sc = Scatter::new(format!("planned terminal states, t = {}", exp.horizon()));
        for (k, (tr, te)) in clouds.iter().enumerate() {
            let c = PALETTE[k % PALETTE.len()];
            sc.add_series(&format!("test, eps = {:.3e}", exp.epsilons[k]), c, te);
            sc.add_series(
                &format!("train, eps = {:.3e}", exp.epsilons[k]),
                "black",
                tr,
            );
        }
        sc.add_outline(
            "target",
            "black",
            target_vs.iter().map(|v| (v[0], v[1])).collect(),
        );
        std::fs::write(args.out.join("plot.svg"), sc.render())?;
    }
    emit_timings(
        &args.out,
        start,
        outcomes
            .iter()
            .map(|o| o.report.wall_time.as_secs_f64() * 1e3)
            .collect(),
    )?;
    Ok(
        if outcomes
            .iter()
            .all(|o| o.report.status == SolveStatus::Optimal)
        {
            EXIT_OK
        } else {
            EXIT_NUMERIC
        },
    )
}

#[derive(Debug, Serialize)]
struct CvarEntry {
    epsilon: f64,
    worst_case_cvar: Option<f64>,
    sample_cvar: Option<f64>,
}

#[derive(Debug, Serialize)]
struct CvarDoc<'a> {
    #[serde(flatten)]
    header: RunHeader<'a>,
    directions: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    test_empirical_cvar: f64,
    test_violation_fraction: f64,
    results: Vec<CvarEntry>,
}

/// The polytope scored by `cvar`: explicit offsets if configured, else the target box.
fn cvar_polytope(exp: &Experiment) -> Result<Polytope> {
    match (&exp.config.offsets, &exp.config.target) {
        (Some(_), _) => exp.direction_polytope(),
        (None, Some(_)) => exp.target(),
        (None, None) => Err(Error::Config(
            "cvar needs \"offsets\" (with directions) or a \"target\" box".into(),
        )),
    }
}

fn cmd_cvar(args: &RunArgs) -> Result<i32> {
    let start = Instant::now();
    let exp = load_experiment(args, None)?;
    let poly = cvar_polytope(&exp)?;
    prepare_out(&args.out)?;
    let outcomes = evaluate_cvar(&exp, &poly)?;
    let decision = Decision {
        poly: poly.clone(),
        input: exp.feedforward.clone(),
    };
    let ev = evaluate_out_of_sample(&exp, &decision, &exp.test)?;
    for o in &outcomes {
        println!(
            "cvar  eps = {:<10.4e} worst case = {:.6}  sample = {:.6}",
            o.epsilon, o.worst_case, o.sample_cvar
        );
    }
    let doc = CvarDoc {
        header: RunHeader::new("cvar", &exp),
        directions: poly
            .directions()
            .iter()
            .map(|a| a.iter().copied().collect())
            .collect(),
        offsets: poly.offsets().to_vec(),
        test_empirical_cvar: ev.empirical_cvar,
        test_violation_fraction: ev.violation_fraction,
        results: outcomes
            .iter()
            .map(|o| CvarEntry {
                epsilon: o.epsilon,
                worst_case_cvar: finite(o.worst_case),
                sample_cvar: finite(o.sample_cvar),
            })
            .collect(),
    };
    emit_results(&args.out, &doc)?;
    let train = training_states(&exp, &exp.feedforward)?;
    let mut points: Vec<(String, &DVector<f64>)> =
        train.iter().map(|x| ("train".to_string(), x)).collect();
    points.extend(ev.terminal_states.iter().map(|x| ("test".to_string(), x)));
    let (lo, hi) = scatter_box(&train, &ev.terminal_states);
    let vs = polygon(&poly, lo, hi);
    points.extend(vs.iter().map(|v| ("vertex".to_string(), v)));
    write_scatter(&args.out, &points)?;
    if args.svg {
        let mut sc = Scatter::new("worst-case CVaR polytope");
        sc.add_series("train", "#1f77b4", &train);
        sc.add_series("test", "#7f7f7f", &ev.terminal_states);
        sc.add_outline(
            "polytope",
            PALETTE[0],
            vs.iter().map(|v| (v[0], v[1])).collect(),
        );
        std::fs::write(args.out.join("plot.svg"), sc.render())?;
    }
    emit_timings(&args.out, start, Vec::new())?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct VerifyEntry {
    name: &'static str,
    trials: usize,
    worst: f64,
    tolerance: f64,
    passed: bool,
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let mut report = run_suite(args.seed, args.trials)?;
    if args.force_failure {
        report.checks.push(forced_failure_check()?);
    }
    for c in &report.checks {
        println!(
            "{:<32} {:>5} trials  worst {:>10.3e}  tol {:>8.1e}  {}",
            c.name,
            c.trials,
            c.worst,
            c.tolerance,
            if c.passed() { "PASS" } else { "FAIL" }
        );
    }
    if let Some(dir) = &args.out {
        prepare_out(dir)?;
        let entries: Vec<VerifyEntry> = report
            .checks
            .iter()
            .map(|c| VerifyEntry {
                name: c.name,
                trials: c.trials,
                worst: c.worst,
                tolerance: c.tolerance,
                passed: c.passed(),
            })
            .collect();
        write_json(&dir.join("verify.json"), &entries)?;
    }
    Ok(if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_VERIFY
    })
}

/// Box around the point clouds used to clip polytopes for plotting.
fn scatter_box(a: &[DVector<f64>], b: &[DVector<f64>]) -> ((f64, f64), (f64, f64)) {
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for x in a.iter().chain(b).filter(|x| x.len() >= 2) {
        lo = (lo.0.min(x[0]), lo.1.min(x[1]));
        hi = (hi.0.max(x[0]), hi.1.max(x[1]));
    }
    if !lo.0.is_finite() {
        return ((-10.0, -10.0), (10.0, 10.0));
    }
    let pad = ((hi.0 - lo.0).max(hi.1 - lo.1)).max(1.0);
    ((lo.0 - pad, lo.1 - pad), (hi.0 + pad, hi.1 + pad))
}

fn polygon(poly: &Polytope, lo: (f64, f64), hi: (f64, f64)) -> Vec<DVector<f64>> {
    if poly.dim() != 2 {
        return Vec::new();
    }
    clip_polytope(poly, lo, hi)
        .into_iter()
        .map(|(x, y)| DVector::from_vec(vec![x, y]))
        .collect()
}

fn write_scatter(dir: &Path, points: &[(String, &DVector<f64>)]) -> Result<()> {
    let refs: Vec<(&str, &DVector<f64>)> = points.iter().map(|(k, x)| (k.as_str(), *x)).collect();
    write_scatter_csv(&dir.join("scatter.csv"), &refs)
}
