//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::{dvector, DMatrix};
use rand::Rng;

use ot_tube::apps::{
    evaluate_out_of_sample, plan_trajectory, reachability, Decision, Experiment, ExperimentConfig,
};
use ot_tube::distributions::DiscreteDistribution;
use ot_tube::drcvar::SolveStatus;
use ot_tube::lti::simulate;
use ot_tube::oracle::{
    check_dirac, check_gamma, check_lift, check_ot, check_pinv, check_product_lift,
    check_propagation, trial_rng, Check,
};
use ot_tube::propagation::{lift_product, normalize_isotropic, propagate_linear, LiftMode};
use ot_tube::transport::{AmbiguitySet, TransportationCost};

const SEED: u64 = 20240901;
const SEEDS: u64 = 10;

struct Outcome {
    passed: bool,
    detail: String,
}

fn checks(cs: &[Check]) -> Outcome {
    let passed = cs.iter().all(Check::passed);
    let detail = cs
        .iter()
        .map(|c| {
            format!(
                "{} x{}: worst {:.2e} <= {:.0e}",
                c.name, c.trials, c.worst, c.tolerance
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { passed, detail }
}

fn and(mut a: Outcome, ok: bool, detail: String) -> Outcome {
    a.passed &= ok;
    a.detail = format!("{}; {detail}", a.detail);
    a
}

fn within(o: Outcome, elapsed: Duration, limit_s: f64) -> Outcome {
    let secs = elapsed.as_secs_f64();
    and(
        o,
        secs < limit_s,
        format!("runtime {secs:.2}s < {limit_s}s"),
    )
}

fn ot_correctness() -> ot_tube::Result<Outcome> {
    let start = Instant::now();
    let o = checks(&[check_ot(SEED, 100)?, check_dirac(SEED, 100)?]);
    Ok(within(o, start.elapsed(), 10.0))
}

fn pseudoinverse() -> ot_tube::Result<Outcome> {
    Ok(checks(&[check_pinv(SEED, 100)?]))
}

fn propagation_through_maps() -> ot_tube::Result<Outcome> {
    let (eq, inc) = check_propagation(SEED, 50)?;
    let o = checks(&[eq, inc]);
    let c = TransportationCost::power_norm(1.0)?;
    let eps = 0.3;
    let origin = DiscreteDistribution::dirac(dvector![0.0])?;
    let ball = AmbiguitySet::new(origin.clone(), c, eps)?;

    // scalar A = 2: the image is the plain ball of radius 2 eps
    let doubled = propagate_linear(&ball, &DMatrix::from_element(1, 1, 2.0))?;
    let plain = normalize_isotropic(&doubled).expect("scalar map is isotropic");
    let factor_two = plain.radius() == 2.0 * eps && plain.center() == &origin;

    // A = 0: only the Dirac at zero survives
    let zero = propagate_linear(&ball, &DMatrix::zeros(1, 1))?;
    let collapsed = zero.contains(&origin, 0.0)?
        && zero.distance_to(&origin)? == 0.0
        && !zero.support_in_range(&DiscreteDistribution::dirac(dvector![1e-3])?)?
        && !zero.support_in_range(&DiscreteDistribution::dirac(dvector![-eps])?)?;
    Ok(and(
        o,
        factor_two && collapsed,
        format!(
            "scalar A = 2 radius {} (want {}), A = 0 collapse {collapsed}",
            plain.radius(),
            2.0 * eps
        ),
    ))
}

fn product_lift() -> ot_tube::Result<Outcome> {
    let o = checks(&[check_product_lift(SEED, 30)?]);
    let mut rng = trial_rng(SEED, 999);
    let mut exact = true;
    for t in 1..=12usize {
        let eps: f64 = rng.random_range(0.0..1.0);
        let atoms = (0..3)
            .map(|_| dvector![rng.random_range(-1.0..1.0)])
            .collect();
        let ball = AmbiguitySet::new(
            DiscreteDistribution::empirical(atoms)?,
            TransportationCost::squared_euclidean(1),
            eps,
        )?;
        let lifted = lift_product(&ball, t, LiftMode::Enumerate { cap: 1_000_000 })?;
        exact &= lifted.radius() == t as f64 * eps;
    }
    Ok(and(
        o,
        exact,
        format!("lifted radius == t * eps exactly for t = 1..12: {exact}"),
    ))
}

fn state_formula() -> ot_tube::Result<Outcome> {
    let mut cfg = ExperimentConfig::planar_benchmark();
    cfg.system.x0 = vec![1.5, -0.5];
    cfg.feedforward = Some((0..20).map(|k| ((k as f64) * 0.7).sin()).collect());
    cfg.test_count = 0;
    let exp = Experiment::prepare(&cfg, None)?;
    let sys = &exp.system;
    let t = exp.horizon();
    let v = &exp.feedforward;
    let ball = exp.state_ball(0.1, v)?;
    let phi = sys.closed_loop();
    let mut worst = 0.0_f64;
    for (atom, w) in ball
        .center()
        .atoms()
        .iter()
        .zip(exp.training.trajectories())
    {
        // x_t = Phi^t x0 + sum_k Phi^(t-1-k) (B v_k + D w_k), stacked latest first
        let mut x = phi.pow(t as u32) * sys.x0();
        for k in 0..t {
            let blk = t - 1 - k;
            x += phi.pow((t - 1 - k) as u32)
                * (sys.b() * v.rows(2 * blk, 2) + sys.d() * w.rows(2 * blk, 2));
        }
        worst = worst.max((atom - &x).amax());
    }
    // the simulated terminal states agree as well
    for (atom, path) in ball
        .center()
        .atoms()
        .iter()
        .zip(simulate(sys, v, &exp.training)?)
    {
        worst = worst.max((atom - path.last().expect("non-empty path")).amax());
    }
    let formula_ok = worst <= 1e-9 && ball.center().len() == 5 && t == 10;
    let o = checks(&[check_lift(SEED, 100)?]);
    Ok(and(
        o,
        formula_ok,
        format!("center atoms vs explicit formula (t = {t}, 5 trajectories): {worst:.2e} <= 1e-9"),
    ))
}

fn gamma_system() -> ot_tube::Result<Outcome> {
    let (eq, grid, zero) = check_gamma(SEED, 30, 200)?;
    Ok(checks(&[eq, grid, zero]))
}

fn seeded(seed: u64, eps: Option<Vec<f64>>) -> ot_tube::Result<Experiment> {
    let mut cfg = ExperimentConfig::planar_benchmark();
    cfg.seed = seed;
    cfg.epsilons = eps;
    Experiment::prepare(&cfg, None)
}

fn reach_property() -> ot_tube::Result<Outcome> {
    let start = Instant::now();
    let mut monotone = 0;
    let mut fewer_violations = 0;
    let mut line = Vec::new();
    for seed in 0..SEEDS {
        let exp = seeded(seed, None)?;
        let out = reachability(&exp)?;
        let sums: Vec<f64> = out.iter().map(|o| o.offset_sum).collect();
        let all_optimal = out.iter().all(|o| o.report.status == SolveStatus::Optimal);
        if all_optimal && sums.windows(2).all(|w| w[1] <= w[0]) {
            monotone += 1;
        }
        let mut viol = Vec::new();
        for o in out
            .iter()
            .filter(|o| o.report.status == SolveStatus::Optimal)
        {
            let poly = o
                .polytope(&exp.directions)
                .expect("optimal outcome has offsets");
            let ev = evaluate_out_of_sample(
                &exp,
                &Decision {
                    poly,
                    input: exp.feedforward.clone(),
                },
                &exp.test,
            )?;
            viol.push(ev.violation_fraction);
        }
        if all_optimal && viol.last() < viol.first() {
            fewer_violations += 1;
        }
        line.push(format!(
            "{:.3}->{:.3}",
            viol.first().unwrap_or(&f64::NAN),
            viol.last().unwrap_or(&f64::NAN)
        ));
    }
    let majority = SEEDS / 2 + 1;
    let ok = monotone >= majority && fewer_violations >= majority;
    let o = Outcome {
        passed: ok,
        detail: format!(
            "sum b non-increasing in {monotone}/{SEEDS} seeds, test violations drop in {fewer_violations}/{SEEDS} ({})",
            line.join(" ")
        ),
    };
    Ok(within(o, start.elapsed(), 60.0))
}

fn plan_property() -> ot_tube::Result<Outcome> {
    let start = Instant::now();
    let sweep = vec![0.0, 0.015, 0.03];
    let mut energy_ok = 0;
    let mut inside_ok = 0;
    let mut certified = true;
    let mut worst_cert = f64::NEG_INFINITY;
    for seed in 0..SEEDS {
        let exp = seeded(seed, Some(sweep.clone()))?;
        let target = exp.target()?;
        let out = plan_trajectory(&exp)?;
        let mut energy = Vec::new();
        let mut inside = Vec::new();
        for o in &out {
            let (Some(v), Some(cert)) = (&o.input, o.certified_cvar) else {
                certified = false;
                continue;
            };
            worst_cert = worst_cert.max(cert);
            certified &= cert <= 1e-6;
            energy.push(o.energy);
            let ev = evaluate_out_of_sample(
                &exp,
                &Decision {
                    poly: target.clone(),
                    input: v.clone(),
                },
                &exp.test,
            )?;
            inside.push(1.0 - ev.violation_fraction);
        }
        let complete = energy.len() == sweep.len();
        if complete && energy.windows(2).all(|w| w[1] >= w[0]) {
            energy_ok += 1;
        }
        if complete && inside.windows(2).all(|w| w[1] >= w[0]) {
            inside_ok += 1;
        }
    }
    let majority = SEEDS / 2 + 1;
    let ok = energy_ok == SEEDS && inside_ok >= majority && certified;
    let o = Outcome {
        passed: ok,
        detail: format!(
            "|v|^2 non-decreasing in {energy_ok}/{SEEDS} seeds, inside fraction non-decreasing in {inside_ok}/{SEEDS}, \
             max certified CVaR {worst_cert:.1e} <= 1e-6"
        ),
    };
    Ok(within(o, start.elapsed(), 90.0))
}

fn determinism() -> ot_tube::Result<Outcome> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir()?;
    let mut same = true;
    let mut detail = Vec::new();
    for (cmd, cfg) in [
        ("reach", "fig1.json"),
        ("plan", "fig2.json"),
        ("cvar", "fig2.json"),
    ] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{cmd}{run}"));
            let config = root.join(cfg);
            let args = [
                "ot-tube",
                cmd,
                "--config",
                config.to_str().expect("utf-8 path"),
                "--seed",
                "7",
                "--out",
                out.to_str().expect("utf-8 path"),
            ];
            let code = ot_tube::cli::run(args);
            same &= code == 0;
            outputs.push(std::fs::read(out.join("results.json"))?);
        }
        let identical = outputs[0] == outputs[1];
        same &= identical;
        detail.push(format!(
            "{cmd}: {} bytes identical={identical}",
            outputs[0].len()
        ));
    }
    Ok(Outcome {
        passed: same,
        detail: detail.join(", "),
    })
}

fn main() {
    let criteria: [(&str, fn() -> ot_tube::Result<Outcome>); 9] = [
        ("1 OT correctness", ot_correctness),
        ("2 pseudoinverse", pseudoinverse),
        ("3 linear propagation", propagation_through_maps),
        ("4 product lifting", product_lift),
        ("5 state center formula", state_formula),
        ("6 constraint system", gamma_system),
        ("7 reachability", reach_property),
        ("8 planning", plan_property),
        ("9 determinism", determinism),
    ];
    let total = Instant::now();
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let (ok, detail) = match f() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {name:<24} {} ({:.2}s) {detail}",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of 9 criteria passed in {:.1}s",
        9 - failed,
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
