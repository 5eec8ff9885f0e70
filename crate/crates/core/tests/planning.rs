//! Planning feasibility against a brute-force search over terminal shifts.
//!
//! With `B = I` the lifted input map is onto, so a feedforward exists iff some
//! shift `y` of the state ball gives worst-case CVaR <= 0.

use nalgebra::DVector;
use ot_tube::apps::{plan_trajectory, Experiment, ExperimentConfig};
use ot_tube::drcvar::{worst_case_cvar, SolveStatus};
use ot_tube::propagation::translate;

fn best_shift(exp: &Experiment, eps: f64) -> f64 {
    let ball = exp
        .state_ball(eps, &DVector::zeros(exp.feedforward.len()))
        .unwrap();
    let target = exp.target().unwrap();
    let (mut cx, mut cy, mut h) = (1.5, 1.5, 1.0);
    let mut best = f64::INFINITY;
    for _ in 0..30 {
        let mut arg = (cx, cy);
        for i in -8..=8 {
            for j in -8..=8 {
                let y = DVector::from_vec(vec![cx + h * i as f64 / 8.0, cy + h * j as f64 / 8.0]);
                let wc =
                    worst_case_cvar(&translate(&ball, &y).unwrap(), &target, exp.gamma()).unwrap();
                if wc < best {
                    best = wc;
                    arg = (y[0], y[1]);
                }
            }
        }
        (cx, cy, h) = (arg.0, arg.1, h * 0.5);
    }
    best
}

#[test]
fn feasibility_boundary_matches_shift_search() {
    // radii close to where the target stops being certifiable
    for (seed, eps) in [(7u64, 0.035), (7, 0.04), (4, 0.037), (9, 0.04)] {
        let mut cfg = ExperimentConfig::planar_benchmark();
        cfg.seed = seed;
        cfg.test_count = 0;
        cfg.epsilons = Some(vec![eps]);
        let exp = Experiment::prepare(&cfg, None).unwrap();
        let out = &plan_trajectory(&exp).unwrap()[0];
        let wc = best_shift(&exp, eps);
        assert!(
            wc.abs() > 1e-3,
            "seed {seed} eps {eps}: too close to the boundary ({wc})"
        );
        let feasible = out.report.status == SolveStatus::Optimal;
        assert_eq!(
            feasible,
            wc < 0.0,
            "seed {seed} eps {eps}: planner {:?}, best shift {wc}",
            out.report.status
        );
    }
}
