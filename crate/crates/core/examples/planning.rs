//! Minimum-energy feedforward that steers the terminal state into the box
//! `[1, 2]^2` with non-positive worst-case CVaR of leaving it. Larger radii
//! cost more input energy and keep more test trajectories inside.
//!
//! Run: `cargo run --release --example planning`

use ot_tube::apps::{
    evaluate_out_of_sample, plan_trajectory, Decision, Experiment, ExperimentConfig,
};

fn main() -> ot_tube::Result<()> {
    let mut cfg = ExperimentConfig::planar_benchmark();
    cfg.epsilons = Some(vec![0.0, 0.01, 0.02, 0.04, 0.2]);
    let exp = Experiment::prepare(&cfg, None)?;
    let target = exp.target()?;
    for out in plan_trajectory(&exp)? {
        match &out.input {
            Some(v) => {
                let eval = evaluate_out_of_sample(
                    &exp,
                    &Decision {
                        poly: target.clone(),
                        input: v.clone(),
                    },
                    &exp.test,
                )?;
                println!(
                    "eps {:.3}: |v|^2 = {:.4}, certified CVaR {:+.1e}, test inside {:.3}",
                    out.epsilon,
                    out.energy,
                    out.certified_cvar.unwrap_or(f64::NAN),
                    1.0 - eval.violation_fraction
                );
            }
            None => println!(
                "eps {:.3}: {} (no input can certify the target)",
                out.epsilon,
                out.report.status.label()
            ),
        }
    }
    Ok(())
}
