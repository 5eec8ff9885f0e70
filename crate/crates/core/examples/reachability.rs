//! Data-driven reachable sets: for each radius, the smallest polytope with
//! fixed normals whose worst-case CVaR over the state ambiguity set is
//! non-positive, scored on 1000 fresh trajectories.
//!
//! Run: `cargo run --release --example reachability`

use ot_tube::apps::{evaluate_out_of_sample, reachability, Decision, Experiment, ExperimentConfig};

fn main() -> ot_tube::Result<()> {
    let mut cfg = ExperimentConfig::planar_benchmark();
    cfg.seed = 7;
    let exp = Experiment::prepare(&cfg, None)?;
    println!(
        "{} training trajectories, radii {:?}",
        exp.training.len(),
        exp.epsilons
    );
    for out in reachability(&exp)? {
        let Some(poly) = out.polytope(&exp.directions) else {
            println!("eps {:.4}: {}", out.epsilon, out.report.status.label());
            continue;
        };
        let eval = evaluate_out_of_sample(
            &exp,
            &Decision {
                poly,
                input: exp.feedforward.clone(),
            },
            &exp.test,
        )?;
        println!(
            "eps {:.4}: sum b = {:>9.4}, certified CVaR {:+.1e}, test violations {:.3}",
            out.epsilon,
            out.offset_sum,
            out.certified_cvar.unwrap_or(f64::NAN),
            eval.violation_fraction
        );
    }
    Ok(())
}
