//! State ambiguity sets of a stochastic LTI system over growing horizons,
//! built from five noise trajectories: the radius grows linearly in `t`
//! while the cost geometry follows the lifted noise map.
//!
//! Run: `cargo run --example state_tube`

use nalgebra::DVector;
use ot_tube::apps::{Experiment, ExperimentConfig};
use ot_tube::lti::{lift, spectral_radius, state_ambiguity};
use ot_tube::propagation::{cost_spectrum, LiftMode};
use ot_tube::transport::TransportationCost;

fn main() -> ot_tube::Result<()> {
    let cfg = ExperimentConfig::planar_benchmark();
    let exp = Experiment::prepare(&cfg, None)?;
    let sys = &exp.system;
    println!("LQR gain K ={}", sys.k());
    println!(
        "closed-loop spectral radius {:.4}",
        spectral_radius(&sys.closed_loop())
    );

    let eps = 0.05;
    let noise = exp.noise_ball(eps)?;
    for t in [1, 2, 5, 10] {
        let batch = ot_tube::distributions::TrajectoryBatch::new(
            exp.training
                .trajectories()
                .iter()
                .map(|w| w.rows(w.len() - 2 * t, 2 * t).clone_owned())
                .collect(),
            t,
            2,
        )?;
        let v = DVector::zeros(2 * t);
        let ball = state_ambiguity(sys, t, &v, &noise, LiftMode::Trajectories(&batch))?;
        let TransportationCost::SqEuclidComposed(m) = ball.cost() else {
            unreachable!()
        };
        let spectrum: Vec<f64> = cost_spectrum(m).into_iter().map(|(s, _)| s).collect();
        let ops = lift(sys, t)?;
        println!(
            "t = {t:>2}: radius {:.3}, {} atoms, cost eigenvalues {:?}, D_t full row-rank: {}",
            ball.radius(),
            ball.center().len(),
            spectrum,
            ops.noise_map_full_row_rank()
        );
    }
    Ok(())
}
