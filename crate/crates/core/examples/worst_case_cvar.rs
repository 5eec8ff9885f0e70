//! Worst-case CVaR of a polytope over an OT ball of terminal states, compared
//! with the sample CVaR and with the brute-force grid search.
//!
//! Run: `cargo run --release --example worst_case_cvar`

use nalgebra::DVector;
use ot_tube::apps::{Experiment, ExperimentConfig};
use ot_tube::drcvar::{cvar, worst_case_cvar, Polytope};
use ot_tube::oracle::cvar_grid;

fn main() -> ot_tube::Result<()> {
    let exp = Experiment::prepare(&ExperimentConfig::planar_benchmark(), None)?;
    let poly = Polytope::axis_box(
        &DVector::from_element(2, -0.3),
        &DVector::from_element(2, 0.3),
    )?;
    for eps in [0.0, 0.01, 0.05, 0.2] {
        let ball = exp.state_ball(eps, &exp.feedforward)?;
        let losses: Vec<f64> = ball.center().atoms().iter().map(|x| poly.loss(x)).collect();
        let sample = cvar(&losses, ball.center().weights(), exp.gamma())?;
        let wc = worst_case_cvar(&ball, &poly, exp.gamma())?;
        let grid = cvar_grid(&ball, &poly, exp.gamma(), 100)?;
        println!("eps {eps:<5} sample CVaR {sample:>9.5}  worst case {wc:>9.5}  grid {grid:>9.5}");
    }
    Ok(())
}
