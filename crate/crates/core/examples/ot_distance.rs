//! Exact OT discrepancy between two small empirical distributions, with the
//! optimal coupling, and the ball membership test built on it.
//!
//! Run: `cargo run --example ot_distance`

use nalgebra::dvector;
use ot_tube::distributions::DiscreteDistribution;
use ot_tube::transport::{ot_discrepancy, AmbiguitySet, TransportationCost};

fn main() -> ot_tube::Result<()> {
    let p = DiscreteDistribution::empirical(vec![
        dvector![0.0, 0.0],
        dvector![1.0, 0.0],
        dvector![0.0, 1.0],
    ])?;
    let q = DiscreteDistribution::new(
        vec![dvector![0.5, 0.5], dvector![2.0, 0.0]],
        vec![0.75, 0.25],
    )?;
    let c = TransportationCost::squared_euclidean(2);

    let (value, plan) = ot_discrepancy(&c, &p, &q)?;
    println!("OT(P, Q) = {value:.6}");
    println!(
        "coupling (rows: atoms of P, columns: atoms of Q):{}",
        plan.coupling()
    );

    // the |.|^1 cost on the line is the earth mover's distance
    let emd = TransportationCost::power_norm(1.0)?;
    let a = DiscreteDistribution::empirical(vec![dvector![0.0], dvector![1.0]])?;
    let b = DiscreteDistribution::empirical(vec![dvector![0.5], dvector![3.0]])?;
    println!("EMD on the line = {:.6}", ot_discrepancy(&emd, &a, &b)?.0);

    for eps in [0.5, 1.0] {
        let ball = AmbiguitySet::new(p.clone(), c.clone(), eps)?;
        println!("Q in B_{eps}(P)? {}", ball.contains(&q, 1e-12)?);
    }
    Ok(())
}
