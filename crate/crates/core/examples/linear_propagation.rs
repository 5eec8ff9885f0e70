//! Pushing an OT ball through a linear map: the image ball keeps the radius,
//! moves the center and composes the cost with the pseudoinverse. For a full
//! row-rank map the result is exact; otherwise it is an outer approximation.
//!
//! Run: `cargo run --example linear_propagation`

use nalgebra::{dmatrix, dvector};
use ot_tube::distributions::DiscreteDistribution;
use ot_tube::propagation::{propagate_linear, pseudoinverse, translate};
use ot_tube::transport::{AmbiguitySet, TransportationCost};

fn main() -> ot_tube::Result<()> {
    let p =
        DiscreteDistribution::empirical(vec![dvector![1.0, 0.0, 0.0], dvector![0.0, 1.0, -1.0]])?;
    let ball = AmbiguitySet::new(p, TransportationCost::squared_euclidean(3), 0.25)?;

    let wide = dmatrix![1.0, 0.0, 1.0; 0.0, 2.0, 0.0];
    let pinv = pseudoinverse(&wide)?;
    println!(
        "rank {} singular values {:?}",
        pinv.rank(),
        pinv.singular_values().as_slice()
    );

    let image = propagate_linear(&ball, &wide)?;
    println!(
        "full row-rank map: radius {} ({})",
        image.radius(),
        image.exactness().label()
    );
    for (x, w) in image.center().iter() {
        println!("  atom {:?} weight {w}", x.as_slice());
    }
    let shifted = translate(&image, &dvector![10.0, -10.0])?;
    println!(
        "after translation, mean {:?}",
        shifted.center().mean().as_slice()
    );

    // projecting onto one axis twice over: rank one, two output rows
    let flat = dmatrix![1.0, 0.0, 0.0; 2.0, 0.0, 0.0];
    let collapsed = propagate_linear(&ball, &flat)?;
    println!("rank-deficient map: {}", collapsed.exactness().label());
    let off_range = DiscreteDistribution::dirac(dvector![1.0, 0.0])?;
    println!(
        "dirac at (1, 0) supported on the range? {}",
        collapsed.support_in_range(&off_range)?
    );
    Ok(())
}
