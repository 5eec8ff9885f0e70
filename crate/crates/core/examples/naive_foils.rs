//! Why the center alone is not enough: pushing only the center of a ball
//! through `A` and reusing the radius both over- and underestimates the true
//! image, and scaling the radius by the Lipschitz constant stays conservative.
//!
//! Run: `cargo run --example naive_foils`

use nalgebra::{dvector, DMatrix, DVector};
use ot_tube::distributions::DiscreteDistribution;
use ot_tube::oracle::{naive_foil, Witness};
use ot_tube::transport::TransportationCost;

fn show(name: &str, w: &Option<Witness>) {
    match w {
        Some(w) => println!(
            "  {name:<24} naive ball: {:<5} Lipschitz ball: {:<5} true image: {}",
            w.in_naive, w.in_lipschitz, w.in_true_image
        ),
        None => println!("  {name:<24} none"),
    }
}

fn main() -> ot_tube::Result<()> {
    let c = TransportationCost::power_norm(1.0)?;
    let eps = 0.5;
    let origin = DiscreteDistribution::dirac(dvector![0.0])?;

    for a in [0.0, 2.0] {
        let rep = naive_foil(&origin, &DMatrix::from_element(1, 1, a), &c, eps)?;
        println!(
            "A = {a}: naive radius {}, Lipschitz radius {}",
            rep.naive_radius, rep.lipschitz_radius
        );
        show("overestimate", &rep.overestimate);
        show("underestimate", &rep.underestimate);
    }

    let n = 5.0;
    let a = DMatrix::from_diagonal(&dvector![0.0, 0.0, n]);
    let rep = naive_foil(
        &DiscreteDistribution::dirac(DVector::zeros(3))?,
        &a,
        &c,
        eps,
    )?;
    println!(
        "A = diag(0, 0, {n}): Lipschitz radius {}",
        rep.lipschitz_radius
    );
    show("Lipschitz conservative", &rep.lipschitz_conservative);
    Ok(())
}
