//! The brute-force oracle suite: every fast routine checked against an
//! independent slow one on random instances.
//!
//! Run: `cargo run --release --example verify`

use ot_tube::oracle::run_suite;

fn main() -> ot_tube::Result<()> {
    let report = run_suite(2024, 20)?;
    for c in &report.checks {
        println!(
            "{:<32} worst {:>9.2e} (tol {:.0e}) {}",
            c.name,
            c.worst,
            c.tolerance,
            if c.passed() { "ok" } else { "FAILED" }
        );
    }
    println!("all passed: {}", report.all_passed());
    Ok(())
}
