//! Optimal transport ambiguity sets for stochastic linear systems.
//!
//! The crate models distributional uncertainty as a ball of probability
//! distributions around a finitely supported center, measured with an
//! optimal transport discrepancy. Such balls propagate exactly through
//! full row-rank linear maps, which makes them a natural uncertainty model
//! for linear time-invariant systems driven by noise that is only known
//! through a handful of samples.
//!
//! Layout:
//!
//! - [`distributions`]: finitely supported distributions, pushforward,
//!   delta-convolution and product powers.
//! - [`transport`]: transportation costs, the exact discrete OT discrepancy
//!   (transportation simplex) and the [`transport::AmbiguitySet`] type.
//! - [`propagation`]: pseudoinverse machinery and the ambiguity-set algebra
//!   (linear propagation, translation, product lifting, bounding balls).
//! - [`lti`]: stochastic LTI systems, horizon lifting, state ambiguity sets,
//!   LQR synthesis and simulation.
//! - [`drcvar`]: CVaR, the distributionally robust CVaR constraint system and
//!   its LP/QP backends.
//! - [`apps`]: reachability analysis and trajectory planning.
//! - [`oracle`]: slow, independent verifiers used by tests and `verify`.
//! - [`cli`]: the command-line front end behind the `ot-tube` binary.

pub mod apps;
pub mod cli;
pub mod distributions;
pub mod drcvar;
mod error;
pub mod io;
pub mod lti;
pub mod oracle;
pub mod propagation;
pub mod svg;
pub mod transport;

pub use error::{Error, Result};

pub use nalgebra::{DMatrix, DVector};
