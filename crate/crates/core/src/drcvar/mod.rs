//! CVaR, the distributionally robust CVaR constraint over an OT ambiguity set,
//! its finite constraint-system reformulation, and the LP/QP backends.

mod cvar;
mod gamma;
mod lp;
mod polytope;
mod qp;
mod solve;

pub use cvar::{check_level, cvar, cvar_with_threshold, empirical_cvar};
pub use gamma::{build_gamma, GammaProgram};
pub use polytope::{grid_directions, Polytope};
pub use solve::{
    solve_fixed_lambda, solve_outer, worst_case_cvar, LambdaEval, Objective, Primal, SolveReport,
    SolveStatus, WorstCase, LOG_LAMBDA_MAX, LOG_LAMBDA_MIN,
};
