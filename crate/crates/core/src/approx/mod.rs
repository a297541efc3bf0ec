//! Tangent maps of Heisenberg diffeomorphisms, their graded expansions, and
//! convergence-rate fitting.

mod rate;
mod tangent;

pub use rate::{
    denoise, rate_fit, roundoff_floor, RateFit, RateReport, TGrid, Verdict, EXACT_TOL,
    MIN_FIT_POINTS, ROUNDOFF_FACTOR, SLOPE_TOL,
};
pub use tangent::{
    diffeo_expansion_check, heisenberg_conjugate, tangent_map_h, ExpansionCheck, TangentMapH, H_TOL,
};
