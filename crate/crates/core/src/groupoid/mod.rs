//! The tangent groupoid `G M ⊔ (M x M x (0, inf))` in Heisenberg charts:
//! elements, range and source, composition, charts and their transitions,
//! the continuity and composition limits, and the functor `Phi_H`.

mod chart;
mod checks;

pub use chart::{GroupoidChart, GroupoidElement, UnitElement, CACHE_QUANTUM, POINT_TOL};
pub use checks::{
    composition_limit_check, continuity_check, continuity_check_across, functor_chart_residual,
    functor_phi_h, jacobian_spot_check, transition, transition_rate, CompositionLimit,
    ContinuityReport, HeisenbergDiffeo, JacobianSpot,
};
