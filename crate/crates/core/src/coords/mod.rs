//! Privileged and Heisenberg coordinates, model vector fields, and dilation
//! limits.

mod maps;
mod model;

pub use maps::{
    b_matrix, heisenberg_map, privileged_map, push_through_shear, HeisenbergMap, PrivilegedMap,
};
pub use model::{
    dilation_limit_check, dilation_scaled, leading_part, model_field, normal_form_check,
    ModelField, NormalFormCheck, A0_REL_TOL,
};
