//! Vector fields, H-frames, Lie brackets and the Levi form matrix.

mod frame;
mod vector_field;

pub use frame::{
    pushforward_preserves_h, DomainBox, HFrame, HPreservation, StructureConstants, DEFAULT_DET_TOL,
};
pub use vector_field::VectorField;
