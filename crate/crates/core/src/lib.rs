//! Tangent Lie group bundle and tangent groupoid of a Heisenberg manifold,
//! computed from chart data.
//!
//! A Heisenberg manifold is described locally by an H-frame: polynomial
//! vector fields `X_0, ..., X_d` on a box, with `X_1, ..., X_d` spanning the
//! distinguished hyperplane bundle `H`. From this data the crate builds
//!
//! * the Levi form matrix `L` of the frame ([`fields`]),
//! * privileged and Heisenberg coordinates and model vector fields ([`coords`]),
//! * the graded 2-step nilpotent tangent groups and their classification
//!   ([`group`]),
//! * tangent maps of Heisenberg diffeomorphisms and their approximation
//!   rates ([`approx`]),
//! * the tangent groupoid with its charts, composition and functor
//!   ([`groupoid`]).
//!
//! Everything is computed with truncated jets ([`jets`]).

pub mod approx;
pub mod coords;
pub mod error;
pub mod fields;
pub mod group;
pub mod groupoid;
pub mod jets;
pub mod sampling;

pub use error::{Error, Result};
pub use fields::{DomainBox, HFrame, StructureConstants, VectorField};
pub use group::{GroupElement, GroupType, TangentGroup};
pub use jets::{Exponent, Jet, PolyMap};

/// A point in chart coordinates.
pub type Point = nalgebra::DVector<f64>;
