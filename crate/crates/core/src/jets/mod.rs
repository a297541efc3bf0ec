//! Truncated multivariate Taylor polynomials (jets) and polynomial maps.
//!
//! Every geometric computation in this crate reduces to operations here:
//! truncated products, partial derivatives, composition of polynomial maps,
//! and formal inverses. Coefficients are binary64; storage is sparse and keyed
//! by exponent in graded-lexicographic order.

mod exponent;
mod jet;
mod polymap;

pub use exponent::{exponents_up_to, Exponent};
pub use jet::Jet;
pub use polymap::{checked_inverse, compose, invert, PolyMap};

/// Default truncation order.
pub const DEFAULT_ORDER: u32 = 3;

/// Grading weights `(2, 1, ..., 1)` of the coordinates.
pub fn weight(i: usize) -> i32 {
    if i == 0 {
        2
    } else {
        1
    }
}
