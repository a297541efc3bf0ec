//! Fixtures shared by the kernel benchmarks.

use hgroupoid_core::fields::{DomainBox, HFrame};
use hgroupoid_core::jets::{exponents_up_to, Jet, PolyMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense jet in `dim` variables with every monomial of degree `<= order`
/// and coefficients uniform in `[-1/2, 1/2)`.
pub fn dense_jet(dim: usize, order: u32, seed: u64) -> Jet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(f64, Vec<u8>)> = exponents_up_to(dim, order)
        .iter()
        .map(|e| (rng.random_range(-0.5..0.5), e.powers().to_vec()))
        .collect();
    Jet::from_terms(
        dim,
        order,
        &vec![0.0; dim],
        terms.iter().map(|(c, e)| (*c, e.as_slice())),
    )
    .expect("finite coefficients")
}

/// Near-identity polynomial map with small dense nonlinear terms.
pub fn near_identity(dim: usize, order: u32) -> PolyMap {
    let base = vec![0.0; dim];
    let comps = (0..dim)
        .map(|i| {
            let nonlinear = dense_jet(dim, order, i as u64 + 7)
                .filter(|e| e.degree() >= 2)
                .scale(0.1);
            Jet::variable(dim, order, &base, i)
                .add(&nonlinear)
                .expect("compatible jets")
        })
        .collect();
    PolyMap::new(comps).expect("compatible components")
}

pub fn heisenberg_frame(n: usize, order: u32) -> HFrame {
    HFrame::heisenberg(n, order, DomainBox::cube(2 * n + 1, 4.0)).expect("standard frame")
}
