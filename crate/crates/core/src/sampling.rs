//! Deterministic sample sets over boxes.

use crate::fields::DomainBox;

/// Default number of grid points per axis.
pub const DEFAULT_POINTS_PER_AXIS: usize = 5;

/// Largest tensor grid produced before switching to a Halton sequence.
pub const DEFAULT_GRID_CAP: usize = 256;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Cell midpoints of a tensor grid with `per_axis` points along each axis.
pub fn tensor_grid(domain: &DomainBox, per_axis: usize) -> Vec<Vec<f64>> {
    let dim = domain.dim();
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let unit: Vec<f64> = (0..dim)
                .map(|_| {
                    let i = idx % per_axis;
                    idx /= per_axis;
                    (i as f64 + 0.5) / per_axis as f64
                })
                .collect();
            domain.from_unit(&unit)
        })
        .collect()
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0 / base as f64;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f /= base as f64;
    }
    r
}

/// The first `count` points of the Halton sequence (skipping the origin),
/// mapped into the box.
pub fn halton(domain: &DomainBox, count: usize) -> Vec<Vec<f64>> {
    assert!(
        domain.dim() <= PRIMES.len(),
        "Halton sequence supports at most 16 axes"
    );
    (1..=count as u64)
        .map(|i| {
            let unit: Vec<f64> = PRIMES[..domain.dim()]
                .iter()
                .map(|&p| radical_inverse(i, p))
                .collect();
            domain.from_unit(&unit)
        })
        .collect()
}

/// A tensor grid when it has at most `cap` points, otherwise `cap` Halton
/// points.
pub fn sample_points(domain: &DomainBox, per_axis: usize, cap: usize) -> Vec<Vec<f64>> {
    let total = (per_axis as f64).powi(domain.dim() as i32);
    if total <= cap as f64 {
        tensor_grid(domain, per_axis)
    } else {
        halton(domain, cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_covers_box() {
        let b = DomainBox::cube(2, 1.0);
        let g = tensor_grid(&b, 5);
        assert_eq!(g.len(), 25);
        assert!(g.iter().all(|p| b.contains(p)));
        assert!(g.iter().any(|p| p[0] == 0.0 && p[1] == 0.0));
    }

    #[test]
    fn large_grids_switch_to_halton() {
        let b = DomainBox::cube(5, 1.0);
        let s = sample_points(&b, 5, 256);
        assert_eq!(s.len(), 256);
        assert!(s.iter().all(|p| b.contains(p)));
        assert_eq!(sample_points(&DomainBox::cube(3, 1.0), 5, 256).len(), 125);
    }

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(4, 2), 0.125);
    }
}
