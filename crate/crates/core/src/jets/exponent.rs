use std::cmp::Ordering;
use std::fmt;

/// Exponent multi-index of a monomial `x_0^a_0 ... x_n^a_n`.
///
/// Ordered graded-lexicographically: lower total degree first, then
/// larger powers of earlier variables first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Exponent(Box<[u8]>);

impl Exponent {
    pub fn new(powers: &[u8]) -> Self {
        Exponent(powers.into())
    }

    pub fn zero(dim: usize) -> Self {
        Exponent(vec![0; dim].into_boxed_slice())
    }

    /// The exponent of the single variable `x_i`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = vec![0; dim];
        v[i] = 1;
        Exponent(v.into_boxed_slice())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn powers(&self) -> &[u8] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&a| a as u32).sum()
    }

    /// Degree with respect to the weights `(2, 1, ..., 1)`.
    pub fn weighted_degree(&self) -> u32 {
        self.degree() + self.0.first().copied().unwrap_or(0) as u32
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn add(&self, other: &Exponent) -> Exponent {
        debug_assert_eq!(self.dim(), other.dim());
        Exponent(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// `self - e_i`, or `None` when the power of `x_i` is zero.
    pub fn lower(&self, i: usize) -> Option<Exponent> {
        if self.0[i] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[i] -= 1;
        Some(Exponent(v))
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// All exponents in `dim` variables with total degree at most `order`, in
/// graded-lexicographic order.
pub fn exponents_up_to(dim: usize, order: u32) -> Vec<Exponent> {
    fn rec(dim: usize, left: u32, prefix: &mut Vec<u8>, out: &mut Vec<Exponent>) {
        if prefix.len() == dim {
            out.push(Exponent::new(prefix));
            return;
        }
        for a in 0..=left {
            prefix.push(a as u8);
            rec(dim, left - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, order, &mut Vec::with_capacity(dim), &mut out);
    out.sort();
    out
}
