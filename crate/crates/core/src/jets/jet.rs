use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use super::exponent::Exponent;
use crate::error::{Error, Result};

/// Tolerance used when checking that two expansion points coincide.
pub(crate) const BASE_TOL: f64 = 1e-12;

/// A multivariate Taylor polynomial `sum c_a (x - base)^a` truncated at total
/// degree `order`.
///
/// Only nonzero coefficients are stored. Products and compositions drop every
/// term whose total degree exceeds `order`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    dim: usize,
    order: u32,
    base: Vec<f64>,
    coeffs: BTreeMap<Exponent, f64>,
}

impl Jet {
    pub fn zero(dim: usize, order: u32, base: &[f64]) -> Self {
        assert_eq!(base.len(), dim, "base point has wrong dimension");
        Jet {
            dim,
            order,
            base: base.to_vec(),
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, order: u32, base: &[f64], value: f64) -> Self {
        let mut j = Self::zero(dim, order, base);
        j.insert(Exponent::zero(dim), value);
        j
    }

    /// The coordinate function `x_i`, expanded at `base`.
    pub fn variable(dim: usize, order: u32, base: &[f64], i: usize) -> Self {
        let mut j = Self::constant(dim, order, base, base[i]);
        if order >= 1 {
            j.insert(Exponent::unit(dim, i), 1.0);
        }
        j
    }

    /// Builds a jet from `(coefficient, exponent)` terms in the shifted
    /// variables `x - base`. Repeated exponents are summed.
    pub fn from_terms<'a, I>(dim: usize, order: u32, base: &[f64], terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, &'a [u8])>,
    {
        if base.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: base.len(),
            });
        }
        if let Some(&b) = base.iter().find(|b| !b.is_finite()) {
            return Err(Error::NonFinite {
                context: "jet base point",
                value: b,
            });
        }
        let mut j = Self::zero(dim, order, base);
        for (c, powers) in terms {
            if powers.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: powers.len(),
                });
            }
            if !c.is_finite() {
                return Err(Error::NonFinite {
                    context: "jet coefficient",
                    value: c,
                });
            }
            let e = Exponent::new(powers);
            if e.degree() > order {
                return Err(Error::DegreeExceedsOrder {
                    degree: e.degree(),
                    order,
                });
            }
            j.accumulate(e, c);
        }
        Ok(j)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, f64)> {
        self.coeffs.iter().map(|(e, &c)| (e, c))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, e: &Exponent) -> f64 {
        self.coeffs.get(e).copied().unwrap_or(0.0)
    }

    pub fn coeff_of(&self, powers: &[u8]) -> f64 {
        self.coeff(&Exponent::new(powers))
    }

    /// Value at the expansion point.
    pub fn constant_term(&self) -> f64 {
        self.coeff(&Exponent::zero(self.dim))
    }

    /// Coefficient of `(x_i - base_i)`, i.e. the partial derivative at the base.
    pub fn linear_coeff(&self, i: usize) -> f64 {
        self.coeff(&Exponent::unit(self.dim, i))
    }

    /// Highest total degree carrying a nonzero coefficient.
    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(Exponent::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn insert(&mut self, e: Exponent, c: f64) {
        if c != 0.0 && e.degree() <= self.order {
            self.coeffs.insert(e, c);
        }
    }

    fn accumulate(&mut self, e: Exponent, c: f64) {
        if e.degree() > self.order || c == 0.0 {
            return;
        }
        match self.coeffs.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    fn check_compatible(&self, other: &Jet) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                left: self.order,
                right: other.order,
            });
        }
        let dev = base_deviation(&self.base, &other.base);
        if dev > BASE_TOL {
            return Err(Error::BaseMismatch { deviation: dev });
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (e, &c) in &other.coeffs {
            out.accumulate(e.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (e, &c) in &other.coeffs {
            out.accumulate(e.clone(), -c);
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = Self::zero(self.dim, self.order, &self.base);
        for (e, &c) in &self.coeffs {
            out.insert(e.clone(), c * s);
        }
        out
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    /// Adds a constant to the value at the base point.
    pub fn add_constant(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.accumulate(Exponent::zero(self.dim), c);
        out
    }

    /// Truncated product.
    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        let mut acc: BTreeMap<Exponent, f64> = BTreeMap::new();
        for (ea, &ca) in &self.coeffs {
            let da = ea.degree();
            for (eb, &cb) in &other.coeffs {
                if da + eb.degree() > self.order {
                    continue;
                }
                *acc.entry(ea.add(eb)).or_insert(0.0) += ca * cb;
            }
        }
        acc.retain(|_, c| *c != 0.0);
        if let Some(&bad) = acc.values().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                context: "jet product",
                value: bad,
            });
        }
        Ok(Jet {
            dim: self.dim,
            order: self.order,
            base: self.base.clone(),
            coeffs: acc,
        })
    }

    /// `self^k`, truncated.
    pub fn powi(&self, k: u32) -> Result<Jet> {
        let mut out = Self::constant(self.dim, self.order, &self.base, 1.0);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Partial derivative with respect to `x_i`.
    ///
    /// The result keeps the same order field; its top-degree part is only
    /// meaningful up to degree `order - 1` unless the jet is an exact
    /// polynomial of degree below `order`.
    pub fn partial(&self, i: usize) -> Jet {
        let mut out = Self::zero(self.dim, self.order, &self.base);
        for (e, &c) in &self.coeffs {
            if let Some(lower) = e.lower(i) {
                out.accumulate(lower, c * e.get(i) as f64);
            }
        }
        out
    }

    /// Drops every term of total degree above `order` and lowers the order.
    pub fn truncate(&self, order: u32) -> Jet {
        let order = order.min(self.order);
        let mut out = Self::zero(self.dim, order, &self.base);
        for (e, &c) in &self.coeffs {
            out.insert(e.clone(), c);
        }
        out
    }

    /// Reinterprets the stored polynomial at a higher order (missing terms are
    /// taken to be zero).
    pub fn with_order(&self, order: u32) -> Jet {
        let mut out = self.clone();
        out.order = order;
        out.coeffs.retain(|e, _| e.degree() <= order);
        out
    }

    /// Keeps only the terms accepted by `keep`.
    pub fn filter<F: Fn(&Exponent) -> bool>(&self, keep: F) -> Jet {
        let mut out = self.clone();
        out.coeffs.retain(|e, _| keep(e));
        out
    }

    /// Multiplies each coefficient by `f(exponent)`.
    pub fn map_coeffs<F: Fn(&Exponent, f64) -> f64>(&self, f: F) -> Jet {
        let mut out = Self::zero(self.dim, self.order, &self.base);
        for (e, &c) in &self.coeffs {
            out.insert(e.clone(), f(e, c));
        }
        out
    }

    /// Evaluates the stored polynomial at the absolute point `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let shifted: Vec<f64> = x.iter().zip(&self.base).map(|(a, b)| a - b).collect();
        self.eval_shifted(&shifted)
    }

    /// Evaluates at `base + h`.
    pub fn eval_shifted(&self, h: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(e, &c)| {
                e.powers()
                    .iter()
                    .zip(h)
                    .fold(c, |acc, (&a, &v)| acc * v.powi(a as i32))
            })
            .sum()
    }

    /// Re-expands the stored polynomial around `new_base`.
    ///
    /// Exact for the polynomial itself; degrees do not grow, so nothing is
    /// truncated.
    pub fn recentered(&self, new_base: &[f64]) -> Jet {
        assert_eq!(new_base.len(), self.dim);
        let shift: Vec<f64> = new_base
            .iter()
            .zip(&self.base)
            .map(|(n, b)| n - b)
            .collect();
        let mut acc: BTreeMap<Exponent, f64> = BTreeMap::new();
        for (e, &c) in &self.coeffs {
            // prod_i (y_i + s_i)^{a_i} = sum_{b <= a} prod_i C(a_i, b_i) s_i^{a_i - b_i} y_i^{b_i}
            let mut partial: Vec<(Vec<u8>, f64)> = vec![(Vec::with_capacity(self.dim), c)];
            for (i, &a) in e.powers().iter().enumerate() {
                let mut next = Vec::with_capacity(partial.len() * (a as usize + 1));
                for (prefix, val) in &partial {
                    for b in 0..=a {
                        let factor = binomial(a, b) * shift[i].powi((a - b) as i32);
                        if factor == 0.0 {
                            continue;
                        }
                        let mut p = prefix.clone();
                        p.push(b);
                        next.push((p, val * factor));
                    }
                }
                partial = next;
            }
            for (p, v) in partial {
                *acc.entry(Exponent::new(&p)).or_insert(0.0) += v;
            }
        }
        acc.retain(|_, c| *c != 0.0);
        Jet {
            dim: self.dim,
            order: self.order,
            base: new_base.to_vec(),
            coeffs: acc,
        }
    }

    /// Largest coefficient difference against `other` (expansion points are
    /// assumed to agree).
    pub fn max_coeff_diff(&self, other: &Jet) -> f64 {
        let mut m: f64 = 0.0;
        for (e, &c) in &self.coeffs {
            m = m.max((c - other.coeff(e)).abs());
        }
        for (e, &c) in &other.coeffs {
            if !self.coeffs.contains_key(e) {
                m = m.max(c.abs());
            }
        }
        m
    }
}

pub(crate) fn base_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / (1.0 + x.abs().max(y.abs())))
        .fold(0.0, f64::max)
}

fn binomial(n: u8, k: u8) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jet(dim: usize, order: u32, terms: &[(f64, &[u8])]) -> Jet {
        Jet::from_terms(dim, order, &vec![0.0; dim], terms.iter().copied()).unwrap()
    }

    #[test]
    fn difference_of_squares() {
        let a = jet(2, 2, &[(1.0, &[0, 0]), (1.0, &[0, 1])]);
        let b = jet(2, 2, &[(1.0, &[0, 0]), (-1.0, &[0, 1])]);
        let p = a.mul(&b).unwrap();
        assert_eq!(p, jet(2, 2, &[(1.0, &[0, 0]), (-1.0, &[0, 2])]));
    }

    #[test]
    fn product_beyond_order_is_dropped() {
        let x1 = jet(3, 1, &[(1.0, &[0, 1, 0])]);
        let x2 = jet(3, 1, &[(1.0, &[0, 0, 1])]);
        assert!(x1.mul(&x2).unwrap().is_zero());
    }

    #[test]
    fn square_of_trinomial() {
        // (1 + x0 + x1)^2 = 1 + 2x0 + 2x1 + x0^2 + 2x0x1 + x1^2
        let a = jet(2, 2, &[(1.0, &[0, 0]), (1.0, &[1, 0]), (1.0, &[0, 1])]);
        let sq = a.mul(&a).unwrap();
        let expected = jet(
            2,
            2,
            &[
                (1.0, &[0, 0]),
                (2.0, &[1, 0]),
                (2.0, &[0, 1]),
                (1.0, &[2, 0]),
                (2.0, &[1, 1]),
                (1.0, &[0, 2]),
            ],
        );
        assert_eq!(sq, expected);
    }

    #[test]
    fn mismatched_operands_are_rejected() {
        let a = jet(2, 2, &[(1.0, &[0, 0])]);
        let b = jet(3, 2, &[(1.0, &[0, 0, 0])]);
        let c = jet(2, 3, &[(1.0, &[0, 0])]);
        assert!(matches!(a.mul(&b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(a.mul(&c), Err(Error::OrderMismatch { .. })));
        let moved = Jet::constant(2, 2, &[1.0, 0.0], 1.0);
        assert!(matches!(a.add(&moved), Err(Error::BaseMismatch { .. })));
    }

    #[test]
    fn rejects_non_finite_and_high_degree_terms() {
        let nan = Jet::from_terms(1, 2, &[0.0], [(f64::NAN, &[1u8][..])]);
        assert!(matches!(nan, Err(Error::NonFinite { .. })));
        let high = Jet::from_terms(1, 2, &[0.0], [(1.0, &[3u8][..])]);
        assert!(matches!(high, Err(Error::DegreeExceedsOrder { .. })));
    }

    #[test]
    fn recentering_preserves_values() {
        let p = jet(
            2,
            3,
            &[
                (1.5, &[0, 0]),
                (-2.0, &[1, 2]),
                (0.5, &[3, 0]),
                (1.0, &[0, 1]),
            ],
        );
        let q = p.recentered(&[0.3, -0.7]);
        for x in [[0.0, 0.0], [1.0, 2.0], [-0.4, 0.25]] {
            assert!((p.eval(&x) - q.eval(&x)).abs() < 1e-12);
        }
        assert!((q.constant_term() - p.eval(&[0.3, -0.7])).abs() < 1e-14);
    }

    #[test]
    fn partial_derivative() {
        let p = jet(2, 3, &[(1.0, &[2, 1]), (3.0, &[0, 1])]);
        let d0 = p.partial(0);
        assert_eq!(d0, jet(2, 3, &[(2.0, &[1, 1])]));
        let d1 = p.partial(1);
        assert_eq!(d1, jet(2, 3, &[(1.0, &[2, 0]), (3.0, &[0, 0])]));
    }
}
