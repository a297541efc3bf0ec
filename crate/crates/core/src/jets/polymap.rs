use nalgebra::DMatrix;

use super::jet::{base_deviation, Jet, BASE_TOL};
use crate::error::{Error, Result};

/// A map `R^dim_in -> R^dim_out` given by one jet per output coordinate, all
/// expanded at the same base point.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMap {
    components: Vec<Jet>,
}

impl PolyMap {
    pub fn new(components: Vec<Jet>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("a map needs at least one component".into()))?;
        for c in &components[1..] {
            if c.dim() != first.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    actual: c.dim(),
                });
            }
            if c.order() != first.order() {
                return Err(Error::OrderMismatch {
                    left: first.order(),
                    right: c.order(),
                });
            }
            let dev = base_deviation(c.base(), first.base());
            if dev > BASE_TOL {
                return Err(Error::BaseMismatch { deviation: dev });
            }
        }
        Ok(PolyMap { components })
    }

    pub fn identity(dim: usize, order: u32, base: &[f64]) -> Self {
        PolyMap {
            components: (0..dim)
                .map(|i| Jet::variable(dim, order, base, i))
                .collect(),
        }
    }

    /// `x -> offset + matrix (x - base)`.
    pub fn affine(matrix: &DMatrix<f64>, base: &[f64], offset: &[f64], order: u32) -> Self {
        let dim_in = matrix.ncols();
        assert_eq!(base.len(), dim_in);
        assert_eq!(offset.len(), matrix.nrows());
        let components = (0..matrix.nrows())
            .map(|i| {
                let terms: Vec<(f64, Vec<u8>)> = (0..dim_in)
                    .map(|k| {
                        let mut e = vec![0u8; dim_in];
                        e[k] = 1;
                        (matrix[(i, k)], e)
                    })
                    .collect();
                let lin = Jet::from_terms(
                    dim_in,
                    order,
                    base,
                    terms.iter().map(|(c, e)| (*c, e.as_slice())),
                )
                .expect("affine coefficients must be finite");
                lin.add_constant(offset[i])
            })
            .collect();
        PolyMap { components }
    }

    /// The graded dilation `x -> (t^2 x_0, t x_1, ..., t x_d)` at the origin.
    pub fn dilation(t: f64, dim: usize, order: u32) -> Self {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| {
            if i == 0 {
                t * t
            } else {
                t
            }
        }));
        Self::affine(&m, &vec![0.0; dim], &vec![0.0; dim], order)
    }

    pub fn components(&self) -> &[Jet] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Jet {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<Jet> {
        self.components
    }

    pub fn dim_in(&self) -> usize {
        self.components[0].dim()
    }

    pub fn dim_out(&self) -> usize {
        self.components.len()
    }

    pub fn order(&self) -> u32 {
        self.components[0].order()
    }

    pub fn base(&self) -> &[f64] {
        self.components[0].base()
    }

    /// Image of the base point.
    pub fn constant(&self) -> Vec<f64> {
        self.components.iter().map(Jet::constant_term).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// Jacobian at the base point.
    pub fn linear_part(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim_out(), self.dim_in(), |i, k| {
            self.components[i].linear_coeff(k)
        })
    }

    /// Jacobian of the stored polynomials at an arbitrary point.
    pub fn jacobian_at(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim_out(), self.dim_in(), |i, k| {
            self.components[i].partial(k).eval(x)
        })
    }

    pub fn recentered(&self, new_base: &[f64]) -> PolyMap {
        PolyMap {
            components: self
                .components
                .iter()
                .map(|c| c.recentered(new_base))
                .collect(),
        }
    }

    pub fn truncate(&self, order: u32) -> PolyMap {
        PolyMap {
            components: self.components.iter().map(|c| c.truncate(order)).collect(),
        }
    }

    pub fn with_order(&self, order: u32) -> PolyMap {
        PolyMap {
            components: self
                .components
                .iter()
                .map(|c| c.with_order(order))
                .collect(),
        }
    }

    pub fn sub(&self, other: &PolyMap) -> Result<PolyMap> {
        if self.dim_out() != other.dim_out() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_out(),
                actual: other.dim_out(),
            });
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(PolyMap { components })
    }

    /// `self ∘ inner`, truncated. The inner map must send its base point to
    /// this map's base point.
    pub fn compose(&self, inner: &PolyMap) -> Result<PolyMap> {
        let components = self
            .components
            .iter()
            .map(|c| compose(c, inner))
            .collect::<Result<_>>()?;
        Ok(PolyMap { components })
    }

    /// `self ∘ inner` after re-expanding `self` at `inner`'s image of its
    /// base point. Exact for polynomial data up to truncation of the result.
    pub fn compose_recentered(&self, inner: &PolyMap) -> Result<PolyMap> {
        self.recentered(&inner.constant()).compose(inner)
    }

    pub fn invert(&self) -> Result<PolyMap> {
        invert(self)
    }

    pub fn max_coeff_diff(&self, other: &PolyMap) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.max_coeff_diff(b))
            .fold(0.0, f64::max)
    }

    /// Solves `self(x) = y` by Newton iteration from `guess`.
    pub fn solve(&self, y: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim_in();
        if self.dim_out() != n || y.len() != n || guess.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: y.len(),
            });
        }
        let mut x = nalgebra::DVector::from_column_slice(guess);
        let target = nalgebra::DVector::from_column_slice(y);
        for _ in 0..60 {
            let fx = nalgebra::DVector::from_vec(self.eval(x.as_slice()));
            let r = &fx - &target;
            if r.amax() <= 1e-15 * (1.0 + target.amax()) {
                return Ok(x.as_slice().to_vec());
            }
            let jac = self.jacobian_at(x.as_slice());
            let step = jac.lu().solve(&r).ok_or(Error::Singular {
                context: "Newton step",
            })?;
            x -= &step;
            if step.amax() <= 1e-16 * (1.0 + x.amax()) {
                return Ok(x.as_slice().to_vec());
            }
        }
        Ok(x.as_slice().to_vec())
    }
}

/// Truncated composition `outer ∘ inner`.
pub fn compose(outer: &Jet, inner: &PolyMap) -> Result<Jet> {
    if inner.dim_out() != outer.dim() {
        return Err(Error::DimensionMismatch {
            expected: outer.dim(),
            actual: inner.dim_out(),
        });
    }
    if inner.order() != outer.order() {
        return Err(Error::OrderMismatch {
            left: outer.order(),
            right: inner.order(),
        });
    }
    let dev = base_deviation(&inner.constant(), outer.base());
    if dev > BASE_TOL {
        return Err(Error::BaseMismatch { deviation: dev });
    }
    let n = outer.dim();
    let order = outer.order();
    let inner_base = inner.base().to_vec();
    let dim_in = inner.dim_in();
    // (inner_i - outer.base_i), which has zero constant term
    let shifted: Vec<Jet> = inner
        .components()
        .iter()
        .map(|c| c.add_constant(-c.constant_term()))
        .collect();
    let mut max_pow = vec![0u8; n];
    for (e, _) in outer.terms() {
        for (i, &a) in e.powers().iter().enumerate() {
            max_pow[i] = max_pow[i].max(a);
        }
    }
    let one = Jet::constant(dim_in, order, &inner_base, 1.0);
    let mut powers: Vec<Vec<Jet>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut p = vec![one.clone()];
        for k in 1..=max_pow[i] as usize {
            let next = p[k - 1].mul(&shifted[i])?;
            p.push(next);
        }
        powers.push(p);
    }
    let mut out = Jet::zero(dim_in, order, &inner_base);
    for (e, c) in outer.terms() {
        let mut term = one.scale(c);
        for (i, &a) in e.powers().iter().enumerate() {
            if a > 0 {
                term = term.mul(&powers[i][a as usize])?;
            }
        }
        out = out.add(&term)?;
    }
    Ok(out)
}

/// Formal inverse of a square map with invertible linear part, accurate to
/// the jet order. The inverse is expanded at the image of `f`'s base point.
pub fn invert(f: &PolyMap) -> Result<PolyMap> {
    let n = f.dim_in();
    if f.dim_out() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: f.dim_out(),
        });
    }
    let order = f.order();
    let a = f.linear_part();
    let a_inv = checked_inverse(&a, "formal inverse")?;
    let b = f.base().to_vec();
    let c = f.constant();

    // nonlinear part N(x) = f(x) - c - A (x - b)
    let linear = PolyMap::affine(&a, &b, &c, order);
    let nonlinear = f.sub(&linear)?;

    let y_minus_c: Vec<Jet> = (0..n)
        .map(|k| Jet::variable(n, order, &c, k).add_constant(-c[k]))
        .collect();

    let mut g = PolyMap::affine(&a_inv, &c, &b, order);
    for _ in 1..order.max(1) {
        let ng = nonlinear.compose(&g)?;
        let rhs: Vec<Jet> = (0..n)
            .map(|k| y_minus_c[k].sub(ng.component(k)))
            .collect::<Result<_>>()?;
        let mut comps = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = Jet::constant(n, order, &c, b[i]);
            for (k, r) in rhs.iter().enumerate() {
                let coef = a_inv[(i, k)];
                if coef != 0.0 {
                    acc = acc.add(&r.scale(coef))?;
                }
            }
            comps.push(acc);
        }
        g = PolyMap::new(comps)?;
    }
    Ok(g)
}

/// Inverse of a square matrix, refusing matrices whose determinant is
/// negligible against the Hadamard bound.
pub fn checked_inverse(m: &DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    let hadamard: f64 = m.row_iter().map(|r| r.norm()).product();
    let lu = m.clone().lu();
    let det = lu.determinant();
    if hadamard == 0.0 || det.abs() <= 1e-12 * hadamard || !det.is_finite() {
        return Err(Error::Singular { context });
    }
    lu.try_inverse().ok_or(Error::Singular { context })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jet(dim: usize, order: u32, terms: &[(f64, &[u8])]) -> Jet {
        Jet::from_terms(dim, order, &vec![0.0; dim], terms.iter().copied()).unwrap()
    }

    #[test]
    fn compose_square_with_sum() {
        // x1^2 ∘ (x1 -> x1 + x2) = x1^2 + 2 x1 x2 + x2^2
        let outer = jet(3, 2, &[(1.0, &[0, 2, 0])]);
        let inner = PolyMap::new(vec![
            jet(3, 2, &[(1.0, &[1, 0, 0])]),
            jet(3, 2, &[(1.0, &[0, 1, 0]), (1.0, &[0, 0, 1])]),
            jet(3, 2, &[(1.0, &[0, 0, 1])]),
        ])
        .unwrap();
        let got = compose(&outer, &inner).unwrap();
        let expected = jet(
            3,
            2,
            &[(1.0, &[0, 2, 0]), (2.0, &[0, 1, 1]), (1.0, &[0, 0, 2])],
        );
        assert!(got.max_coeff_diff(&expected) < 1e-15);
    }

    #[test]
    fn compose_with_dilation_scales_x0_twice() {
        let t = 0.37;
        let outer = jet(3, 3, &[(1.0, &[1, 0, 0])]);
        let got = compose(&outer, &PolyMap::dilation(t, 3, 3)).unwrap();
        assert!((got.coeff_of(&[1, 0, 0]) - t * t).abs() < 1e-15);
        assert_eq!(got.num_terms(), 1);
    }

    #[test]
    fn compose_rejects_wrong_base() {
        let outer = Jet::constant(2, 2, &[1.0, 0.0], 3.0);
        let inner = PolyMap::identity(2, 2, &[0.0, 0.0]);
        assert!(matches!(
            compose(&outer, &inner),
            Err(Error::BaseMismatch { .. })
        ));
    }

    #[test]
    fn invert_affine() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 3.0]);
        let f = PolyMap::affine(&a, &[0.0, 0.0], &[0.0, 0.0], 3);
        let g = invert(&f).unwrap();
        let a_inv = a.try_inverse().unwrap();
        assert!((g.linear_part() - a_inv).amax() < 1e-14);
        assert!(g
            .components()
            .iter()
            .all(|c| c.terms().all(|(e, _)| e.degree() == 1)));
    }

    #[test]
    fn invert_quadratic_shear() {
        // f = (x0 + x1^2, x1) has inverse (x0 - x1^2, x1)
        let f = PolyMap::new(vec![
            jet(2, 2, &[(1.0, &[1, 0]), (1.0, &[0, 2])]),
            jet(2, 2, &[(1.0, &[0, 1])]),
        ])
        .unwrap();
        let g = invert(&f).unwrap();
        let expected = PolyMap::new(vec![
            jet(2, 2, &[(1.0, &[1, 0]), (-1.0, &[0, 2])]),
            jet(2, 2, &[(1.0, &[0, 1])]),
        ])
        .unwrap();
        assert!(g.max_coeff_diff(&expected) < 1e-14);
        let id = f.compose(&g).unwrap();
        assert!(id.max_coeff_diff(&PolyMap::identity(2, 2, &[0.0, 0.0])) < 1e-14);
    }

    #[test]
    fn invert_rejects_singular_linear_part() {
        let f = PolyMap::new(vec![
            jet(2, 2, &[(1.0, &[1, 0]), (1.0, &[0, 1])]),
            jet(2, 2, &[(2.0, &[1, 0]), (2.0, &[0, 1])]),
        ])
        .unwrap();
        assert!(matches!(invert(&f), Err(Error::Singular { .. })));
    }

    #[test]
    fn invert_off_origin() {
        // base (1, 2) mapped to (3, -1)
        let base = [1.0, 2.0];
        let f = PolyMap::new(vec![
            Jet::from_terms(
                2,
                3,
                &base,
                [(3.0, &[0u8, 0][..]), (1.0, &[1, 0]), (0.5, &[0, 2])],
            )
            .unwrap(),
            Jet::from_terms(
                2,
                3,
                &base,
                [(-1.0, &[0u8, 0][..]), (2.0, &[0, 1]), (1.0, &[1, 1])],
            )
            .unwrap(),
        ])
        .unwrap();
        let g = invert(&f).unwrap();
        assert_eq!(g.base(), &[3.0, -1.0]);
        let id = f.compose(&g).unwrap();
        assert!(id.max_coeff_diff(&PolyMap::identity(2, 3, &[3.0, -1.0])) < 1e-12);
    }

    #[test]
    fn newton_solve_inverts_polynomial() {
        let f = PolyMap::new(vec![
            jet(2, 3, &[(1.0, &[1, 0]), (-1.0 / 3.0, &[0, 3])]),
            jet(2, 3, &[(1.0, &[0, 1])]),
        ])
        .unwrap();
        let y = [0.2, 0.7];
        let x = f.solve(&y, &y).unwrap();
        let back = f.eval(&x);
        assert!((back[0] - y[0]).abs() < 1e-14 && (back[1] - y[1]).abs() < 1e-14);
    }
}
