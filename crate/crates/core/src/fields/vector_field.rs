use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::jets::{Jet, PolyMap};

/// A vector field `sum_i X^i(x) d/dx_i` with polynomial components.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    coeffs: PolyMap,
}

impl VectorField {
    pub fn new(coeffs: PolyMap) -> Result<Self> {
        if coeffs.dim_in() != coeffs.dim_out() {
            return Err(Error::DimensionMismatch {
                expected: coeffs.dim_in(),
                actual: coeffs.dim_out(),
            });
        }
        Ok(VectorField { coeffs })
    }

    pub fn from_components(components: Vec<Jet>) -> Result<Self> {
        Self::new(PolyMap::new(components)?)
    }

    pub fn zero(dim: usize, order: u32, base: &[f64]) -> Self {
        VectorField {
            coeffs: PolyMap::new((0..dim).map(|_| Jet::zero(dim, order, base)).collect())
                .expect("zero components are compatible"),
        }
    }

    /// The coordinate field `d/dx_i`.
    pub fn coordinate(dim: usize, order: u32, base: &[f64], i: usize) -> Self {
        let comps = (0..dim)
            .map(|k| {
                if k == i {
                    Jet::constant(dim, order, base, 1.0)
                } else {
                    Jet::zero(dim, order, base)
                }
            })
            .collect();
        VectorField {
            coeffs: PolyMap::new(comps).expect("coordinate components are compatible"),
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim_in()
    }

    pub fn order(&self) -> u32 {
        self.coeffs.order()
    }

    pub fn base(&self) -> &[f64] {
        self.coeffs.base()
    }

    pub fn coeffs(&self) -> &PolyMap {
        &self.coeffs
    }

    pub fn component(&self, i: usize) -> &Jet {
        self.coeffs.component(i)
    }

    pub fn components(&self) -> &[Jet] {
        self.coeffs.components()
    }

    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_vec(self.coeffs.eval(x))
    }

    /// Value at the expansion point.
    pub fn value_at_base(&self) -> DVector<f64> {
        DVector::from_vec(self.coeffs.constant())
    }

    /// The derivation `f -> sum_j X^j d_j f`.
    pub fn apply(&self, f: &Jet) -> Result<Jet> {
        let mut out = Jet::zero(self.dim(), self.order(), self.base());
        for (j, xj) in self.components().iter().enumerate() {
            if xj.is_zero() {
                continue;
            }
            out = out.add(&xj.mul(&f.partial(j))?)?;
        }
        Ok(out)
    }

    /// Lie bracket `[X, Y]`. Valid through degree `order - 1`, which is the
    /// order of the result.
    pub fn bracket(&self, other: &VectorField) -> Result<VectorField> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        if self.order() == 0 {
            return Err(Error::InvalidArgument(
                "bracket needs jets of order at least 1".into(),
            ));
        }
        let comps = (0..self.dim())
            .map(|i| {
                let a = self.apply(other.component(i))?;
                let b = other.apply(self.component(i))?;
                Ok(a.sub(&b)?.truncate(self.order() - 1))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_components(comps)
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        let comps = self
            .components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Self::from_components(comps)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        let comps = self
            .components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Self::from_components(comps)
    }

    pub fn scale(&self, s: f64) -> VectorField {
        VectorField {
            coeffs: PolyMap::new(self.components().iter().map(|c| c.scale(s)).collect())
                .expect("scaling keeps components compatible"),
        }
    }

    /// The field `f X`.
    pub fn mul_fn(&self, f: &Jet) -> Result<VectorField> {
        let comps = self
            .components()
            .iter()
            .map(|c| c.mul(f))
            .collect::<Result<Vec<_>>>()?;
        Self::from_components(comps)
    }

    pub fn recentered(&self, base: &[f64]) -> VectorField {
        VectorField {
            coeffs: self.coeffs.recentered(base),
        }
    }

    pub fn truncate(&self, order: u32) -> VectorField {
        VectorField {
            coeffs: self.coeffs.truncate(order),
        }
    }

    pub fn with_order(&self, order: u32) -> VectorField {
        VectorField {
            coeffs: self.coeffs.with_order(order),
        }
    }

    pub fn max_coeff_diff(&self, other: &VectorField) -> f64 {
        self.coeffs.max_coeff_diff(&other.coeffs)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.components()
            .iter()
            .map(Jet::max_abs_coeff)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(dim: usize, order: u32, comps: &[&[(f64, &[u8])]]) -> VectorField {
        let base = vec![0.0; dim];
        VectorField::from_components(
            comps
                .iter()
                .map(|terms| Jet::from_terms(dim, order, &base, terms.iter().copied()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn heisenberg_bracket() {
        let x1 = field(3, 3, &[&[(1.0, &[0, 0, 1])], &[(1.0, &[0, 0, 0])], &[]]);
        let x2 = field(3, 3, &[&[(-1.0, &[0, 1, 0])], &[], &[(1.0, &[0, 0, 0])]]);
        let br = x1.bracket(&x2).unwrap();
        assert_eq!(br.order(), 2);
        assert_eq!(br.component(0).constant_term(), -2.0);
        assert_eq!(br.component(0).num_terms(), 1);
        assert!(br.component(1).is_zero() && br.component(2).is_zero());
    }

    #[test]
    fn coordinate_fields_commute() {
        let d1 = VectorField::coordinate(3, 3, &[0.0; 3], 1);
        let d2 = VectorField::coordinate(3, 3, &[0.0; 3], 2);
        assert!(d1
            .bracket(&d2)
            .unwrap()
            .components()
            .iter()
            .all(Jet::is_zero));
    }

    #[test]
    fn bracket_with_itself_vanishes() {
        let x = field(
            2,
            3,
            &[
                &[(1.0, &[0, 0]), (0.3, &[1, 1]), (-2.0, &[0, 2])],
                &[(0.5, &[1, 0]), (1.5, &[2, 1])],
            ],
        );
        assert!(x.bracket(&x).unwrap().max_abs_coeff() == 0.0);
    }
}
