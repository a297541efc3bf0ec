//! Graded 2-step nilpotent tangent groups: group laws, dilations, the
//! homogeneous pseudo-norm, graded shears, and fiber classification.

mod classify;
mod shear;

pub use classify::{classify_fiber, FiberClassification, GroupType, RANK_REL_TOL};
pub use shear::{graded_shear_transport, GradedShear, ShearTransport};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fields::StructureConstants;

/// A point of a tangent group: slot 0 has weight 2, slots `1..=d` weight 1.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    coords: DVector<f64>,
}

impl GroupElement {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if let Some(&v) = coords.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "group element",
                value: v,
            });
        }
        Ok(GroupElement { coords })
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(x))
    }

    pub fn identity(dim: usize) -> Self {
        GroupElement {
            coords: DVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub fn x0(&self) -> f64 {
        self.coords[0]
    }

    pub fn horizontal(&self) -> &[f64] {
        &self.coords.as_slice()[1..]
    }

    pub fn dilate(&self, t: f64) -> GroupElement {
        GroupElement {
            coords: DVector::from_vec(dilate(t, self.as_slice())),
        }
    }

    pub fn pseudo_norm(&self) -> f64 {
        pseudo_norm(self.as_slice())
    }

    /// Largest componentwise difference.
    pub fn max_diff(&self, other: &GroupElement) -> f64 {
        (&self.coords - &other.coords).amax()
    }
}

/// `delta_t(x) = (t^2 x_0, t x_1, ..., t x_d)`.
pub fn dilate(t: f64, x: &[f64]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, v)| if i == 0 { t * t * v } else { t * v })
        .collect()
}

/// `(x_0^2 + |x'|^4)^(1/4)`, homogeneous of degree 1 under dilations.
pub fn pseudo_norm(x: &[f64]) -> f64 {
    let h2: f64 = x[1..].iter().map(|v| v * v).sum();
    (x[0] * x[0] + h2 * h2).sqrt().sqrt()
}

/// The law `x.y = (x_0 + y_0 + sum_jk m_jk x_j y_k, x' + y')` for a bilinear
/// coefficient matrix `m` on the horizontal slots.
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearLaw {
    m: DMatrix<f64>,
}

impl BilinearLaw {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        Ok(BilinearLaw { m })
    }

    /// The law of the privileged model group, `x_0 + y_0 + sum b_kj x_j y_k`.
    pub fn from_b(b: &DMatrix<f64>) -> Self {
        BilinearLaw { m: b.transpose() }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn d(&self) -> usize {
        self.m.nrows()
    }

    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for (j, xj) in x.iter().enumerate().take(self.d()) {
            if *xj == 0.0 {
                continue;
            }
            for (k, yk) in y.iter().enumerate().take(self.d()) {
                s += self.m[(j, k)] * xj * yk;
            }
        }
        s
    }

    pub fn mul(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        out[0] += self.bilinear(&x[1..], &y[1..]);
        out
    }

    /// Two-sided inverse `(-x_0 + m(x', x'), -x')`.
    pub fn inv(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = x.iter().map(|v| -v).collect();
        out[0] += self.bilinear(&x[1..], &x[1..]);
        out
    }
}

/// The tangent group `G_m M` in frame coordinates, with law
/// `x.y = (x_0 + y_0 + 1/2 sum L_jk x_j y_k, x' + y')`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentGroup {
    l: StructureConstants,
    law: BilinearLaw,
}

impl TangentGroup {
    pub fn new(l: StructureConstants) -> Self {
        let law = BilinearLaw {
            m: l.matrix() * 0.5,
        };
        TangentGroup { l, law }
    }

    pub fn d(&self) -> usize {
        self.l.d()
    }

    pub fn dim(&self) -> usize {
        self.l.d() + 1
    }

    pub fn structure_constants(&self) -> &StructureConstants {
        &self.l
    }

    pub fn law(&self) -> &BilinearLaw {
        &self.law
    }

    fn check(&self, x: &GroupElement) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.dim(),
            });
        }
        Ok(())
    }

    pub fn mul(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        self.check(y)?;
        GroupElement::from_slice(&self.law.mul(x.as_slice(), y.as_slice()))
    }

    /// `x^{-1} = -x`, since `L` is antisymmetric.
    pub fn inv(&self, x: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        Ok(GroupElement {
            coords: -x.coords(),
        })
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.dim())
    }

    /// `x y x^{-1} y^{-1}`.
    pub fn commutator(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        let xy = self.mul(x, y)?;
        let xyx = self.mul(&xy, &self.inv(x)?)?;
        self.mul(&xyx, &self.inv(y)?)
    }
}
