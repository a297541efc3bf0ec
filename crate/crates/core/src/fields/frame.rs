use nalgebra::{DMatrix, DVector};

use super::vector_field::VectorField;
use crate::error::{Error, Result};
use crate::jets::{Jet, PolyMap};

/// Relative determinant threshold below which a frame matrix counts as
/// singular: `|det B| > tol * (max row norm)^(d+1)`.
pub const DEFAULT_DET_TOL: f64 = 1e-8;

/// Axis-aligned open box `lo < x < hi` (closed for membership tests).
#[derive(Clone, Debug, PartialEq)]
pub struct DomainBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                actual: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::InvalidArgument("box has no coordinates".into()));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidArgument(format!(
                    "box is empty along axis {i}: [{a}, {b}]"
                )));
            }
        }
        Ok(DomainBox { lo, hi })
    }

    /// The cube `[-r, r]^dim`.
    pub fn cube(dim: usize, r: f64) -> Self {
        Self::new(vec![-r; dim], vec![r; dim]).expect("cube with positive radius")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// The box shrunk about its center by `factor` in every direction.
    pub fn shrunk(&self, factor: f64) -> DomainBox {
        let c = self.center();
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .zip(&c)
            .map(|((a, b), m)| (m + factor * (a - m), m + factor * (b - m)))
            .unzip();
        DomainBox { lo, hi }
    }

    /// Maps a point of the unit cube `[0,1]^dim` into the box.
    pub fn from_unit(&self, s: &[f64]) -> Vec<f64> {
        s.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(u, (a, b))| a + u * (b - a))
            .collect()
    }
}

/// Antisymmetric matrix `L` of the Levi form in a frame:
/// `[X_j, X_k] = L_jk X_0 mod H`. Row/column `j - 1` corresponds to `X_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    l: DMatrix<f64>,
}

impl StructureConstants {
    pub const ANTISYMMETRY_TOL: f64 = 1e-10;

    pub fn new(l: DMatrix<f64>) -> Result<Self> {
        if !l.is_square() {
            return Err(Error::DimensionMismatch {
                expected: l.nrows(),
                actual: l.ncols(),
            });
        }
        let dev = (&l + l.transpose()).amax();
        if dev > Self::ANTISYMMETRY_TOL * l.amax().max(1.0) {
            return Err(Error::NotAntisymmetric { deviation: dev });
        }
        Ok(StructureConstants { l })
    }

    pub fn zero(d: usize) -> Self {
        StructureConstants {
            l: DMatrix::zeros(d, d),
        }
    }

    /// The constants of the standard frame of the Heisenberg group of
    /// dimension `2n + 1`, padded with `extra` abelian directions:
    /// `L_{j,n+j} = -2`, `L_{n+j,j} = 2`.
    pub fn heisenberg(n: usize, extra: usize) -> Self {
        let d = 2 * n + extra;
        let mut l = DMatrix::zeros(d, d);
        for j in 0..n {
            l[(j, n + j)] = -2.0;
            l[(n + j, j)] = 2.0;
        }
        StructureConstants { l }
    }

    pub fn d(&self) -> usize {
        self.l.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// `L(x', y') = sum_jk L_jk x_j y_k` on horizontal vectors.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for (j, xj) in x.iter().enumerate().take(self.d()) {
            for (k, yk) in y.iter().enumerate().take(self.d()) {
                s += self.l[(j, k)] * xj * yk;
            }
        }
        s
    }
}

/// A local frame `X_0, ..., X_d` on a box, with `X_1, ..., X_d` spanning `H`.
#[derive(Clone, Debug)]
pub struct HFrame {
    fields: Vec<VectorField>,
    domain: DomainBox,
    det_tol: f64,
}

impl HFrame {
    pub fn new(fields: Vec<VectorField>, domain: DomainBox) -> Result<Self> {
        let dim = domain.dim();
        if fields.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: fields.len(),
            });
        }
        if dim < 2 {
            return Err(Error::InvalidArgument(
                "a frame needs at least one horizontal field".into(),
            ));
        }
        let order = fields[0].order();
        for f in &fields {
            if f.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: f.dim(),
                });
            }
            if f.order() != order {
                return Err(Error::OrderMismatch {
                    left: order,
                    right: f.order(),
                });
            }
        }
        let base = fields[0].base().to_vec();
        let fields = fields.into_iter().map(|f| f.recentered(&base)).collect();
        Ok(HFrame {
            fields,
            domain,
            det_tol: DEFAULT_DET_TOL,
        })
    }

    pub fn with_det_tol(mut self, tol: f64) -> Self {
        self.det_tol = tol;
        self
    }

    /// Coordinate frame `X_j = d/dx_j`.
    pub fn flat(dim: usize, order: u32, domain: DomainBox) -> Result<Self> {
        let base = vec![0.0; dim];
        Self::new(
            (0..dim)
                .map(|j| VectorField::coordinate(dim, order, &base, j))
                .collect(),
            domain,
        )
    }

    /// Left-invariant frame of the Heisenberg group of dimension `2n + 1`:
    /// `X_0 = d_0`, `X_j = d_j + x_{n+j} d_0`, `X_{n+j} = d_{n+j} - x_j d_0`.
    pub fn heisenberg(n: usize, order: u32, domain: DomainBox) -> Result<Self> {
        let dim = 2 * n + 1;
        let base = vec![0.0; dim];
        let mut fields = vec![VectorField::coordinate(dim, order, &base, 0)];
        for j in 1..dim {
            let (partner, sign) = if j <= n { (j + n, 1.0) } else { (j - n, -1.0) };
            let mut comps: Vec<Jet> = VectorField::coordinate(dim, order, &base, j)
                .components()
                .to_vec();
            let mut e = vec![0u8; dim];
            e[partner] = 1;
            comps[0] = Jet::from_terms(dim, order, &base, [(sign, e.as_slice())])?;
            fields.push(VectorField::from_components(comps)?);
        }
        Self::new(fields, domain)
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    /// Rank of `H`.
    pub fn d(&self) -> usize {
        self.fields.len() - 1
    }

    pub fn order(&self) -> u32 {
        self.fields[0].order()
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn field(&self, j: usize) -> &VectorField {
        &self.fields[j]
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn det_tol(&self) -> f64 {
        self.det_tol
    }

    /// The frame with each `X_j` multiplied by `factors[j]`.
    pub fn scaled(&self, factors: &[f64]) -> HFrame {
        HFrame {
            fields: self
                .fields
                .iter()
                .zip(factors)
                .map(|(f, s)| f.scale(*s))
                .collect(),
            domain: self.domain.clone(),
            det_tol: self.det_tol,
        }
    }

    /// `B(x)` with rows `X_j(x)`, so `X_j = sum_k B_jk d_k`.
    pub fn frame_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut b = DMatrix::zeros(n, n);
        for (j, f) in self.fields.iter().enumerate() {
            b.set_row(j, &f.eval(x).transpose());
        }
        b
    }

    /// Returns `B(x)` after checking it against the scale-aware singularity
    /// threshold.
    pub fn checked_frame_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let b = self.frame_matrix(x);
        let scale = b.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
        let threshold = self.det_tol * scale.powi(self.dim() as i32);
        let det = b.determinant();
        if det.is_nan() || det.abs() <= threshold {
            return Err(Error::SingularFrame {
                point: x.to_vec(),
                det,
                threshold,
            });
        }
        Ok(b)
    }

    /// Coefficients `a` with `V = sum_j a_j X_j(x)` for a tangent vector `V` at `x`.
    pub fn expand_vector(&self, x: &[f64], v: &DVector<f64>) -> Result<DVector<f64>> {
        let b = self.checked_frame_matrix(x)?;
        b.transpose().lu().solve(v).ok_or(Error::Singular {
            context: "frame expansion",
        })
    }

    /// Frame coefficients of the field `v` at `x`.
    pub fn expand(&self, v: &VectorField, x: &[f64]) -> Result<DVector<f64>> {
        self.expand_vector(x, &v.eval(x))
    }

    /// The frame re-expanded around `m`.
    pub fn recentered(&self, m: &[f64]) -> Vec<VectorField> {
        self.fields.iter().map(|f| f.recentered(m)).collect()
    }

    /// Levi matrix `L(m)`: each `[X_j, X_k](m)` is expanded in the full frame at
    /// `m` and its `X_0` coefficient recorded.
    pub fn levi_matrix(&self, m: &[f64]) -> Result<StructureConstants> {
        let b = self.checked_frame_matrix(m)?;
        let lu = b.transpose().lu();
        let local = self.recentered(m);
        let d = self.d();
        let mut l = DMatrix::zeros(d, d);
        for j in 1..=d {
            for k in (j + 1)..=d {
                let br = local[j].bracket(&local[k])?.value_at_base();
                let c = lu.solve(&br).ok_or(Error::Singular {
                    context: "Levi expansion",
                })?;
                l[(j - 1, k - 1)] = c[0];
                l[(k - 1, j - 1)] = -c[0];
            }
        }
        StructureConstants::new(l)
    }
}

/// Outcome of [`pushforward_preserves_h`].
#[derive(Clone, Debug, PartialEq)]
pub struct HPreservation {
    /// Largest `X_0`-coefficient of a pushed horizontal field, per sample.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

impl HPreservation {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual < tol
    }
}

/// Checks `phi_* H = H'` at sample points: each `phi'(x) X_j(x)`, `j >= 1`, is
/// expanded in the target frame at `phi(x)` and its `X'_0` coefficient is
/// the residual.
pub fn pushforward_preserves_h(
    phi: &PolyMap,
    source: &HFrame,
    target: &HFrame,
    samples: &[Vec<f64>],
) -> Result<HPreservation> {
    if phi.dim_in() != source.dim() || phi.dim_out() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            actual: phi.dim_in(),
        });
    }
    let mut residuals = Vec::with_capacity(samples.len());
    for x in samples {
        if !source.domain().contains(x) {
            return Err(Error::OutOfDomain { point: x.clone() });
        }
        let y = phi.eval(x);
        if !target.domain().contains(&y) {
            return Err(Error::OutOfDomain { point: y });
        }
        let jac = phi.jacobian_at(x);
        let bt = target.checked_frame_matrix(&y)?.transpose();
        let lu = bt.lu();
        let mut worst: f64 = 0.0;
        for j in 1..source.dim() {
            let pushed = &jac * source.field(j).eval(x);
            let c = lu.solve(&pushed).ok_or(Error::Singular {
                context: "pushforward expansion",
            })?;
            worst = worst.max(c[0].abs());
        }
        residuals.push(worst);
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(HPreservation {
        residuals,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_levi_matrix() {
        let f = HFrame::heisenberg(1, 3, DomainBox::cube(3, 2.0)).unwrap();
        for m in [[0.0, 0.0, 0.0], [0.7, -1.2, 0.4]] {
            let l = f.levi_matrix(&m).unwrap();
            assert_eq!(l.matrix()[(0, 1)], -2.0);
            assert_eq!(l.matrix()[(1, 0)], 2.0);
        }
    }

    #[test]
    fn flat_frame_is_levi_flat() {
        let f = HFrame::flat(4, 3, DomainBox::cube(4, 1.0)).unwrap();
        assert_eq!(
            f.levi_matrix(&[0.1, 0.2, 0.3, 0.4])
                .unwrap()
                .matrix()
                .amax(),
            0.0
        );
    }

    #[test]
    fn singular_frame_is_rejected() {
        let base = [0.0, 0.0];
        let x0 = VectorField::coordinate(2, 2, &base, 0);
        // X_1 = x_1 d_1 degenerates on x_1 = 0
        let x1 = VectorField::from_components(vec![
            Jet::zero(2, 2, &base),
            Jet::variable(2, 2, &base, 1),
        ])
        .unwrap();
        let f = HFrame::new(vec![x0, x1], DomainBox::cube(2, 1.0)).unwrap();
        assert!(matches!(
            f.levi_matrix(&[0.0, 0.0]),
            Err(Error::SingularFrame { .. })
        ));
        assert!(f.checked_frame_matrix(&[0.0, 0.5]).is_ok());
    }

    #[test]
    fn coordinate_swap_breaks_h() {
        let f = HFrame::heisenberg(1, 3, DomainBox::cube(3, 2.0)).unwrap();
        let base = [0.0; 3];
        let swap = PolyMap::new(vec![
            Jet::variable(3, 3, &base, 1),
            Jet::variable(3, 3, &base, 0),
            Jet::variable(3, 3, &base, 2),
        ])
        .unwrap();
        let rep = pushforward_preserves_h(&swap, &f, &f, &[vec![0.1, 0.2, 0.3]]).unwrap();
        assert!(rep.max_residual > 0.5);
        let id = PolyMap::identity(3, 3, &base);
        let rep = pushforward_preserves_h(&id, &f, &f, &[vec![0.1, 0.2, 0.3]]).unwrap();
        assert_eq!(rep.max_residual, 0.0);
    }
}
