use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::fields::{HFrame, VectorField};
use crate::group::GradedShear;
use crate::jets::{checked_inverse, compose, Jet, PolyMap};

/// Privileged coordinates `psi_u(x) = A (x - u)` with `A = (B(u)^t)^{-1}`.
#[derive(Clone, Debug)]
pub struct PrivilegedMap {
    u: Vec<f64>,
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    map: PolyMap,
    pushed: Vec<VectorField>,
}

impl PrivilegedMap {
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// `A^{-1} = B(u)^t`.
    pub fn a_inv(&self) -> &DMatrix<f64> {
        &self.a_inv
    }

    /// `psi_u` expanded at `u`.
    pub fn as_map(&self) -> &PolyMap {
        &self.map
    }

    /// `psi_{u*} X_j`, expanded at the origin; `X_j(0) = d_j`.
    pub fn pushed_frame(&self) -> &[VectorField] {
        &self.pushed
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let dx = DVector::from_iterator(x.len(), x.iter().zip(&self.u).map(|(a, b)| a - b));
        (&self.a * dx).as_slice().to_vec()
    }

    pub fn apply_inv(&self, y: &[f64]) -> Vec<f64> {
        let v = &self.a_inv * DVector::from_column_slice(y);
        v.iter().zip(&self.u).map(|(a, b)| a + b).collect()
    }

    /// `|A B(u)^t - I|_max`.
    pub fn normalization_residual(&self) -> f64 {
        let n = self.a.nrows();
        (&self.a * &self.a_inv - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// `b_jk`: coefficient of `y_k` in the `d_0` component of the pushed
    /// `X_j`, for `1 <= j, k <= d` (stored 0-based).
    pub fn b_matrix(&self) -> DMatrix<f64> {
        let d = self.a.nrows() - 1;
        DMatrix::from_fn(d, d, |j, k| {
            self.pushed[j + 1].component(0).linear_coeff(k + 1)
        })
    }
}

/// `x -> offset + m x` on jets expanded at the origin, applied to a field's
/// components: returns `m * comps`.
fn linear_combination(m: &DMatrix<f64>, comps: &[Jet]) -> Result<Vec<Jet>> {
    let n = comps.len();
    let proto = &comps[0];
    (0..m.nrows())
        .map(|i| {
            let mut acc = Jet::zero(proto.dim(), proto.order(), proto.base());
            for (k, c) in comps.iter().enumerate().take(n) {
                let coef = m[(i, k)];
                if coef != 0.0 {
                    acc = acc.add(&c.scale(coef))?;
                }
            }
            Ok(acc)
        })
        .collect()
}

/// Privileged coordinates at `u` together with the pushed frame.
pub fn privileged_map(frame: &HFrame, u: &[f64]) -> Result<PrivilegedMap> {
    let b = frame.checked_frame_matrix(u)?;
    let a_inv = b.transpose();
    let a = checked_inverse(&a_inv, "privileged coordinates")?;
    let n = frame.dim();
    let order = frame.order();
    let map = PolyMap::affine(&a, u, &vec![0.0; n], order);
    let inner = PolyMap::affine(&a_inv, &vec![0.0; n], u, order);
    let pushed = frame
        .recentered(u)
        .iter()
        .map(|x| {
            let comps = x
                .components()
                .iter()
                .map(|c| compose(c, &inner))
                .collect::<Result<Vec<_>>>()?;
            VectorField::from_components(linear_combination(&a, &comps)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PrivilegedMap {
        u: u.to_vec(),
        a,
        a_inv,
        map,
        pushed,
    })
}

/// Structure coefficients `b` of the privileged model group at `u`.
pub fn b_matrix(frame: &HFrame, u: &[f64]) -> Result<DMatrix<f64>> {
    Ok(privileged_map(frame, u)?.b_matrix())
}

/// Heisenberg coordinates `eps_u = phi_u o psi_u`, where `phi_u` is the graded
/// shear `x_0 -> x_0 - 1/4 sum (b_jk + b_kj) x_j x_k`.
#[derive(Clone, Debug)]
pub struct HeisenbergMap {
    privileged: PrivilegedMap,
    b: DMatrix<f64>,
    shear: GradedShear,
    order: u32,
}

impl HeisenbergMap {
    pub fn u(&self) -> &[f64] {
        self.privileged.u()
    }

    pub fn privileged(&self) -> &PrivilegedMap {
        &self.privileged
    }

    pub fn a(&self) -> &DMatrix<f64> {
        self.privileged.a()
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// The normalizing shear `phi_u`, with `c = -(b + b^t)/2`.
    pub fn shear(&self) -> &GradedShear {
        &self.shear
    }

    pub fn dim(&self) -> usize {
        self.b.nrows() + 1
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// `eps_u(x)`, evaluated exactly.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.shear.apply(&self.privileged.apply(x))
    }

    /// `eps_u^{-1}(y) = u + A^{-1} phi_u^{-1}(y)`, evaluated exactly.
    pub fn apply_inv(&self, y: &[f64]) -> Vec<f64> {
        self.privileged.apply_inv(&self.shear.inverse().apply(y))
    }

    /// Jacobian of `eps_u` at `x`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        self.shear.jacobian(&self.privileged.apply(x)) * self.a()
    }

    /// Jacobian of `eps_u^{-1}` at `y`.
    pub fn inverse_jacobian(&self, y: &[f64]) -> DMatrix<f64> {
        self.privileged.a_inv() * self.shear.inverse().jacobian(y)
    }

    pub fn phi_map(&self, order: u32) -> Result<PolyMap> {
        self.shear.as_map(order)
    }

    /// `eps_u` as a polynomial map expanded at `base`.
    pub fn eps_map(&self, order: u32, base: &[f64]) -> Result<PolyMap> {
        let n = self.dim();
        let psi = PolyMap::affine(self.a(), self.u(), &vec![0.0; n], order);
        Ok(self.phi_map(order)?.compose(&psi)?.recentered(base))
    }

    /// `eps_u^{-1}` as a polynomial map expanded at the origin.
    pub fn eps_inv_map(&self, order: u32) -> Result<PolyMap> {
        let n = self.dim();
        let psi_inv = PolyMap::affine(self.privileged.a_inv(), &vec![0.0; n], self.u(), order);
        psi_inv.compose(&self.shear.inverse().as_map(order)?)
    }

    /// `eps_{u*} X` expanded at the origin, truncated at `order`. Exact for
    /// polynomial fields when `order >= 2 deg X + 1`.
    pub fn push_field(&self, x: &VectorField, order: u32) -> Result<VectorField> {
        let inner = self.eps_inv_map(order)?;
        let local = x.recentered(self.u()).with_order(order);
        let comps = local
            .components()
            .iter()
            .map(|c| compose(c, &inner))
            .collect::<Result<Vec<_>>>()?;
        let v = linear_combination(self.a(), &comps)?;
        VectorField::from_components(apply_shear_differential(&self.shear, v)?)
    }

    /// Pushed frame `eps_{u*} X_j`, exact at order `2K + 1`.
    pub fn pushed_frame(&self, frame: &HFrame) -> Result<Vec<VectorField>> {
        let order = 2 * frame.order() + 1;
        frame
            .fields()
            .iter()
            .map(|x| self.push_field(x, order))
            .collect()
    }
}

/// Multiplies field components `v` (functions of `y`) by `D phi(y)`, whose
/// only nontrivial row is `d_k phi_0 = sum_j c_kj y_j`; this is the shear
/// pushforward because `phi^{-1}` fixes `y'`.
fn apply_shear_differential(shear: &GradedShear, mut v: Vec<Jet>) -> Result<Vec<Jet>> {
    let proto = v[0].clone();
    let (dim, order, base) = (proto.dim(), proto.order(), proto.base().to_vec());
    let c = shear.c();
    let mut row0 = v[0].clone();
    for k in 0..shear.d() {
        let terms: Vec<(f64, Vec<u8>)> = (0..shear.d())
            .filter(|&j| c[(k, j)] != 0.0)
            .map(|j| {
                let mut e = vec![0u8; dim];
                e[j + 1] = 1;
                (c[(k, j)], e)
            })
            .collect();
        if terms.is_empty() {
            continue;
        }
        let dk = Jet::from_terms(
            dim,
            order,
            &base,
            terms.iter().map(|(a, e)| (*a, e.as_slice())),
        )?;
        row0 = row0.add(&dk.mul(&v[k + 1])?)?;
    }
    v[0] = row0;
    Ok(v)
}

/// Pushes a field expanded at the origin through a graded shear.
pub fn push_through_shear(shear: &GradedShear, x: &VectorField) -> Result<VectorField> {
    let inner = shear.inverse().as_map(x.order().max(2))?;
    let x = x.with_order(inner.order());
    let comps = x
        .components()
        .iter()
        .map(|c| compose(c, &inner))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(apply_shear_differential(shear, comps)?)
}

/// Heisenberg coordinates at `u`.
pub fn heisenberg_map(frame: &HFrame, u: &[f64]) -> Result<HeisenbergMap> {
    let privileged = privileged_map(frame, u)?;
    let b = privileged.b_matrix();
    let shear = GradedShear::normalizing(&b);
    Ok(HeisenbergMap {
        privileged,
        b,
        shear,
        order: frame.order().max(2),
    })
}
