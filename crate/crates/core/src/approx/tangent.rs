use nalgebra::{DMatrix, DVector};

use super::rate::{RateReport, TGrid, Verdict};
use crate::coords::{heisenberg_map, HeisenbergMap};
use crate::error::{Error, Result};
use crate::fields::HFrame;
use crate::jets::{weight, PolyMap};

/// Largest `|d F_0 / d x_j (0)|`, `j >= 1`, accepted for an H-preserving map.
pub const H_TOL: f64 = 1e-10;

/// Graded part `phi'_H(m) = diag(a00, A_par)` of the differential of a
/// Heisenberg diffeomorphism in Heisenberg coordinates at `m` and `phi(m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentMapH {
    pub m: Vec<f64>,
    pub image: Vec<f64>,
    pub a00: f64,
    pub a_par: DMatrix<f64>,
    /// The dropped column `d F' / d x_0 (0)`.
    pub b_col: DVector<f64>,
    /// `max_j |d F_0 / d x_j (0)|`; zero for exact H-preservation.
    pub h_residual: f64,
}

impl TangentMapH {
    pub fn dim(&self) -> usize {
        self.a_par.nrows() + 1
    }

    /// The block-diagonal matrix `diag(a00, A_par)`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut t = DMatrix::zeros(n, n);
        t[(0, 0)] = self.a00;
        t.view_mut((1, 1), (n - 1, n - 1)).copy_from(&self.a_par);
        t
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.matrix() * DVector::from_column_slice(x))
            .as_slice()
            .to_vec()
    }
}

/// `F = eps_{phi(m)} o phi o eps_m^{-1}` as a jet at the origin, truncated at
/// `order`. `phi` maps source chart coordinates to target chart coordinates.
pub fn heisenberg_conjugate(
    phi: &PolyMap,
    source: &HFrame,
    target: &HFrame,
    m: &[f64],
    order: u32,
) -> Result<PolyMap> {
    let (eps_src, eps_dst, image) = endpoint_maps(phi, source, target, m)?;
    conjugate_with(phi, &eps_src, &eps_dst, &image, order)
}

fn endpoint_maps(
    phi: &PolyMap,
    source: &HFrame,
    target: &HFrame,
    m: &[f64],
) -> Result<(HeisenbergMap, HeisenbergMap, Vec<f64>)> {
    if phi.dim_in() != source.dim() || phi.dim_out() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            actual: phi.dim_in(),
        });
    }
    if !source.domain().contains(m) {
        return Err(Error::OutOfDomain { point: m.to_vec() });
    }
    let image = phi.eval(m);
    if !target.domain().contains(&image) {
        return Err(Error::OutOfDomain { point: image });
    }
    Ok((
        heisenberg_map(source, m)?,
        heisenberg_map(target, &image)?,
        image,
    ))
}

fn conjugate_with(
    phi: &PolyMap,
    eps_src: &HeisenbergMap,
    eps_dst: &HeisenbergMap,
    image: &[f64],
    order: u32,
) -> Result<PolyMap> {
    let inner = eps_src.eps_inv_map(order)?;
    let moved = phi.recentered(eps_src.u()).with_order(order);
    let through = moved.compose(&inner)?;
    eps_dst.eps_map(order, image)?.compose(&through)
}

fn tangent_from_jet(f: &PolyMap, m: &[f64], image: &[f64]) -> TangentMapH {
    let j = f.linear_part();
    let n = j.nrows();
    let h_residual = (1..n).map(|k| j[(0, k)].abs()).fold(0.0, f64::max);
    TangentMapH {
        m: m.to_vec(),
        image: image.to_vec(),
        a00: j[(0, 0)],
        a_par: j.view((1, 1), (n - 1, n - 1)).into_owned(),
        b_col: j.view((1, 0), (n - 1, 1)).column(0).into_owned(),
        h_residual,
    }
}

/// The graded tangent map of a Heisenberg diffeomorphism at `m`.
pub fn tangent_map_h(
    phi: &PolyMap,
    source: &HFrame,
    target: &HFrame,
    m: &[f64],
) -> Result<TangentMapH> {
    let (eps_src, eps_dst, image) = endpoint_maps(phi, source, target, m)?;
    let f = conjugate_with(phi, &eps_src, &eps_dst, &image, 2)?;
    let t = tangent_from_jet(&f, m, &image);
    let scale = f.linear_part().amax().max(1.0);
    if t.h_residual > H_TOL * scale {
        return Err(Error::NotHeisenberg {
            residual: t.h_residual,
            tolerance: H_TOL * scale,
        });
    }
    if t.a00 == 0.0 || t.a00.is_nan() {
        return Err(Error::Singular {
            context: "transverse part of the tangent map",
        });
    }
    Ok(t)
}

/// Result of [`diffeo_expansion_check`].
#[derive(Clone, Debug)]
pub struct ExpansionCheck {
    pub tangent: TangentMapH,
    /// `c_jk = d^2 F_0 / dx_j dx_k (0)`, `1 <= j, k <= d` (0-based).
    pub c: DMatrix<f64>,
    pub c_max: f64,
    /// `c_max` below the coefficient tolerance.
    pub quadratic_verdict: Verdict,
    /// Rate of `t^{-1}.F(t.x) -> phi'_H x`.
    pub rate: RateReport,
}

impl ExpansionCheck {
    pub fn verdict(&self) -> Verdict {
        self.quadratic_verdict.and(self.rate.verdict)
    }
}

/// Checks the graded expansion of `phi` at `m`: the horizontal quadratic
/// coefficients of `F_0` must vanish, and `delta_{1/t} F (delta_t x)` must
/// approach `phi'_H x` at rate `O(t)` uniformly over `samples`.
#[allow(clippy::too_many_arguments)]
pub fn diffeo_expansion_check(
    phi: &PolyMap,
    source: &HFrame,
    target: &HFrame,
    m: &[f64],
    samples: &[Vec<f64>],
    grid: &TGrid,
    slope_tol: f64,
    coeff_tol: f64,
) -> Result<ExpansionCheck> {
    let order = source.order().max(3);
    let (eps_src, eps_dst, image) = endpoint_maps(phi, source, target, m)?;
    let f = conjugate_with(phi, &eps_src, &eps_dst, &image, order)?;
    let tangent = tangent_from_jet(&f, m, &image);
    let n = f.dim_in();
    let d = n - 1;
    let f0 = f.component(0);
    let c = DMatrix::from_fn(d, d, |j, k| {
        let mut e = vec![0u8; n];
        e[j + 1] += 1;
        e[k + 1] += 1;
        let coef = f0.coeff_of(&e);
        if j == k {
            2.0 * coef
        } else {
            coef
        }
    });
    let c_max = c.amax();
    let quadratic_verdict = Verdict::from_bool(c_max < coeff_tol);

    let t_mat = tangent.matrix();
    let residuals = grid
        .values()
        .iter()
        .map(|&t| {
            let scaled: Vec<_> = f
                .components()
                .iter()
                .enumerate()
                .map(|(k, comp)| {
                    comp.filter(|e| !e.is_zero())
                        .map_coeffs(|e, v| v * t.powi(e.weighted_degree() as i32 - weight(k)))
                })
                .collect();
            let mut sup: f64 = 0.0;
            for x in samples {
                let lin = &t_mat * DVector::from_column_slice(x);
                for (k, comp) in scaled.iter().enumerate() {
                    sup = sup.max((comp.eval(x) - lin[k]).abs());
                }
            }
            (t, sup)
        })
        .collect();
    let rate = RateReport::from_residuals(residuals, slope_tol)?;
    Ok(ExpansionCheck {
        tangent,
        c,
        c_max,
        quadratic_verdict,
        rate,
    })
}
