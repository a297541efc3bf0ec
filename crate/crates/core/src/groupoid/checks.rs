use nalgebra::{DMatrix, DVector};

use super::chart::{max_diff, GroupoidChart, GroupoidElement};
use crate::approx::{
    denoise, rate_fit, tangent_map_h, RateFit, RateReport, TGrid, TangentMapH, Verdict,
};
use crate::coords::privileged_map;
use crate::error::{Error, Result};
use crate::group::{dilate, BilinearLaw, GroupElement};
use crate::jets::PolyMap;

fn amax(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// A Heisenberg diffeomorphism between two charts, given in coordinates.
#[derive(Clone, Debug)]
pub struct HeisenbergDiffeo {
    pub name: String,
    pub map: PolyMap,
}

impl HeisenbergDiffeo {
    pub fn new(name: impl Into<String>, map: PolyMap) -> Self {
        HeisenbergDiffeo {
            name: name.into(),
            map,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.map.eval(x)
    }

    pub fn tangent(
        &self,
        src: &GroupoidChart,
        dst: &GroupoidChart,
        x: &[f64],
    ) -> Result<TangentMapH> {
        tangent_map_h(&self.map, src.frame(), dst.frame(), x)
    }
}

/// Chart change `gamma_dst^{-1} o Phi_H o gamma_src`:
/// `(phi(x), t^{-1}.eps_{phi(x)} o phi o eps_x^{-1}(t.X), t)` for `t > 0` and
/// `(phi(x), phi'_H(x) X, 0)` at `t = 0`.
pub fn transition(
    src: &GroupoidChart,
    dst: &GroupoidChart,
    phi: &HeisenbergDiffeo,
    x: &[f64],
    v: &GroupElement,
    t: f64,
) -> Result<(Vec<f64>, GroupElement)> {
    let image = phi.apply(x);
    if t == 0.0 {
        let tm = phi.tangent(src, dst, x)?;
        return Ok((image, GroupElement::from_slice(&tm.apply(v.as_slice()))?));
    }
    let q = src.eps(x)?.apply_inv(&dilate(t, v.as_slice()));
    let q_img = phi.apply(&q);
    let y = dst.eps(&image)?.apply(&q_img);
    Ok((image, GroupElement::from_slice(&dilate(1.0 / t, &y))?))
}

/// Convergence of the transition fiber coordinate `X'(t)` to `X'(0)`.
pub fn transition_rate(
    src: &GroupoidChart,
    dst: &GroupoidChart,
    phi: &HeisenbergDiffeo,
    x: &[f64],
    v: &GroupElement,
    grid: &TGrid,
    slope_tol: f64,
) -> Result<RateReport> {
    let (_, limit) = transition(src, dst, phi, x, v, 0.0)?;
    let scale = 1.0 + amax(x).max(amax(v.as_slice())).max(amax(&phi.apply(x)));
    let residuals = grid
        .values()
        .iter()
        .map(|&t| {
            let (_, vt) = transition(src, dst, phi, x, v, t)?;
            Ok((t, vt.max_diff(&limit)))
        })
        .collect::<Result<Vec<_>>>()?;
    RateReport::from_residuals(denoise(residuals, scale), slope_tol)
}

/// Residual trace of a sequence `(p_n, q_n, t_n)` against a boundary target
/// `(p, X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityReport {
    /// `(t_n, |z_n - X| + |p_n - p|)` with `z_n = t_n^{-1}.eps_{p_n}(q_n)`.
    pub residuals: Vec<(f64, f64)>,
    pub slope: Option<f64>,
    pub verdict: Verdict,
}

/// Checks `t_n^{-1}.eps_{p_n}(q_n) -> X` and `p_n -> p`. A sequence
/// converges when its last residual is below `tol` or its residuals decay at
/// rate at least `1 - slope_tol`.
pub fn continuity_check(
    chart: &GroupoidChart,
    seq: &[(Vec<f64>, Vec<f64>, f64)],
    p: &[f64],
    target: &GroupElement,
    tol: f64,
    slope_tol: f64,
) -> Result<ContinuityReport> {
    let residuals = seq
        .iter()
        .map(|(pn, qn, tn)| {
            let z = dilate(1.0 / tn, &chart.eps(pn)?.apply(qn));
            Ok((*tn, max_diff(&z, target.as_slice()).max(max_diff(pn, p))))
        })
        .collect::<Result<Vec<_>>>()?;
    let last = residuals.last().map(|r| r.1).unwrap_or(f64::INFINITY);
    let slope = match rate_fit(&residuals) {
        Ok(RateFit::Slope(s)) => Some(s),
        _ => None,
    };
    let converges = last <= tol || slope.is_some_and(|s| s >= 1.0 - slope_tol);
    Ok(ContinuityReport {
        residuals,
        slope,
        verdict: Verdict::from_bool(converges),
    })
}

/// The continuity condition re-checked in a second chart: the sequence and
/// target are transported by `phi`, the boundary point through `phi'_H`.
#[allow(clippy::too_many_arguments)]
pub fn continuity_check_across(
    src: &GroupoidChart,
    dst: &GroupoidChart,
    phi: &HeisenbergDiffeo,
    seq: &[(Vec<f64>, Vec<f64>, f64)],
    p: &[f64],
    target: &GroupElement,
    tol: f64,
    slope_tol: f64,
) -> Result<(ContinuityReport, ContinuityReport)> {
    let here = continuity_check(src, seq, p, target, tol, slope_tol)?;
    let moved: Vec<_> = seq
        .iter()
        .map(|(pn, qn, tn)| (phi.apply(pn), phi.apply(qn), *tn))
        .collect();
    let (p2, target2) = transition(src, dst, phi, p, target, 0.0)?;
    let there = continuity_check(dst, &moved, &p2, &target2, tol, slope_tol)?;
    Ok((here, there))
}

/// Result of [`composition_limit_check`].
#[derive(Clone, Debug)]
pub struct CompositionLimit {
    /// `X.Y` in the fiber group at `x`.
    pub limit: GroupElement,
    /// Rate of `t^{-1}.eps_x o eps_y^{-1}(t.Y) -> X.Y`, `y = eps_x^{-1}(t.X)`.
    pub rate: RateReport,
    /// The same in privileged coordinates against the law with coefficients `b(x)`.
    pub privileged_limit: GroupElement,
    pub privileged_rate: RateReport,
}

impl CompositionLimit {
    pub fn verdict(&self) -> Verdict {
        self.rate.verdict.and(self.privileged_rate.verdict)
    }
}

/// Composition in chart coordinates and its `t -> 0` limit.
pub fn composition_limit_check(
    chart: &GroupoidChart,
    x: &[f64],
    v: &GroupElement,
    w: &GroupElement,
    grid: &TGrid,
    slope_tol: f64,
) -> Result<CompositionLimit> {
    let eps_x = chart.eps(x)?;
    let scale = 1.0 + amax(x).max(amax(v.as_slice())).max(amax(w.as_slice()));
    let limit = chart.fiber_group(x)?.mul(v, w)?;
    let residuals = grid
        .values()
        .iter()
        .map(|&t| {
            let y = eps_x.apply_inv(&dilate(t, v.as_slice()));
            let z = chart.eps(&y)?.apply_inv(&dilate(t, w.as_slice()));
            if !chart.frame().domain().contains(&z) {
                return Err(Error::OutOfDomain { point: z });
            }
            let expr = dilate(1.0 / t, &eps_x.apply(&z));
            Ok((t, max_diff(&expr, limit.as_slice())))
        })
        .collect::<Result<Vec<_>>>()?;
    let rate = RateReport::from_residuals(denoise(residuals, scale), slope_tol)?;

    let frame = chart.frame();
    let psi_x = privileged_map(frame, x)?;
    let law = BilinearLaw::from_b(&psi_x.b_matrix());
    let privileged_limit = GroupElement::from_slice(&law.mul(v.as_slice(), w.as_slice()))?;
    let residuals = grid
        .values()
        .iter()
        .map(|&t| {
            let y = psi_x.apply_inv(&dilate(t, v.as_slice()));
            let psi_y = privileged_map(frame, &y)?;
            let z = psi_y.apply_inv(&dilate(t, w.as_slice()));
            let expr = dilate(1.0 / t, &psi_x.apply(&z));
            Ok((t, max_diff(&expr, privileged_limit.as_slice())))
        })
        .collect::<Result<Vec<_>>>()?;
    let privileged_rate = RateReport::from_residuals(denoise(residuals, scale), slope_tol)?;
    Ok(CompositionLimit {
        limit,
        rate,
        privileged_limit,
        privileged_rate,
    })
}

/// `Phi_H(p, q, t) = (phi(p), phi(q), t)` and `Phi_H(p, X) = (phi(p), phi'_H(p) X)`.
pub fn functor_phi_h(
    src: &GroupoidChart,
    dst: &GroupoidChart,
    phi: &HeisenbergDiffeo,
    e: &GroupoidElement,
) -> Result<GroupoidElement> {
    match e {
        GroupoidElement::Interior { p, q, t } => {
            GroupoidElement::interior(phi.apply(p), phi.apply(q), *t)
        }
        GroupoidElement::Boundary { p, x } => {
            let tm = phi.tangent(src, dst, p)?;
            GroupoidElement::boundary(
                phi.apply(p),
                GroupElement::from_slice(&tm.apply(x.as_slice()))?,
            )
        }
    }
}

/// Largest discrepancy between `gamma_dst^{-1} o Phi_H o gamma_src` and
/// [`transition`] at `(x, X, t)`.
pub fn functor_chart_residual(
    src: &GroupoidChart,
    dst: &GroupoidChart,
    phi: &HeisenbergDiffeo,
    x: &[f64],
    v: &GroupElement,
    t: f64,
) -> Result<f64> {
    let e = src.gamma(x, v, t)?;
    let (p2, v2, t2) = dst.gamma_inv(&functor_phi_h(src, dst, phi, &e)?)?;
    let (p3, v3) = transition(src, dst, phi, x, v, t)?;
    Ok(max_diff(&p2, &p3).max(v2.max_diff(&v3)).max((t2 - t).abs()))
}

/// Normalized determinants of the chart Jacobian blocks of `r` and `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianSpot {
    /// `d_{x,t} r` for `r(x, X, t) = (x, t)`.
    pub range_det: f64,
    /// `d_{X,t} s` for `t > 0`, `d_{x,t} s` at `t = 0`, where
    /// `s(x, X, t) = (eps_x^{-1}(t.X), t)`; divided by the product of
    /// column norms.
    pub source_det: f64,
}

pub fn jacobian_spot_check(
    chart: &GroupoidChart,
    x: &[f64],
    v: &GroupElement,
    t: f64,
) -> Result<JacobianSpot> {
    let n = chart.dim();
    let range_det = DMatrix::<f64>::identity(n + 1, n + 1).determinant();
    if t == 0.0 {
        // s(x, X, 0) = (x, 0)
        let j = DMatrix::<f64>::identity(n + 1, n + 1);
        return Ok(JacobianSpot {
            range_det,
            source_det: j.determinant(),
        });
    }
    let y = dilate(t, v.as_slice());
    let dinv = chart.eps(x)?.inverse_jacobian(&y);
    let scale = DVector::from_fn(n, |i, _| if i == 0 { t * t } else { t });
    let dt = DVector::from_fn(n, |i, _| {
        if i == 0 {
            2.0 * t * v.as_slice()[0]
        } else {
            v.as_slice()[i]
        }
    });
    let mut j = DMatrix::zeros(n + 1, n + 1);
    j.view_mut((0, 0), (n, n))
        .copy_from(&(&dinv * DMatrix::from_diagonal(&scale)));
    j.view_mut((0, n), (n, 1)).copy_from(&(&dinv * dt));
    j[(n, n)] = 1.0;
    let norms: f64 = j.column_iter().map(|c| c.norm()).product();
    Ok(JacobianSpot {
        range_det,
        source_det: j.determinant() / norms,
    })
}
