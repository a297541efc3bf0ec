use nalgebra::DVector;

use super::maps::{heisenberg_map, push_through_shear, HeisenbergMap};
use crate::approx::{RateReport, TGrid};
use crate::error::{Error, Result};
use crate::fields::{HFrame, StructureConstants, VectorField};
use crate::jets::{weight, Jet};

/// `|a_0(m)| > A0_REL_TOL * |a(m)|` selects the weight-2 model.
pub const A0_REL_TOL: f64 = 1e-9;

/// Ratios `|a_0| / |a|` inside this band are reported as borderline.
const A0_FLAG_BAND: (f64, f64) = (1e-12, 1e-6);

/// Left-invariant model of a vector field at `m` in Heisenberg coordinates:
/// `sum_i v_i d_i + (sum_k s_k x_k) d_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelField {
    pub m: Vec<f64>,
    /// 2 for the transverse type, 1 otherwise.
    pub weight: i32,
    /// Constant coefficients `v_0, ..., v_d`.
    pub constant: DVector<f64>,
    /// Coefficients `s_1, ..., s_d` of the linear `d_0` part (0-based).
    pub x0_linear: DVector<f64>,
    /// `|a_0(m)|` sits close to the case-split cutoff.
    pub borderline: bool,
}

impl ModelField {
    /// `X_0^m = d_0`.
    pub fn transverse(m: &[f64], d: usize, a0: f64) -> Self {
        let mut constant = DVector::zeros(d + 1);
        constant[0] = a0;
        ModelField {
            m: m.to_vec(),
            weight: 2,
            constant,
            x0_linear: DVector::zeros(d),
            borderline: false,
        }
    }

    /// `sum_j a_j X_j^m` with `X_j^m = d_j - 1/2 sum_k L_jk x_k d_0`.
    pub fn horizontal(m: &[f64], l: &StructureConstants, a: &[f64]) -> Self {
        let d = l.d();
        let mut constant = DVector::zeros(d + 1);
        for j in 0..d {
            constant[j + 1] = a[j];
        }
        let x0_linear = DVector::from_fn(d, |k, _| {
            (0..d).map(|j| -0.5 * a[j] * l.matrix()[(j, k)]).sum()
        });
        ModelField {
            m: m.to_vec(),
            weight: 1,
            constant,
            x0_linear,
            borderline: false,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant.iter().all(|v| *v == 0.0) && self.x0_linear.iter().all(|v| *v == 0.0)
    }

    /// The model as a polynomial field expanded at the origin.
    pub fn to_field(&self, order: u32) -> Result<VectorField> {
        let dim = self.constant.len();
        let base = vec![0.0; dim];
        let comps = (0..dim)
            .map(|i| {
                let c = Jet::constant(dim, order, &base, self.constant[i]);
                if i != 0 || order == 0 {
                    return Ok(c);
                }
                let terms: Vec<(f64, Vec<u8>)> = (0..dim - 1)
                    .map(|k| {
                        let mut e = vec![0u8; dim];
                        e[k + 1] = 1;
                        (self.x0_linear[k], e)
                    })
                    .collect();
                c.add(&Jet::from_terms(
                    dim,
                    order,
                    &base,
                    terms.iter().map(|(a, e)| (*a, e.as_slice())),
                )?)
            })
            .collect::<Result<Vec<_>>>()?;
        VectorField::from_components(comps)
    }
}

/// Model field of `x` at `m` from its frame coefficients `a(m)`:
/// `a_0(m) X_0^m` when `a_0(m) != 0`, else `sum_j a_j(m) X_j^m`.
pub fn model_field(x: &VectorField, frame: &HFrame, m: &[f64]) -> Result<ModelField> {
    let a = frame.expand(x, m)?;
    let l = frame.levi_matrix(m)?;
    let norm = a.amax();
    let ratio = if norm > 0.0 { a[0].abs() / norm } else { 0.0 };
    let mut model = if norm > 0.0 && ratio > A0_REL_TOL {
        ModelField::transverse(m, frame.d(), a[0])
    } else {
        ModelField::horizontal(m, &l, &a.as_slice()[1..])
    };
    model.borderline = ratio > A0_FLAG_BAND.0 && ratio < A0_FLAG_BAND.1;
    Ok(model)
}

fn scale_exponent(k: usize, e: &crate::jets::Exponent, w: i32) -> i32 {
    w - weight(k) + e.weighted_degree() as i32
}

/// `t^w delta_t^* X`: the monomial `x^a` of component `k` is multiplied by
/// `t^(w - w_k + |a|_w)`.
pub fn dilation_scaled(x: &VectorField, w: i32, t: f64) -> VectorField {
    let comps = x
        .components()
        .iter()
        .enumerate()
        .map(|(k, c)| c.map_coeffs(|e, v| v * t.powi(scale_exponent(k, e, w))))
        .collect();
    VectorField::from_components(comps).expect("scaling keeps components compatible")
}

/// The `t -> 0` limit of `t^w delta_t^* X`, i.e. its terms with zero scale
/// exponent, and the largest coefficient carrying a negative exponent.
pub fn leading_part(x: &VectorField, w: i32) -> (VectorField, f64) {
    let mut singular: f64 = 0.0;
    let comps = x
        .components()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            for (e, v) in c.terms() {
                if scale_exponent(k, e, w) < 0 {
                    singular = singular.max(v.abs());
                }
            }
            c.filter(|e| scale_exponent(k, e, w) == 0)
        })
        .collect();
    (
        VectorField::from_components(comps).expect("filtering keeps components compatible"),
        singular,
    )
}

/// Largest value of `|component|` over `samples`.
pub(crate) fn sup_over(x: &VectorField, samples: &[Vec<f64>]) -> f64 {
    samples.iter().map(|p| x.eval(p).amax()).fold(0.0, f64::max)
}

/// Convergence of `t^w delta_t^* X` to its model field `X^m`, where `X` is
/// pushed to Heisenberg coordinates at `m`. Residuals are sup norms over
/// `samples` (points of the model group).
pub fn dilation_limit_check(
    x: &VectorField,
    frame: &HFrame,
    m: &[f64],
    grid: &TGrid,
    samples: &[Vec<f64>],
    slope_tol: f64,
) -> Result<RateReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty scale grid".into()));
    }
    let hm = heisenberg_map(frame, m)?;
    let model = model_field(x, frame, m)?;
    let order = 2 * x.order() + 1;
    let pushed = hm.push_field(x, order)?;
    let target = model.to_field(order)?;
    let residuals = grid
        .values()
        .iter()
        .map(|&t| {
            let diff = dilation_scaled(&pushed, model.weight, t).sub(&target)?;
            Ok((t, sup_over(&diff, samples)))
        })
        .collect::<Result<Vec<_>>>()?;
    RateReport::from_residuals(residuals, slope_tol)
}

/// Residuals of the two normal-form identities at `hm.u()`:
/// pushing `X_j^(u) = d_j + sum_k b_jk x_k d_0` through the shear gives
/// `X_j^m`, and the leading part of `eps_* X_j` is `X_j^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormCheck {
    pub shear_pushforward: f64,
    pub leading_part: f64,
    /// `|L - (b^t - b)|_max`.
    pub b_levi: f64,
}

pub fn normal_form_check(frame: &HFrame, hm: &HeisenbergMap) -> Result<NormalFormCheck> {
    let d = frame.d();
    let dim = d + 1;
    let u = hm.u();
    let l = frame.levi_matrix(u)?;
    let b = hm.b();
    let order = frame.order().max(2);
    let base = vec![0.0; dim];
    let pushed = hm.pushed_frame(frame)?;
    let mut shear_pushforward: f64 = 0.0;
    let mut leading: f64 = 0.0;
    for j in 1..=d {
        let mut unit = vec![0.0; d];
        unit[j - 1] = 1.0;
        let expected = ModelField::horizontal(u, &l, &unit).to_field(order)?;

        let mut comps: Vec<Jet> = VectorField::coordinate(dim, order, &base, j)
            .components()
            .to_vec();
        let terms: Vec<(f64, Vec<u8>)> = (0..d)
            .map(|k| {
                let mut e = vec![0u8; dim];
                e[k + 1] = 1;
                (b[(j - 1, k)], e)
            })
            .collect();
        comps[0] = Jet::from_terms(
            dim,
            order,
            &base,
            terms.iter().map(|(a, e)| (*a, e.as_slice())),
        )?;
        let privileged_model = VectorField::from_components(comps)?;
        let through = push_through_shear(hm.shear(), &privileged_model)?;
        shear_pushforward =
            shear_pushforward.max(through.with_order(order).max_coeff_diff(&expected));

        let (lead, singular) = leading_part(&pushed[j], 1);
        let lead = lead.truncate(order);
        leading = leading.max(lead.max_coeff_diff(&expected)).max(singular);
    }
    let b_levi = (l.matrix() - (b.transpose() - b)).amax();
    Ok(NormalFormCheck {
        shear_pushforward,
        leading_part: leading,
        b_levi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::SLOPE_TOL;
    use crate::fields::DomainBox;

    fn h3() -> HFrame {
        HFrame::heisenberg(1, 3, DomainBox::cube(3, 4.0)).unwrap()
    }

    fn samples() -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for a in [-1.0, 0.0, 1.0] {
            for b in [-1.0, 0.5, 1.0] {
                for c in [-0.5, 1.0] {
                    out.push(vec![a, b, c]);
                }
            }
        }
        out
    }

    #[test]
    fn model_of_x0_is_transverse() {
        let f = h3();
        let m = model_field(f.field(0), &f, &[0.0; 3]).unwrap();
        assert_eq!(m.weight, 2);
        assert_eq!(m.constant.as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn model_of_x1() {
        let f = h3();
        let m = model_field(f.field(1), &f, &[0.0; 3]).unwrap();
        assert_eq!(m.weight, 1);
        // d_1 + x_2 d_0
        assert_eq!(m.constant.as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(m.x0_linear.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn vanishing_section_has_zero_model() {
        let f = h3();
        let x0 = Jet::variable(3, 3, &[0.0; 3], 0);
        let m = model_field(&f.field(1).mul_fn(&x0).unwrap(), &f, &[0.0; 3]).unwrap();
        assert!(m.is_zero());
        assert_eq!(m.weight, 1);
    }

    #[test]
    fn left_invariant_field_is_exactly_homogeneous() {
        let f = h3();
        let r = dilation_limit_check(
            f.field(1),
            &f,
            &[0.0; 3],
            &TGrid::default(),
            &samples(),
            SLOPE_TOL,
        )
        .unwrap();
        assert!(r.is_exact());
        assert_eq!(r.max_residual(), 0.0);
    }

    #[test]
    fn quadratic_perturbation_converges_at_unit_rate() {
        let f = h3();
        let x1sq = Jet::from_terms(3, 3, &[0.0; 3], [(1.0, &[0u8, 2, 0][..])]).unwrap();
        let x = f.field(1).add(&f.field(0).mul_fn(&x1sq).unwrap()).unwrap();
        let r = dilation_limit_check(&x, &f, &[0.0; 3], &TGrid::default(), &samples(), SLOPE_TOL)
            .unwrap();
        let s = r.slope.unwrap();
        assert!((s - 1.0).abs() < 0.1, "slope {s}");
        assert!(r.verdict.is_pass());
    }

    #[test]
    fn linear_transverse_perturbation_changes_the_limit() {
        // X_1 + x_1 X_0 has a_0(0) = 0, yet its leading part is X_1^m + x_1 d_0
        let f = h3();
        let x1 = Jet::variable(3, 3, &[0.0; 3], 1);
        let x = f.field(1).add(&f.field(0).mul_fn(&x1).unwrap()).unwrap();
        let r = dilation_limit_check(&x, &f, &[0.0; 3], &TGrid::default(), &samples(), SLOPE_TOL)
            .unwrap();
        assert!(!r.verdict.is_pass());
        assert!(r.residuals.iter().all(|(_, v)| (*v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn normal_form_on_heisenberg_frame() {
        let f = h3();
        for u in [[0.0, 0.0, 0.0], [0.5, 1.0, -0.3]] {
            let hm = heisenberg_map(&f, &u).unwrap();
            let c = normal_form_check(&f, &hm).unwrap();
            assert!(c.shear_pushforward < 1e-12, "{c:?}");
            assert!(c.leading_part < 1e-12, "{c:?}");
            assert!(c.b_levi < 1e-12, "{c:?}");
        }
    }
}
