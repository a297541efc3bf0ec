#![allow(dead_code)]

use hgroupoid_core::{DomainBox, HFrame, Jet, PolyMap, VectorField};
use nalgebra::DMatrix;

pub type Terms<'a> = &'a [(f64, &'a [u8])];

pub fn jet(dim: usize, order: u32, terms: Terms) -> Jet {
    Jet::from_terms(dim, order, &vec![0.0; dim], terms.iter().copied()).unwrap()
}

pub fn poly(dim: usize, order: u32, comps: &[Terms]) -> PolyMap {
    PolyMap::new(comps.iter().map(|t| jet(dim, order, t)).collect()).unwrap()
}

pub fn field(dim: usize, order: u32, comps: &[Terms]) -> VectorField {
    VectorField::from_components(poly(dim, order, comps).into_components()).unwrap()
}

pub fn h3() -> HFrame {
    HFrame::heisenberg(1, 3, DomainBox::cube(3, 4.0)).unwrap()
}

pub fn h5() -> HFrame {
    HFrame::heisenberg(2, 3, DomainBox::cube(5, 4.0)).unwrap()
}

/// `X_1 = d_1 + x_2 d_0`, `X_2 = (1 + x_1^2)(d_2 - x_1 d_0)`: a rescaled
/// contact frame whose Levi form varies from point to point.
pub fn darboux_a() -> HFrame {
    let x0 = field(3, 3, &[&[(1.0, &[0, 0, 0])], &[], &[]]);
    let x1 = field(3, 3, &[&[(1.0, &[0, 0, 1])], &[(1.0, &[0, 0, 0])], &[]]);
    let x2 = field(
        3,
        3,
        &[
            &[(-1.0, &[0, 1, 0]), (-1.0, &[0, 3, 0])],
            &[],
            &[(1.0, &[0, 0, 0]), (1.0, &[0, 2, 0])],
        ],
    );
    HFrame::new(vec![x0, x1, x2], DomainBox::cube(3, 2.0)).unwrap()
}

/// Tangent frame of the leaves `x_0 = x_1^2 x_2 + c`.
pub fn curved_foliation() -> HFrame {
    let x0 = field(3, 3, &[&[(1.0, &[0, 0, 0])], &[], &[]]);
    let x1 = field(3, 3, &[&[(2.0, &[0, 1, 1])], &[(1.0, &[0, 0, 0])], &[]]);
    let x2 = field(3, 3, &[&[(1.0, &[0, 2, 0])], &[], &[(1.0, &[0, 0, 0])]]);
    HFrame::new(vec![x0, x1, x2], DomainBox::cube(3, 2.0)).unwrap()
}

/// `d = 4`: `X_1 = d_1 + x_2 d_0`, `X_2 = d_2 - x_1 d_0`, `X_3 = d_3 + x_1 d_0`,
/// `X_4 = d_4 + x_4 d_0`. Levi form of rank 2.
pub fn degenerate_rank2() -> HFrame {
    let o = [0u8; 5];
    let e = |i: usize| {
        let mut v = o;
        v[i] = 1;
        v
    };
    let (e1, e2, e4) = (e(1), e(2), e(4));
    let x0 = field(5, 3, &[&[(1.0, &o)], &[], &[], &[], &[]]);
    let x1 = field(5, 3, &[&[(1.0, &e2)], &[(1.0, &o)], &[], &[], &[]]);
    let x2 = field(5, 3, &[&[(-1.0, &e1)], &[], &[(1.0, &o)], &[], &[]]);
    let x3 = field(5, 3, &[&[(1.0, &e1)], &[], &[], &[(1.0, &o)], &[]]);
    let x4 = field(5, 3, &[&[(1.0, &e4)], &[], &[], &[], &[(1.0, &o)]]);
    HFrame::new(vec![x0, x1, x2, x3, x4], DomainBox::cube(5, 2.0)).unwrap()
}

pub fn corpus() -> Vec<(&'static str, HFrame)> {
    vec![
        ("heisenberg3", h3()),
        ("heisenberg5", h5()),
        ("darboux-a", darboux_a()),
        ("curved-foliation", curved_foliation()),
        ("flat", HFrame::flat(3, 3, DomainBox::cube(3, 2.0)).unwrap()),
        ("degenerate-rank2", degenerate_rank2()),
    ]
}

/// Central-difference Jacobian of a vector-valued function.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, n);
    for k in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        let (fp, fm) = (f(&xp), f(&xm));
        for i in 0..m {
            jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// `[X, Y](x) = DY(x) X(x) - DX(x) Y(x)` from pointwise evaluation only.
pub fn fd_bracket(x: &VectorField, y: &VectorField, at: &[f64]) -> nalgebra::DVector<f64> {
    let h = 1e-5;
    let dx = fd_jacobian(|p| x.eval(p).as_slice().to_vec(), at, h);
    let dy = fd_jacobian(|p| y.eval(p).as_slice().to_vec(), at, h);
    dy * x.eval(at) - dx * y.eval(at)
}

/// Levi matrix from the finite-difference bracket, expanded in the frame.
pub fn fd_levi(frame: &HFrame, at: &[f64]) -> DMatrix<f64> {
    let d = frame.d();
    let bt = frame.frame_matrix(at).transpose();
    let lu = bt.lu();
    DMatrix::from_fn(d, d, |j, k| {
        let br = fd_bracket(frame.field(j + 1), frame.field(k + 1), at);
        lu.solve(&br).unwrap()[0]
    })
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}
