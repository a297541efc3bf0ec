mod common;

use common::{corpus, curved_foliation, fd_jacobian, h3, h5};
use hgroupoid_core::approx::{TGrid, SLOPE_TOL};
use hgroupoid_core::coords::{
    b_matrix, dilation_limit_check, heisenberg_map, model_field, normal_form_check, privileged_map,
};
use hgroupoid_core::group::BilinearLaw;
use hgroupoid_core::sampling::{sample_points, tensor_grid};
use hgroupoid_core::{DomainBox, HFrame};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn base_points(frame: &HFrame) -> Vec<Vec<f64>> {
    sample_points(&frame.domain().shrunk(0.5), 3, 256)
}

#[test]
fn levi_is_antisymmetric_part_of_b_on_corpus() {
    for (name, frame) in corpus() {
        let points = base_points(&frame);
        assert!(points.len() >= 25);
        for u in &points {
            let b = b_matrix(&frame, u).unwrap();
            let l = frame.levi_matrix(u).unwrap();
            let err = (l.matrix() - (b.transpose() - &b)).amax();
            assert!(err < 1e-10, "{name} at {u:?}: {err}");
        }
    }
}

#[test]
fn heisenberg_coordinates_normalize_the_corpus() {
    for (name, frame) in corpus() {
        for u in base_points(&frame) {
            let hm = heisenberg_map(&frame, &u).unwrap();
            let check = normal_form_check(&frame, &hm).unwrap();
            assert!(
                check.shear_pushforward < 1e-10,
                "{name} at {u:?}: {check:?}"
            );
            assert!(check.leading_part < 1e-10, "{name} at {u:?}: {check:?}");
            assert!(check.b_levi < 1e-10, "{name} at {u:?}: {check:?}");
        }
    }
}

/// Independent of the jet machinery: `D eps_u(u) X_j(u) = e_j`, by finite
/// differences of the pointwise map.
#[test]
fn heisenberg_coordinates_send_frame_to_unit_vectors() {
    for (name, frame) in corpus() {
        for u in tensor_grid(&frame.domain().shrunk(0.5), 2) {
            let hm = heisenberg_map(&frame, &u).unwrap();
            let jac = fd_jacobian(|x| hm.apply(x), &u, 1e-6);
            let n = frame.dim();
            let got = jac * frame.frame_matrix(&u).transpose();
            let err = (got - DMatrix::<f64>::identity(n, n)).amax();
            assert!(err < 1e-7, "{name} at {u:?}: {err}");
            assert!(DVector::from_vec(hm.apply(&u)).amax() < 1e-14);
        }
    }
}

#[test]
fn privileged_coordinates_at_an_off_center_point() {
    // B(u)^t for u = (0, 1, 0) has columns X_0 = (1,0,0), X_1 = (0,1,0),
    // X_2 = (-1,0,1); its inverse, by hand:
    let expected = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let psi = privileged_map(&h3(), &[0.0, 1.0, 0.0]).unwrap();
    assert!((psi.a() - &expected).amax() < 1e-15);
    assert!(psi.normalization_residual() < 1e-15);
    for (j, pushed) in psi.pushed_frame().iter().enumerate() {
        let mut unit = DVector::zeros(3);
        unit[j] = 1.0;
        assert!((pushed.value_at_base() - unit).amax() < 1e-15);
    }
    common::assert_close(psi.apply(&[2.0, 1.0, 3.0])[0], 5.0, 1e-15, "psi_0");
}

#[test]
fn b_at_origin_for_heisenberg_frames() {
    let b3 = b_matrix(&h3(), &[0.0; 3]).unwrap();
    assert_eq!(b3, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    let b5 = b_matrix(&h5(), &[0.0; 5]).unwrap();
    let mut want = DMatrix::zeros(4, 4);
    for j in 0..2 {
        want[(j, j + 2)] = 1.0;
        want[(j + 2, j)] = -1.0;
    }
    assert!((b5 - want).amax() < 1e-15);
}

/// On the group itself `eps_u(x) = u^{-1}.x`.
#[test]
fn heisenberg_coordinates_of_the_group_are_left_translations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (frame, n) in [(h3(), 1usize), (h5(), 2)] {
        let d = 2 * n;
        let mut m = DMatrix::zeros(d, d);
        for j in 0..n {
            m[(n + j, j)] = 1.0;
            m[(j, n + j)] = -1.0;
        }
        let law = BilinearLaw::new(m).unwrap();
        for _ in 0..20 {
            let u: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.5..1.5)).collect();
            let x: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.5..1.5)).collect();
            let hm = heisenberg_map(&frame, &u).unwrap();
            assert!(hm.shear().is_identity());
            let want = law.mul(&law.inv(&u), &x);
            let got = hm.apply(&x);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

/// For a frame with symmetric `b`, the shear adds `-1/2 sum s_jk x_j x_k`
/// to the transverse slot.
#[test]
fn shear_correction_for_symmetric_b() {
    let frame = curved_foliation();
    let u = [0.1, 0.6, -0.4];
    let hm = heisenberg_map(&frame, &u).unwrap();
    let b = hm.b().clone();
    let s = (&b + b.transpose()) * 0.5;
    assert!(s.amax() > 0.1, "test needs a nonzero symmetric part");
    let phi = hm.phi_map(2).unwrap();
    let phi0 = phi.component(0);
    common::assert_close(phi0.coeff_of(&[0, 2, 0]), -0.5 * s[(0, 0)], 1e-14, "x1^2");
    common::assert_close(phi0.coeff_of(&[0, 1, 1]), -s[(0, 1)], 1e-14, "x1 x2");
    common::assert_close(phi0.coeff_of(&[0, 0, 2]), -0.5 * s[(1, 1)], 1e-14, "x2^2");
    assert!((hm.shear().c() + &s).amax() < 1e-15);
}

#[test]
fn model_fields_of_heisenberg_frame() {
    let frame = h3();
    let origin = [0.0; 3];
    let m0 = model_field(frame.field(0), &frame, &origin).unwrap();
    assert_eq!(m0.weight, 2);
    let m1 = model_field(frame.field(1), &frame, &origin).unwrap();
    assert_eq!(m1.weight, 1);
    // d_1 + x_2 d_0, since -1/2 L_12 = 1
    assert_eq!(m1.x0_linear.as_slice(), &[0.0, 1.0]);
    assert!(!m1.borderline);
}

#[test]
fn dilation_limits_on_corpus_frames() {
    let samples = tensor_grid(&DomainBox::cube(3, 1.0), 3);
    for frame in [h3(), common::darboux_a(), curved_foliation()] {
        for m in [[0.0, 0.0, 0.0], [0.3, -0.5, 0.7]] {
            for j in 0..3 {
                let r = dilation_limit_check(
                    frame.field(j),
                    &frame,
                    &m,
                    &TGrid::default(),
                    &samples,
                    SLOPE_TOL,
                )
                .unwrap();
                assert!(r.verdict.is_pass(), "X_{j} at {m:?}: {r:?}");
            }
        }
    }
}
