use nalgebra::DMatrix;
use rand::Rng;

use super::BilinearLaw;
use crate::error::{Error, Result};
use crate::jets::{Jet, PolyMap};

/// Symmetry tolerance for shear matrices, relative to their largest entry.
const SYMMETRY_TOL: f64 = 1e-12;

/// The graded isomorphism `x -> (x_0 + 1/2 sum c_jk x_j x_k, x_1, ..., x_d)`
/// for a symmetric `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedShear {
    c: DMatrix<f64>,
}

impl GradedShear {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        if !c.is_square() {
            return Err(Error::DimensionMismatch {
                expected: c.nrows(),
                actual: c.ncols(),
            });
        }
        let dev = (&c - c.transpose()).amax();
        if dev > SYMMETRY_TOL * c.amax().max(1.0) {
            return Err(Error::NotSymmetric { deviation: dev });
        }
        Ok(GradedShear { c })
    }

    /// The shear that brings the privileged model law with coefficients `b`
    /// to antisymmetric normal form: `c = -(b + b^t)/2`.
    pub fn normalizing(b: &DMatrix<f64>) -> Self {
        GradedShear {
            c: -(b + b.transpose()) * 0.5,
        }
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_identity(&self) -> bool {
        self.c.iter().all(|v| *v == 0.0)
    }

    pub fn inverse(&self) -> GradedShear {
        GradedShear { c: -&self.c }
    }

    fn correction(&self, h: &[f64]) -> f64 {
        let mut s = 0.0;
        for j in 0..self.d() {
            for k in 0..self.d() {
                s += self.c[(j, k)] * h[j] * h[k];
            }
        }
        0.5 * s
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        out[0] += self.correction(&x[1..]);
        out
    }

    /// Jacobian at `x`: identity plus the row `d_k phi_0 = sum_j c_kj x_j`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.d() + 1;
        let mut j = DMatrix::identity(n, n);
        for k in 0..self.d() {
            j[(0, k + 1)] = (0..self.d()).map(|i| self.c[(k, i)] * x[i + 1]).sum();
        }
        j
    }

    /// The shear as a polynomial map expanded at the origin.
    pub fn as_map(&self, order: u32) -> Result<PolyMap> {
        if order < 2 {
            return Err(Error::InvalidArgument(
                "a quadratic shear needs jet order at least 2".into(),
            ));
        }
        let n = self.d() + 1;
        let base = vec![0.0; n];
        let mut comps: Vec<Jet> = (0..n).map(|i| Jet::variable(n, order, &base, i)).collect();
        let mut terms: Vec<(f64, Vec<u8>)> = Vec::new();
        for j in 0..self.d() {
            for k in j..self.d() {
                let coef = if j == k {
                    0.5 * self.c[(j, j)]
                } else {
                    self.c[(j, k)]
                };
                if coef != 0.0 {
                    let mut e = vec![0u8; n];
                    e[j + 1] += 1;
                    e[k + 1] += 1;
                    terms.push((coef, e));
                }
            }
        }
        let quad = Jet::from_terms(
            n,
            order,
            &base,
            terms.iter().map(|(c, e)| (*c, e.as_slice())),
        )?;
        comps[0] = comps[0].add(&quad)?;
        PolyMap::new(comps)
    }
}

/// Result of [`graded_shear_transport`].
#[derive(Clone, Debug, PartialEq)]
pub struct ShearTransport {
    /// Coefficients `b + c` of the transported law.
    pub b: DMatrix<f64>,
    /// Largest `|shear(x.y) - shear(x).shear(y)|` over the sampled pairs.
    pub residual: f64,
}

/// Transports the law with coefficients `b` through the shear, returning
/// `b + c`, and measures the homomorphism defect on `samples` random pairs.
pub fn graded_shear_transport<R: Rng + ?Sized>(
    shear: &GradedShear,
    b: &DMatrix<f64>,
    samples: usize,
    rng: &mut R,
) -> Result<ShearTransport> {
    if b.nrows() != shear.d() || b.ncols() != shear.d() {
        return Err(Error::DimensionMismatch {
            expected: shear.d(),
            actual: b.nrows(),
        });
    }
    let b_new = b + shear.c();
    let before = BilinearLaw::from_b(b);
    let after = BilinearLaw::from_b(&b_new);
    let n = shear.d() + 1;
    let mut residual: f64 = 0.0;
    for _ in 0..samples {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs = shear.apply(&before.mul(&x, &y));
        let rhs = after.mul(&shear.apply(&x), &shear.apply(&y));
        for (a, c) in lhs.iter().zip(&rhs) {
            residual = residual.max((a - c).abs());
        }
    }
    Ok(ShearTransport { b: b_new, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_asymmetric_matrix() {
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            GradedShear::new(c),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn normalizing_shear_yields_antisymmetric_part() {
        let b = DMatrix::from_row_slice(2, 2, &[0.4, 1.3, -0.2, 0.9]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = graded_shear_transport(&GradedShear::normalizing(&b), &b, 100, &mut rng).unwrap();
        let expected = (&b - b.transpose()) * 0.5;
        assert!((t.b - expected).amax() < 1e-15);
        assert!(t.residual < 1e-12);
    }

    #[test]
    fn zero_shear_is_identity_transport() {
        let b = DMatrix::from_row_slice(2, 2, &[0.4, 1.3, -0.2, 0.9]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = graded_shear_transport(
            &GradedShear::new(DMatrix::zeros(2, 2)).unwrap(),
            &b,
            10,
            &mut rng,
        )
        .unwrap();
        assert_eq!(t.b, b);
        assert_eq!(t.residual, 0.0);
    }

    #[test]
    fn polynomial_form_matches_direct_application() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -2.0]);
        let s = GradedShear::new(c).unwrap();
        let m = s.as_map(3).unwrap();
        let x = [0.3, -0.7, 1.1];
        let (a, b) = (s.apply(&x), m.eval(&x));
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-15));
        let back = s.inverse().apply(&a);
        assert!(back.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-15));
    }
}
