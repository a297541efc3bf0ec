use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fields::StructureConstants;

/// A singular value counts as nonzero iff it exceeds this fraction of the
/// largest one.
pub const RANK_REL_TOL: f64 = 1e-8;

/// Singular values within this band (relative to the largest) are reported
/// as close to the rank cutoff.
const FLAG_BAND: (f64, f64) = (1e-10, 1e-6);

/// Isomorphism type `H^{2n+1} x R^k` of a tangent group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupType {
    pub n: usize,
    pub abelian: usize,
}

impl GroupType {
    pub fn rank(&self) -> usize {
        2 * self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + self.abelian + 1
    }
}

impl fmt::Display for GroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n == 0 {
            write!(f, "R^{} (abelian)", self.dim())
        } else if self.abelian == 0 {
            write!(f, "H^{}", 2 * self.n + 1)
        } else {
            write!(f, "H^{} x R^{}", 2 * self.n + 1, self.abelian)
        }
    }
}

/// Output of [`classify_fiber`].
#[derive(Clone, Debug)]
pub struct FiberClassification {
    pub group_type: GroupType,
    /// Columns `X_1, ..., X_d` of the adapted frame in the original
    /// horizontal basis: `X_{n+j} = J X_j` for `j <= n`, kernel vectors last.
    pub adapted_frame: DMatrix<f64>,
    /// `P^t L P` for the adapted frame `P`.
    pub adapted_l: DMatrix<f64>,
    /// Singular values of `g^{-1/2} L g^{-1/2}`, descending.
    pub singular_values: Vec<f64>,
    /// Some singular value lies close to the rank cutoff.
    pub near_threshold: bool,
    /// Largest deviation of `adapted_l` from the canonical constants.
    pub relation_residual: f64,
}

impl FiberClassification {
    pub fn rank(&self) -> usize {
        self.group_type.rank()
    }
}

fn sym_power(g: &DMatrix<f64>, p: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(g.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(p)));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn canonical_sign(mut v: DVector<f64>) -> DVector<f64> {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
    v
}

fn project_out(v: &DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    let mut r = v.clone();
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&r);
            r -= b * c;
        }
    }
    r
}

/// Rank and adapted frame of the Levi form `L` with respect to the metric `g`.
///
/// With `S = g^{-1/2} L g^{-1/2}` and `S = J |S|` its polar decomposition on
/// the image, the adapted frame is `h`-orthonormal for `h = 1/2 g(., |A| .)`
/// and satisfies `L(X_j, X_{n+j}) = -2` with every other pairing zero.
pub fn classify_fiber(l: &StructureConstants, g: &DMatrix<f64>) -> Result<FiberClassification> {
    let d = l.d();
    if g.nrows() != d || g.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: g.nrows(),
        });
    }
    let asym = (g - g.transpose()).amax();
    if asym > 1e-10 * g.amax().max(1.0) {
        return Err(Error::NotSymmetric { deviation: asym });
    }
    let g_eig = SymmetricEigen::new(g.clone());
    let min_eig = g_eig.eigenvalues.min();
    if min_eig.is_nan() || min_eig <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min_eig,
        });
    }
    let g_inv_half = sym_power(g, -0.5);
    let lm = l.matrix();
    let s = &g_inv_half * lm * &g_inv_half;
    let s = (&s - s.transpose()) * 0.5;

    // SVD of S itself: eigenvalues of S^t S would square the rounding of
    // the zero singular values past the rank cutoff.
    let svd = s.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut pairs: Vec<(f64, DVector<f64>)> = svd
        .singular_values
        .iter()
        .zip(v_t.row_iter())
        .map(|(&sv, v)| (sv * sv, canonical_sign(v.transpose())))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let singular_values: Vec<f64> = pairs.iter().map(|(lam, _)| lam.sqrt()).collect();
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let cutoff = RANK_REL_TOL * sigma_max;
    let near_threshold = sigma_max > 0.0
        && singular_values
            .iter()
            .any(|&sv| sv > FLAG_BAND.0 * sigma_max && sv <= FLAG_BAND.1 * sigma_max);

    let mut chosen: Vec<DVector<f64>> = Vec::new();
    let mut first_half: Vec<DVector<f64>> = Vec::new();
    let mut second_half: Vec<DVector<f64>> = Vec::new();
    for (lam, v) in &pairs {
        if sigma_max == 0.0 || lam.sqrt() <= cutoff {
            continue;
        }
        let r = project_out(v, &chosen);
        if r.norm() < 1e-6 {
            continue;
        }
        let u = r.normalize();
        let su = &s * &u;
        let sigma = su.norm();
        if sigma <= cutoff {
            continue;
        }
        let w = &su / sigma;
        let scale = (2.0 / sigma).sqrt();
        first_half.push(&u * scale);
        second_half.push(&w * scale);
        chosen.push(u);
        chosen.push(project_out(&w, &chosen).normalize());
    }
    let n = first_half.len();

    let mut kernel: Vec<DVector<f64>> = Vec::new();
    let candidates = pairs
        .iter()
        .rev()
        .map(|(_, v)| v.clone())
        .chain((0..d).map(|i| DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })));
    for v in candidates {
        if chosen.len() == d {
            break;
        }
        let r = project_out(&v, &chosen);
        if r.norm() < 1e-6 {
            continue;
        }
        let k = canonical_sign(r.normalize());
        chosen.push(k.clone());
        kernel.push(k);
    }

    let cols: Vec<DVector<f64>> = first_half
        .into_iter()
        .chain(second_half)
        .chain(kernel)
        .map(|c| &g_inv_half * c)
        .collect();
    let adapted_frame = DMatrix::from_columns(&cols);
    let adapted_l = adapted_frame.transpose() * lm * &adapted_frame;
    let group_type = GroupType {
        n,
        abelian: d - 2 * n,
    };
    let canonical = StructureConstants::heisenberg(n, d - 2 * n);
    let relation_residual = (&adapted_l - canonical.matrix()).amax();
    Ok(FiberClassification {
        group_type,
        adapted_frame,
        adapted_l,
        singular_values,
        near_threshold,
        relation_residual,
    })
}
