//! Orthogonal mappings for dimensions beyond the octonions.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::AlgebraError;

/// Reflection vectors shorter than this (squared) are treated as zero.
const DEGENERATE_REFLECTION: f64 = 1e-24;

/// Relative norm mismatch tolerated between the endpoints of a reflection.
const NORM_TOLERANCE: f64 = 1e-9;

/// A square orthogonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix(DMatrix<f64>);

impl RotationMatrix {
    pub fn identity(d: usize) -> Self {
        RotationMatrix(DMatrix::identity(d, d))
    }

    /// Wraps `m` without checking orthogonality.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "rotation matrices are square");
        RotationMatrix(m)
    }

    /// Builds a `d×d` matrix from row-major entries.
    pub fn from_row_major(d: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), d * d);
        RotationMatrix(DMatrix::from_row_slice(d, d, entries))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                out.push(self.0[(r, c)]);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        RotationMatrix(self.0.transpose())
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &RotationMatrix) -> Self {
        RotationMatrix(&self.0 * &rhs.0)
    }

    /// `out = self · v`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim();
        assert!(v.len() == d && out.len() == d);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (c, x) in v.iter().enumerate() {
                acc += self.0[(r, c)] * x;
            }
            *o = acc;
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out);
        out
    }

    /// Largest elementwise deviation of `M·Mᵀ` from the identity.
    pub fn orthogonality_error(&self) -> f64 {
        let p = &self.0 * self.0.transpose();
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in 0..d {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((p[(r, c)] - target).abs());
            }
        }
        worst
    }

    pub fn determinant(&self) -> f64 {
        self.0.clone().determinant()
    }
}

/// Draws a `d×d` orthogonal matrix from the Haar measure on `O(d)`.
///
/// The orthogonal factor of a QR decomposition of a standard Gaussian matrix is
/// only Haar distributed once each column is multiplied by the sign of the
/// matching diagonal entry of `R`; that correction is applied here.
pub fn haar_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> RotationMatrix {
    assert!(d >= 1, "dimension must be positive");
    loop {
        let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
        let qr = g.qr();
        let r = qr.r();
        if (0..d).any(|i| r[(i, i)] == 0.0) {
            // singular draw, probability zero
            continue;
        }
        let mut q = qr.q();
        for i in 0..d {
            if r[(i, i)] < 0.0 {
                q.column_mut(i).neg_mut();
            }
        }
        return RotationMatrix(q);
    }
}

/// A Householder reflection `S = I − 2·a·aᵀ` stored by its unit normal `a`.
///
/// `None` normal means the identity (degenerate reflection).
#[derive(Debug, Clone, PartialEq)]
pub struct Reflection {
    dim: usize,
    normal: Option<Vec<f64>>,
}

impl Reflection {
    pub fn identity(dim: usize) -> Self {
        Reflection { dim, normal: None }
    }

    /// Reflection with hyperplane normal along `a`; zero-length `a` gives the identity.
    pub fn from_normal(a: &[f64]) -> Self {
        let n2: f64 = a.iter().map(|v| v * v).sum();
        if n2 < DEGENERATE_REFLECTION {
            return Reflection::identity(a.len());
        }
        let inv = 1.0 / n2.sqrt();
        Reflection { dim: a.len(), normal: Some(a.iter().map(|v| v * inv).collect()) }
    }

    /// The reflection mapping `source` onto `target` (equal norms).
    pub fn between(source: &[f64], target: &[f64]) -> Result<Self, AlgebraError> {
        if source.len() != target.len() {
            return Err(AlgebraError::DimensionMismatch { left: source.len(), right: target.len() });
        }
        let ns = source.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nt = target.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (ns - nt).abs() > NORM_TOLERANCE * ns.max(nt) {
            return Err(AlgebraError::NormMismatch { source_norm: ns, target_norm: nt });
        }
        let a: Vec<f64> = source.iter().zip(target).map(|(s, t)| s - t).collect();
        Ok(Reflection::from_normal(&a))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Unit normal of the reflecting hyperplane, `None` for the identity.
    pub fn normal(&self) -> Option<&[f64]> {
        self.normal.as_deref()
    }

    pub fn apply_in_place(&self, v: &mut [f64]) {
        assert_eq!(v.len(), self.dim);
        if let Some(a) = &self.normal {
            let dot: f64 = a.iter().zip(v.iter()).map(|(x, y)| x * y).sum();
            for (vi, ai) in v.iter_mut().zip(a) {
                *vi -= 2.0 * dot * ai;
            }
        }
    }

    pub fn to_matrix(&self) -> RotationMatrix {
        let d = self.dim;
        match &self.normal {
            None => RotationMatrix::identity(d),
            Some(a) => RotationMatrix(DMatrix::from_fn(d, d, |r, c| {
                let id = if r == c { 1.0 } else { 0.0 };
                id - 2.0 * a[r] * a[c]
            })),
        }
    }
}

/// Householder matrix `S = I − 2·a·aᵀ/‖a‖²` with `a = source − target`, so that
/// `S·source = target`. Returns the identity when `source ≈ target`.
pub fn householder_between(source: &[f64], target: &[f64]) -> Result<RotationMatrix, AlgebraError> {
    Ok(Reflection::between(source, target)?.to_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    #[test]
    fn haar_is_orthogonal_with_unit_determinant() {
        let mut rng = rng_for(1, &[]);
        for d in [1, 2, 3, 8, 16, 64] {
            let q = haar_orthogonal(d, &mut rng);
            assert!(q.orthogonality_error() < 1e-12, "d={d}");
            assert!((q.determinant().abs() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn haar_is_reproducible() {
        let a = haar_orthogonal(16, &mut rng_for(5, &[3]));
        let b = haar_orthogonal(16, &mut rng_for(5, &[3]));
        assert_eq!(a.to_row_major(), b.to_row_major());
    }

    #[test]
    fn haar_d1_is_a_fair_sign() {
        let mut rng = rng_for(11, &[]);
        let n = 10_000;
        let plus = (0..n)
            .filter(|_| haar_orthogonal(1, &mut rng).as_matrix()[(0, 0)] > 0.0)
            .count();
        let frac = plus as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.02, "frac={frac}");
    }

    #[test]
    fn householder_limit_and_swap() {
        let s = householder_between(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(s, RotationMatrix::identity(2));
        let swap = householder_between(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let m = swap.as_matrix();
        assert!(m[(0, 0)].abs() < 1e-15 && m[(1, 1)].abs() < 1e-15);
        assert!((m[(0, 1)] - 1.0).abs() < 1e-15 && (m[(1, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn householder_rejects_unequal_norms() {
        assert!(matches!(
            householder_between(&[1.0, 0.0], &[0.0, 2.0]),
            Err(AlgebraError::NormMismatch { .. })
        ));
    }

    #[test]
    fn reflection_maps_source_to_target_in_d64() {
        let mut rng = rng_for(2, &[]);
        for _ in 0..20 {
            let source: Vec<f64> = (0..64).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let q = haar_orthogonal(64, &mut rng);
            let target = q.apply(&source);
            let s = householder_between(&source, &target).unwrap();
            let mapped = s.apply(&source);
            let err: f64 = mapped.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(err < 1e-10, "err={err}");
            let sym = (s.as_matrix() - s.as_matrix().transpose()).amax();
            assert!(sym < 1e-10);
            let inv = (s.as_matrix() * s.as_matrix() - DMatrix::identity(64, 64)).amax();
            assert!(inv < 1e-10);
        }
    }
}
