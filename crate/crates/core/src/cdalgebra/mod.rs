//! Hypercomplex arithmetic and random orthogonal mappings.
//!
//! Reals, complex numbers, quaternions and octonions are built with the
//! Cayley-Dickson doubling rule
//!
//! ```text
//! (p, q) · (r, s) = (p·r − s̄·q,  s·p + q·r̄)
//! ```
//!
//! applied recursively to the two halves of the coefficient vector. With this
//! convention the basis of the quaternions satisfies `i·j = k`.
//!
//! Division is right division by the conjugate, `m / x = m · x̄ / ‖x‖²`. All
//! four algebras are alternative, so `(u·x) / x = u` holds even for the
//! non-associative octonions.
//!
//! For dimensions above eight there is no division algebra; [`rotation`]
//! provides Haar-distributed orthogonal matrices and Householder reflections
//! instead.

pub mod rotation;

pub use rotation::{haar_orthogonal, householder_between, Reflection, RotationMatrix};

use thiserror::Error;

/// Largest dimension with a Cayley-Dickson division algebra.
pub const MAX_ALGEBRA_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("dimension {0} is not one of 1, 2, 4, 8")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("division by a zero-norm value")]
    ZeroNorm,
    #[error("reflection endpoints differ in norm: {source_norm} vs {target_norm}")]
    NormMismatch { source_norm: f64, target_norm: f64 },
}

/// Returns true when `d` is the dimension of a real division algebra.
pub fn is_algebra_dim(d: usize) -> bool {
    matches!(d, 1 | 2 | 4 | 8)
}

/// A `d`-dimensional hypercomplex number, `d ∈ {1, 2, 4, 8}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdNumber {
    dim: usize,
    coeffs: [f64; MAX_ALGEBRA_DIM],
}

impl CdNumber {
    pub fn new(coeffs: &[f64]) -> Result<Self, AlgebraError> {
        let dim = coeffs.len();
        if !is_algebra_dim(dim) {
            return Err(AlgebraError::UnsupportedDimension(dim));
        }
        let mut c = [0.0; MAX_ALGEBRA_DIM];
        c[..dim].copy_from_slice(coeffs);
        Ok(CdNumber { dim, coeffs: c })
    }

    /// The `index`-th basis element `e_index` of the `dim`-dimensional algebra.
    pub fn basis(dim: usize, index: usize) -> Result<Self, AlgebraError> {
        if !is_algebra_dim(dim) {
            return Err(AlgebraError::UnsupportedDimension(dim));
        }
        assert!(index < dim, "basis index {index} out of range for d={dim}");
        let mut c = [0.0; MAX_ALGEBRA_DIM];
        c[index] = 1.0;
        Ok(CdNumber { dim, coeffs: c })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..self.dim]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs().iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn conj(&self) -> Self {
        let mut out = *self;
        conj_in_place(&mut out.coeffs[..self.dim]);
        out
    }
}

/// Cayley-Dickson product `a · b`.
pub fn cd_mul(a: &CdNumber, b: &CdNumber) -> Result<CdNumber, AlgebraError> {
    if a.dim != b.dim {
        return Err(AlgebraError::DimensionMismatch { left: a.dim, right: b.dim });
    }
    let mut out = [0.0; MAX_ALGEBRA_DIM];
    mul_slices(a.coeffs(), b.coeffs(), &mut out[..a.dim]);
    Ok(CdNumber { dim: a.dim, coeffs: out })
}

/// Right division `m / x = m · x̄ / ‖x‖²`.
pub fn cd_div(m: &CdNumber, x: &CdNumber) -> Result<CdNumber, AlgebraError> {
    if m.dim != x.dim {
        return Err(AlgebraError::DimensionMismatch { left: m.dim, right: x.dim });
    }
    let mut out = [0.0; MAX_ALGEBRA_DIM];
    div_slices(m.coeffs(), x.coeffs(), &mut out[..m.dim])?;
    Ok(CdNumber { dim: m.dim, coeffs: out })
}

fn conj_in_place(v: &mut [f64]) {
    for c in v.iter_mut().skip(1) {
        *c = -*c;
    }
}

/// Slice form of [`cd_mul`] for hot loops.
///
/// All three slices must have the same power-of-two length `<= 8`; this is
/// checked with debug assertions only.
pub fn mul_slices(a: &[f64], b: &[f64], out: &mut [f64]) {
    let n = a.len();
    debug_assert!(is_algebra_dim(n) && b.len() == n && out.len() == n);
    if n == 1 {
        out[0] = a[0] * b[0];
        return;
    }
    let h = n / 2;
    let (p, q) = a.split_at(h);
    let (r, s) = b.split_at(h);
    let mut t1 = [0.0; MAX_ALGEBRA_DIM / 2];
    let mut t2 = [0.0; MAX_ALGEBRA_DIM / 2];
    let mut cj = [0.0; MAX_ALGEBRA_DIM / 2];

    // p·r − s̄·q
    mul_slices(p, r, &mut t1[..h]);
    cj[..h].copy_from_slice(s);
    conj_in_place(&mut cj[..h]);
    mul_slices(&cj[..h], q, &mut t2[..h]);
    for i in 0..h {
        out[i] = t1[i] - t2[i];
    }

    // s·p + q·r̄
    mul_slices(s, p, &mut t1[..h]);
    cj[..h].copy_from_slice(r);
    conj_in_place(&mut cj[..h]);
    mul_slices(q, &cj[..h], &mut t2[..h]);
    for i in 0..h {
        out[h + i] = t1[i] + t2[i];
    }
}

/// Slice form of [`cd_div`].
pub fn div_slices(m: &[f64], x: &[f64], out: &mut [f64]) -> Result<(), AlgebraError> {
    let n = x.len();
    let norm_sqr: f64 = x.iter().map(|v| v * v).sum();
    if norm_sqr == 0.0 {
        return Err(AlgebraError::ZeroNorm);
    }
    let mut xc = [0.0; MAX_ALGEBRA_DIM];
    xc[..n].copy_from_slice(x);
    conj_in_place(&mut xc[..n]);
    mul_slices(m, &xc[..n], out);
    for v in out.iter_mut() {
        *v /= norm_sqr;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(c: &[f64]) -> CdNumber {
        CdNumber::new(c).unwrap()
    }

    #[test]
    fn small_products() {
        assert_eq!(cd_mul(&num(&[3.0]), &num(&[-2.0])).unwrap().coeffs(), &[-6.0]);
        assert_eq!(cd_mul(&num(&[0.0, 1.0]), &num(&[0.0, 1.0])).unwrap().coeffs(), &[-1.0, 0.0]);
        let k = cd_mul(&num(&[0.0, 1.0, 0.0, 0.0]), &num(&[0.0, 0.0, 1.0, 0.0])).unwrap();
        assert_eq!(k.coeffs(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn complex_division() {
        let r = cd_div(&num(&[-1.0, 0.0]), &num(&[0.0, 1.0])).unwrap();
        assert_eq!(r.coeffs(), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert_eq!(CdNumber::new(&[1.0, 2.0, 3.0]), Err(AlgebraError::UnsupportedDimension(3)));
        assert_eq!(CdNumber::new(&[0.0; 16]), Err(AlgebraError::UnsupportedDimension(16)));
        let e = cd_mul(&num(&[1.0]), &num(&[1.0, 0.0])).unwrap_err();
        assert_eq!(e, AlgebraError::DimensionMismatch { left: 1, right: 2 });
        assert_eq!(cd_div(&num(&[1.0, 1.0]), &num(&[0.0, 0.0])), Err(AlgebraError::ZeroNorm));
    }

    #[test]
    fn conjugate_negates_imaginary_parts() {
        let c = num(&[1.0, 2.0, -3.0, 4.0]).conj();
        assert_eq!(c.coeffs(), &[1.0, -2.0, 3.0, -4.0]);
    }
}
