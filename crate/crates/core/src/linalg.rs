//! Small dense complex-vector helpers.
//!
//! Vectors here are at most a few hundred entries long, so plain slices of
//! [`Complex64`] are used throughout.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Rank threshold used when orthogonalizing directions.
pub const RANK_TOL: f64 = 1e-10;

/// `a† b`.
#[inline]
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

#[inline]
pub fn norm(a: &[Complex64]) -> f64 {
    norm_sqr(a).sqrt()
}

/// Scales `a` to unit norm. Returns `None` when the norm is below `tol`.
pub fn normalized(a: &[Complex64], tol: f64) -> Option<Vec<Complex64>> {
    let n = norm(a);
    (n >= tol).then(|| a.iter().map(|x| x / n).collect())
}

/// One CN(0, 1) sample: independent real and imaginary parts of variance 1/2.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_gaussian_vec<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    (0..dim).map(|_| complex_gaussian(rng)).collect()
}

/// Uniformly distributed unit vector in `C^dim`.
pub fn isotropic_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let g = complex_gaussian_vec(dim, rng);
        if let Some(v) = normalized(&g, 1e-300) {
            return v;
        }
    }
}

/// Removes from `v` its components along the orthonormal `basis`.
///
/// Two passes of modified Gram-Schmidt; the second pass restores
/// orthogonality lost to cancellation when `v` is nearly in the span.
pub fn project_out(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for u in basis {
            let c = inner(u, v);
            for (x, b) in v.iter_mut().zip(u) {
                *x -= c * b;
            }
        }
    }
}

/// Orthonormal basis of the span of `vectors`.
///
/// A vector whose residual after projection falls below `tol` times its
/// original norm adds nothing to the span and is skipped.
pub fn orthonormal_basis<'a, I>(vectors: I, tol: f64) -> Vec<Vec<Complex64>>
where
    I: IntoIterator<Item = &'a [Complex64]>,
{
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for v in vectors {
        let scale = norm(v);
        if scale == 0.0 {
            continue;
        }
        let mut r = v.to_vec();
        project_out(&mut r, &basis);
        if let Some(u) = normalized(&r, tol * scale) {
            basis.push(u);
        }
    }
    basis
}

/// Largest deviation of the Gram matrix of `vectors` from the identity.
pub fn orthonormality_defect(vectors: &[Vec<Complex64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate().skip(i) {
            let g = inner(a, b);
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).norm());
        }
    }
    worst
}
