//! Dense complex helpers shared by every layer.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Rank tolerance relative to the largest singular value.
pub const TAU_RANK: f64 = 1e-8;
/// Skew/Hermitian symmetry tolerance.
pub const TAU_SYM: f64 = 1e-10;
/// Orthonormality tolerance.
pub const TAU_ORTH: f64 = 1e-10;
/// Angular tolerance for eigenphases at 1.
pub const TAU_PHASE: f64 = 1e-8;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| c(x, 0.0))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Hermitian defect `max|A - A†|`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

/// Rotates a vector so that its first entry of non-negligible modulus is real positive.
pub fn phase_normalize(v: &mut CVec) {
    let scale = v.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if scale == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12 * scale).copied() {
        let rot = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= rot;
        }
    }
}

pub fn eigh(h: &CMat) -> Eigh {
    let n = h.nrows();
    if n == 0 {
        return Eigh { values: vec![], vectors: CMat::zeros(0, 0) };
    }
    let sym = (h + h.adjoint()) * c(0.5, 0.0);
    let e = sym.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let mut vectors = CMat::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, &i) in idx.iter().enumerate() {
        let mut v: CVec = e.eigenvectors.column(i).into_owned();
        phase_normalize(&mut v);
        vectors.set_column(k, &v);
        values.push(e.eigenvalues[i]);
    }
    Eigh { values, vectors }
}

/// Singular values in descending order; empty for degenerate shapes.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Orthonormal frame of the column span, rank decided by pivoted QR at `TAU_RANK`.
pub fn orthonormal_basis(m: &CMat) -> CMat {
    let n = m.nrows();
    let k = m.ncols();
    if n == 0 || k == 0 {
        return CMat::zeros(n, 0);
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let d = r.nrows().min(r.ncols());
    let r0 = if d > 0 { r[(0, 0)].norm() } else { 0.0 };
    if r0 == 0.0 {
        return CMat::zeros(n, 0);
    }
    let rank = (0..d).take_while(|&i| r[(i, i)].norm() > TAU_RANK * r0).count();
    qr.q().columns(0, rank).into_owned()
}

/// Orthonormal frame of the orthogonal complement of the span of an orthonormal frame.
pub fn orthogonal_complement(frame: &CMat, n: usize) -> CMat {
    let k = frame.ncols();
    if k == 0 {
        return identity(n);
    }
    if k >= n {
        return CMat::zeros(n, 0);
    }
    let p = identity(n) - frame * frame.adjoint();
    let e = eigh(&p);
    let cols: Vec<usize> = (0..n).filter(|&i| e.values[i] > 0.5).collect();
    let mut out = CMat::zeros(n, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        out.set_column(j, &e.vectors.column(i));
    }
    out
}

/// Cosines of the principal angles between two orthonormal frames, descending.
pub fn principal_cosines(a: &CMat, b: &CMat) -> Vec<f64> {
    singular_values(&(a.adjoint() * b))
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 0 {
        return Some(CMat::zeros(0, 0));
    }
    let s = singular_values(m);
    let smax = s[0];
    let smin = *s.last().unwrap();
    if smax == 0.0 || smin <= 1e-14 * smax {
        return None;
    }
    m.clone().try_inverse()
}

/// Nearest unitary matrix (unitary polar factor).
pub fn polar_unitary(m: &CMat) -> CMat {
    if m.nrows() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Square root and inverse square root of a Hermitian positive definite matrix.
pub fn hermitian_sqrt(h: &CMat) -> Option<(CMat, CMat)> {
    let e = eigh(h);
    let n = h.nrows();
    let top = e.values.last().copied().unwrap_or(0.0);
    if e.values.iter().any(|&v| v <= TAU_RANK * top) || (n > 0 && top <= 0.0) {
        return None;
    }
    let sq = CMat::from_diagonal(&DVector::from_iterator(n, e.values.iter().map(|v| c(v.sqrt(), 0.0))));
    let isq = CMat::from_diagonal(&DVector::from_iterator(n, e.values.iter().map(|v| c(1.0 / v.sqrt(), 0.0))));
    let q = &e.vectors;
    Some((q * sq * q.adjoint(), q * isq * q.adjoint()))
}

/// Complex Schur form `A = Q T Q†`.
pub fn schur(a: &CMat) -> (CMat, CMat) {
    if a.nrows() == 0 {
        return (a.clone(), a.clone());
    }
    a.clone().schur().unpack()
}

/// Eigenvalues of a general complex matrix, read off the Schur diagonal.
pub fn eigenvalues(a: &CMat) -> Vec<C64> {
    let (_, t) = schur(a);
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Phase of `z` wrapped to `(-pi, pi]`.
pub fn phase(z: C64) -> f64 {
    let th = z.im.atan2(z.re);
    if th <= -std::f64::consts::PI {
        th + 2.0 * std::f64::consts::PI
    } else {
        th
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Block-diagonal direct sum.
pub fn direct_sum(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut m = CMat::zeros(ra + rb, ca + cb);
    m.view_mut((0, 0), (ra, ca)).copy_from(a);
    m.view_mut((ra, ca), (rb, cb)).copy_from(b);
    m
}

/// Stacks two matrices vertically.
pub fn vstack(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.ncols());
    let mut m = CMat::zeros(a.nrows() + b.nrows(), a.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    m
}

/// Concatenates two matrices horizontally.
pub fn hstack(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.nrows(), b.nrows());
    let mut m = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, k: usize, seed: u64) -> CMat {
        let mut x = seed;
        CMat::from_fn(n, k, |_, _| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            c(a, b)
        })
    }

    #[test]
    fn basis_detects_rank() {
        let a = sample(6, 2, 3);
        let m = hstack(&a, &(&a * c(2.0, 1.0)));
        let q = orthonormal_basis(&m);
        assert_eq!(q.ncols(), 2);
        assert!(max_abs(&(q.adjoint() * &q - identity(2))) < 1e-12);
    }

    #[test]
    fn complement_is_orthogonal() {
        let q = orthonormal_basis(&sample(5, 2, 7));
        let p = orthogonal_complement(&q, 5);
        assert_eq!(p.ncols(), 3);
        assert!(max_abs(&(q.adjoint() * &p)) < 1e-12);
    }

    #[test]
    fn wrap_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap(PI), PI);
        assert!((wrap(-PI) - PI).abs() < 1e-15);
        assert!((wrap(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(phase(c(-1.0, -0.0)), PI);
    }

    #[test]
    fn sqrt_roundtrip() {
        let a = sample(4, 4, 11);
        let h = a.adjoint() * &a + identity(4);
        let (s, si) = hermitian_sqrt(&h).unwrap();
        assert!(max_abs(&(&s * &s - &h)) < 1e-12);
        assert!(max_abs(&(&s * &si - identity(4))) < 1e-12);
    }
}
