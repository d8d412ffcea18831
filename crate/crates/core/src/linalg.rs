//! Dense complex linear algebra helpers shared by all modules.
//!
//! Everything here operates on `nalgebra::DMatrix<Complex64>`. Matrix
//! functions of Hermitian operators go through `SymmetricEigen`, which keeps
//! unitaries exactly unitary up to eigendecomposition roundoff (~1e-14);
//! Schatten norms go through singular values.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

/// Kronecker product. The left factor is the slow index, so a chain built
/// highest-mode-first realizes the little-endian mode ordering (mode 0
/// varies fastest) used throughout the crate.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint()
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    let scale = a.norm().max(1.0);
    (a - a.adjoint()).norm() <= tol * scale
}

/// Forces exact Hermiticity, (A + A†)/2.
pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().sum()
}

pub fn inner(a: &CMat, b: &CMat) -> Complex64 {
    // Hilbert-Schmidt inner product tr[A†B].
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn singular_values(a: &CMat) -> DVector<f64> {
    a.clone().svd(false, false).singular_values
}

/// Largest singular value.
pub fn operator_norm(a: &CMat) -> f64 {
    singular_values(a).max()
}

/// Sum of singular values.
pub fn trace_norm(a: &CMat) -> f64 {
    singular_values(a).sum()
}

pub fn frobenius_norm(a: &CMat) -> f64 {
    a.norm()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
/// Input is symmetrized first so callers may pass nearly-Hermitian matrices.
pub fn hermitian_eigen(a: &CMat) -> (DVector<f64>, CMat) {
    let eig = hermitize(a).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = CMat::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// f(A) for Hermitian A by spectral calculus.
pub fn hermitian_function(a: &CMat, f: impl Fn(f64) -> Complex64) -> CMat {
    let (vals, vecs) = hermitian_eigen(a);
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&x| f(x))));
    &vecs * d * vecs.adjoint()
}

/// exp(i·t·H) for Hermitian H. Exactly unitary up to eigensolver roundoff.
pub fn unitary_exp(h: &CMat, t: f64) -> CMat {
    hermitian_function(h, |x| Complex64::from_polar(1.0, t * x))
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eigenvalue(a: &CMat) -> f64 {
    hermitian_eigen(a).0.max()
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    hermitian_eigen(a).0.min()
}

/// Principal square root of a PSD matrix; small negative eigenvalues from
/// roundoff are clipped to zero.
pub fn psd_sqrt(a: &CMat) -> CMat {
    hermitian_function(a, |x| c(x.max(0.0).sqrt(), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kron_index_order() {
        // kron(A, B): global row = i_A * nrows(B) + i_B.
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let b = CMat::from_row_slice(2, 2, &[c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(4.0, 0.0)]);
        let k = kron(&a, &b);
        assert_relative_eq!(k[(0, 0)].re, 3.0);
        assert_relative_eq!(k[(1, 1)].re, 4.0);
        assert_relative_eq!(k[(2, 2)].re, 6.0);
        assert_relative_eq!(k[(3, 3)].re, 8.0);
    }

    #[test]
    fn unitary_exp_is_unitary() {
        let mut h = CMat::zeros(6, 6);
        for i in 0..6 {
            for j in 0..6 {
                h[(i, j)] = c((i * j) as f64 * 0.3 - 0.7, (i as f64 - j as f64) * 0.2);
            }
        }
        let h = hermitize(&h);
        let u = unitary_exp(&h, 1.7);
        let defect = (&u.adjoint() * &u - identity(6)).norm();
        assert!(defect < 1e-12, "unitarity defect {defect}");
    }

    #[test]
    fn schatten_norms() {
        // diag(3, -4): trace norm 7, operator norm 4.
        let a = CMat::from_diagonal(&CVec::from_vec(vec![c(3.0, 0.0), c(-4.0, 0.0)]));
        assert_relative_eq!(trace_norm(&a), 7.0, epsilon = 1e-12);
        assert_relative_eq!(operator_norm(&a), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn hermitian_eigen_sorted() {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![
            c(2.0, 0.0),
            c(-1.0, 0.0),
            c(0.5, 0.0),
        ]));
        let (vals, _) = hermitian_eigen(&a);
        assert_relative_eq!(vals[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(vals[2], 2.0, epsilon = 1e-12);
    }
}
