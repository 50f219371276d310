//! Small dense complex matrix helpers shared by the decision and oracle
//! modules. Everything here assumes Hermitian inputs at desk scale
//! (dimensions well below a hundred).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub(crate) type CMat = DMatrix<Complex64>;
pub(crate) type CVec = DVector<Complex64>;

/// `(a + a^dagger) / 2`.
pub(crate) fn hermitian_part(a: &CMat) -> CMat {
    let half = Complex64::new(0.5, 0.0);
    (a + a.adjoint()) * half
}

/// Largest elementwise deviation from Hermitian symmetry.
pub(crate) fn hermitian_deviation(a: &CMat) -> f64 {
    (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix; symmetrizes first to absorb
/// roundoff. Returns `(eigenvalues, eigenvectors)` with eigenvectors in
/// columns.
pub(crate) fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let se = hermitian_part(a).symmetric_eigen();
    (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
}

pub(crate) fn min_eigenvalue(a: &CMat) -> f64 {
    eigh(a).0.into_iter().fold(f64::INFINITY, f64::min)
}

pub(crate) fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Real part of `tr(a * b)`, computed without forming the product.
pub(crate) fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    // tr(AB) = sum_ij A_ij B_ji
    let n = a.nrows();
    let mut acc = Complex64::ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc.re
}

/// Rescale columns by `f(eigenvalue)` and recompose `U diag(f) U^dagger`.
pub(crate) fn recompose(values: &[f64], vectors: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(f(v));
    }
    &scaled * vectors.adjoint()
}

pub(crate) fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}
