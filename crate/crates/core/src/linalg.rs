//! Small dense complex linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Ascending eigenvalues of a Hermitian matrix. Only the lower triangle is read.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Number of eigenvalues strictly above `rel_tol * lambda_max`.
pub fn hermitian_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let vals = hermitian_eigenvalues(m);
    let Some(&max) = vals.last() else { return 0 };
    if max <= 0.0 {
        return 0;
    }
    vals.iter().filter(|&&v| v > rel_tol * max).count()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `max |M^H M - I|`, the unitarity defect used throughout.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let gram = m.adjoint() * m;
    max_abs_diff(&gram, &CMatrix::identity(m.nrows(), m.ncols()))
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// `<u|v>`, conjugate-linear in the left argument.
pub fn inner(u: &CVector, v: &CVector) -> Complex64 {
    u.dotc(v)
}

pub fn is_real(m: &CMatrix, tol: f64) -> bool {
    m.iter().all(|z| z.im.abs() <= tol)
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Zero-pad `v` to length `len`.
pub fn pad(v: &CVector, len: usize) -> CVector {
    let mut out = CVector::zeros(len);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}
