//! Small complex linear-algebra helpers shared by the closed forms and the oracle.
//!
//! Every 2×2 matrix in this crate acts on the slot order (down, up). In that
//! order the diagonal matrix [`z`] = diag(1, −1) is *minus* the physical σ_z,
//! which is why the closed-form propagators read e^{+i(...)t} when written
//! in terms of `z`.

use nalgebra::{DMatrix, Matrix2, Matrix3};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat3 = Matrix3<f64>;
pub type CMatrix = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity2() -> Mat2 {
    Mat2::identity()
}

/// diag(1, −1) in (down, up) order.
pub fn z() -> Mat2 {
    Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

/// Physical σ_y in (down, up) order, i.e. with |up⟩ as the second basis vector.
pub fn sigma_y() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0))
}

/// Physical σ_z in (down, up) order: diag(−1, +1).
pub fn sigma_z() -> Mat2 {
    -z()
}

pub fn max_abs_diff2(a: &Mat2, b: &Mat2) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs2(a: &Mat2) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// exp(i X) for X = a·z + b·σ_x with real a, b (so X² = (a² + b²)·1).
pub fn exp_i_real_zx(a: f64, b: f64) -> Mat2 {
    let r = a.hypot(b);
    let cos = r.cos();
    // sin(r)/r, continuous at r = 0
    let sinc = if r < 1e-8 { 1.0 - r * r / 6.0 } else { r.sin() / r };
    let x = z() * c(a, 0.0) + sigma_x() * c(b, 0.0);
    identity2() * c(cos, 0.0) + x * (I * sinc)
}

/// ‖U†U − 1‖_max for a dense matrix.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let prod = u.adjoint() * u;
    max_abs_diff(&prod, &CMatrix::identity(n, n))
}

pub fn unitarity_residual2(u: &Mat2) -> f64 {
    max_abs_diff2(&(u.adjoint() * u), &identity2())
}

pub fn hermiticity_residual(h: &CMatrix) -> f64 {
    max_abs_diff(h, &h.adjoint())
}

/// Kronecker product of a list of square matrices, first factor most significant.
pub fn kron_all(factors: &[CMatrix]) -> CMatrix {
    factors
        .iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// Embed a single-site operator into the tensor product of `dims`.
pub fn embed(op: &CMatrix, site: usize, dims: &[usize]) -> CMatrix {
    let factors: Vec<CMatrix> = dims
        .iter()
        .enumerate()
        .map(|(k, &d)| if k == site { op.clone() } else { CMatrix::identity(d, d) })
        .collect();
    kron_all(&factors)
}

pub fn to_dense(m: &Mat2) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

pub fn is_finite2(m: &Mat2) -> bool {
    m.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}
