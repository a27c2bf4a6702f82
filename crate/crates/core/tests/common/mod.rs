#![allow(dead_code)]

use hbcd_core::qcore::ComplexMatrix;
use hbcd_core::C64;
use nalgebra::DMatrix;

pub fn to_na(m: &ComplexMatrix) -> DMatrix<C64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m[(i, j)])
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `e^{iθσx}` built from its definition.
pub fn na_rx(theta: f64) -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(theta.cos(), 0.0), c(0.0, theta.sin()), c(0.0, theta.sin()), c(theta.cos(), 0.0)])
}

/// `e^{iψσz}`.
pub fn na_rz(psi: f64) -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[C64::from_polar(1.0, psi), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, -psi)])
}

pub fn na_eye(n: usize) -> DMatrix<C64> {
    DMatrix::identity(n, n)
}

/// One query on (hidden ⊗ measurement): channel, controlled z-rotation on hidden |1⟩, x-rotation.
pub fn na_query(theta: f64, psi: f64, phi: f64) -> DMatrix<C64> {
    let chan = na_rx(theta).kronecker(&na_eye(2));
    let p0 = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let p1 = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    let cr = p0.kronecker(&na_eye(2)) + p1.kronecker(&na_rz(psi));
    let rot = na_eye(2).kronecker(&na_rx(phi));
    rot * cr * chan
}

pub fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `Σ|λ|/2` of a Hermitian difference.
pub fn na_trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let d = a - b;
    let h = (&d + d.adjoint()) * c(0.5, 0.0);
    h.symmetric_eigen().eigenvalues.iter().map(|x| x.abs()).sum::<f64>() / 2.0
}
