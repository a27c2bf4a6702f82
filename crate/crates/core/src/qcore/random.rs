//! Random matrices and states for tests and invariance checks.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, DensityMatrix};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let entries = (0..dim * dim).map(|_| gaussian(rng)).collect();
    ComplexMatrix::from_vec(entries).expect("square by construction")
}

/// Haar-ish unitary from Gram-Schmidt on Gaussian columns.
pub fn unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = gaussian_matrix(dim, rng);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v: Vec<C64> = (0..dim).map(|i| g[(i, j)]).collect();
        for _ in 0..2 {
            for u in &cols {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= proj * y;
                }
            }
        }
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|x| x / n).collect());
    }
    let mut out = ComplexMatrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, x) in col.iter().enumerate() {
            out[(i, j)] = *x;
        }
    }
    out
}

/// Uniformly random pure state vector.
pub fn pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Random full-rank mixed state `GG†/Tr(GG†)`.
pub fn density_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = gaussian_matrix(dim, rng);
    let p = &g * &g.adjoint();
    let tr = p.trace().re;
    let mut m = p.scale(C64::new(1.0 / tr, 0.0));
    // exact Hermiticity
    for i in 0..dim {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..dim {
            m[(j, i)] = m[(i, j)].conj();
        }
    }
    DensityMatrix::new_unchecked(m)
}

/// Random pure state as a density matrix.
pub fn pure_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    DensityMatrix::pure(&pure_state(dim, rng)).expect("normalized by construction")
}
