use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;

use super::eigen::hermitian_eigen;
use super::{PSD_TOL, STRUCTURAL_TOL};
use crate::{Error, Result};

/// Largest dimension produced by [`kron`]; dense protocols never exceed two qubits.
pub const MAX_DENSE_DIM: usize = 4;

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be a perfect square.
    pub fn from_vec(entries: Vec<C64>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != entries.len() {
            return Err(Error::InvalidInput(format!(
                "{} entries do not form a square matrix",
                entries.len()
            )));
        }
        Ok(Self { dim, data: entries })
    }

    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        Self {
            dim: N,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Outer product `|v⟩⟨w|`.
    pub fn outer(v: &[C64], w: &[C64]) -> Result<Self> {
        if v.len() != w.len() {
            return Err(Error::DimensionMismatch {
                expected: v.len(),
                actual: w.len(),
            });
        }
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = v[i] * w[j].conj();
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Largest off-diagonal entry magnitude.
    pub fn off_diagonal_max(&self) -> f64 {
        let n = self.dim;
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m = m.max(self[(i, j)].norm());
                }
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = &self.adjoint() * self;
        (&p - &Self::identity(self.dim)).max_abs()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self - &self.adjoint()).max_abs()
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        let n = self.dim;
        Ok((0..n)
            .map(|i| (0..n).map(|j| self[(i, j)] * v[j]).sum())
            .collect())
    }

    /// Product with dimension checking; `&a * &b` panics on mismatch instead.
    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: rhs.dim,
            });
        }
        Ok(self * rhs)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

pub fn pauli_x() -> ComplexMatrix {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    ComplexMatrix::from_rows([[o, l], [l, o]])
}

pub fn pauli_y() -> ComplexMatrix {
    let o = C64::new(0.0, 0.0);
    ComplexMatrix::from_rows([[o, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), o]])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::diagonal(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)])
}

/// Tensor product `A ⊗ B`, restricted to at most two qubits.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron_capped(a, b, MAX_DENSE_DIM)
}

/// Tensor product with an explicit dimension cap.
pub fn kron_capped(a: &ComplexMatrix, b: &ComplexMatrix, cap: usize) -> Result<ComplexMatrix> {
    let (da, db) = (a.dim, b.dim);
    let dim = da * db;
    if dim > cap {
        return Err(Error::UnsupportedDimension(dim));
    }
    let mut out = ComplexMatrix::zeros(dim);
    for i in 0..da {
        for j in 0..da {
            let aij = a[(i, j)];
            for k in 0..db {
                for l in 0..db {
                    out[(i * db + k, j * db + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let herm = m.hermiticity_defect();
        if herm >= STRUCTURAL_TOL {
            return Err(Error::InvalidState(format!("not Hermitian ({herm:.3e})")));
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() >= STRUCTURAL_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_eig = hermitian_eigen(&m).values[0];
        if min_eig <= PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be a state (e.g. the image of a valid state under a channel).
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    /// `|v⟩⟨v|` for a normalized vector.
    pub fn pure(v: &[C64]) -> Result<Self> {
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("state norm² {norm} != 1")));
        }
        Self::new(ComplexMatrix::outer(v, v)?)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)))
    }

    /// Computational basis projector `|k⟩⟨k|`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Population `⟨k|ρ|k⟩`.
    pub fn population(&self, k: usize) -> f64 {
        self.0[(k, k)].re
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let diff = &self.0 - &other.0;
        Ok(0.5 * hermitian_eigen(&diff).values.iter().map(|x| x.abs()).sum::<f64>())
    }
}

/// `UρU†`.
pub fn evolve(u: &ComplexMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if u.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: u.dim(),
        });
    }
    let out = &(u * rho.matrix()) * &u.adjoint();
    Ok(DensityMatrix(out))
}

/// Reduced state of the measurement qubit: `ρ_M[k,l] = Σ_h ρ[(h,k),(h,l)]`.
pub fn partial_trace_hidden(rho4: &DensityMatrix) -> Result<DensityMatrix> {
    if rho4.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho4.dim(),
        });
    }
    let r = rho4.matrix();
    let mut out = ComplexMatrix::zeros(2);
    for k in 0..2 {
        for l in 0..2 {
            out[(k, l)] = r[(k, l)] + r[(2 + k, 2 + l)];
        }
    }
    Ok(DensityMatrix(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::random;
    use crate::rng::stream;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn kron_identity_and_permutation() {
        let i4 = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(i4, ComplexMatrix::identity(4));

        let xi = kron(&pauli_x(), &ComplexMatrix::identity(2)).unwrap();
        // 1-based (1,3),(2,4),(3,1),(4,2)
        let ones = [(0, 2), (1, 3), (2, 0), (3, 1)];
        for i in 0..4 {
            for j in 0..4 {
                let want = if ones.contains(&(i, j)) { c(1.0) } else { c(0.0) };
                assert_eq!(xi[(i, j)], want);
            }
        }
    }

    #[test]
    fn kron_rejects_three_qubits() {
        let i4 = ComplexMatrix::identity(4);
        assert_eq!(
            kron(&i4, &ComplexMatrix::identity(2)),
            Err(Error::UnsupportedDimension(8))
        );
        assert!(kron_capped(&i4, &ComplexMatrix::identity(2), 8).is_ok());
    }

    #[test]
    fn kron_matches_quadruple_loop() {
        let mut rng = stream(11, 0);
        for _ in 0..20 {
            let a = random::gaussian_matrix(2, &mut rng);
            let b = random::gaussian_matrix(2, &mut rng);
            let k = kron(&a, &b).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    for p in 0..2 {
                        for q in 0..2 {
                            let want = a[(i, j)] * b[(p, q)];
                            worst = worst.max((k[(2 * i + p, 2 * j + q)] - want).norm());
                        }
                    }
                }
            }
            assert!(worst < 1e-14);
        }
    }

    #[test]
    fn evolve_examples() {
        let mut rng = stream(3, 0);
        let rho = random::density_matrix(4, &mut rng);
        let same = evolve(&ComplexMatrix::identity(4), &rho).unwrap();
        assert!((same.matrix() - rho.matrix()).max_abs() < 1e-15);

        let flipped = evolve(&pauli_x(), &DensityMatrix::basis(2, 0)).unwrap();
        assert_eq!(flipped, DensityMatrix::basis(2, 1));

        assert!(matches!(
            evolve(&ComplexMatrix::identity(2), &rho),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = stream(5, 0);
        let rh = random::density_matrix(2, &mut rng);
        let rm = random::density_matrix(2, &mut rng);
        let prod = DensityMatrix(kron(rh.matrix(), rm.matrix()).unwrap());
        let red = partial_trace_hidden(&prod).unwrap();
        assert!((red.matrix() - rm.matrix()).max_abs() < 1e-14);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(&[c(s), c(0.0), c(0.0), c(s)]).unwrap();
        let red = partial_trace_hidden(&bell).unwrap();
        assert!((red.matrix() - DensityMatrix::maximally_mixed(2).matrix()).max_abs() < 1e-15);

        assert!(partial_trace_hidden(&rh).is_err());
    }

    #[test]
    fn partial_trace_matches_double_sum() {
        let mut rng = stream(8, 0);
        for _ in 0..20 {
            let rho = random::density_matrix(4, &mut rng);
            let red = partial_trace_hidden(&rho).unwrap();
            for k in 0..2 {
                for l in 0..2 {
                    let mut want = c(0.0);
                    for h in 0..2 {
                        want += rho.matrix()[(2 * h + k, 2 * h + l)];
                    }
                    assert!((red.matrix()[(k, l)] - want).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::identity(2)).is_err());
        let bad = ComplexMatrix::diagonal(&[c(1.5), c(-0.5)]);
        assert!(DensityMatrix::new(bad).is_err());
        let mut nonherm = ComplexMatrix::diagonal(&[c(0.5), c(0.5)]);
        nonherm[(0, 1)] = c(0.1);
        assert!(DensityMatrix::new(nonherm).is_err());
        assert!(DensityMatrix::new(DensityMatrix::maximally_mixed(4).into_matrix()).is_ok());
    }

    #[test]
    fn trace_distance_of_orthogonal_states() {
        let d = DensityMatrix::basis(2, 0)
            .trace_distance(&DensityMatrix::basis(2, 1))
            .unwrap();
        assert!((d - 1.0).abs() < 1e-14);
    }
}
