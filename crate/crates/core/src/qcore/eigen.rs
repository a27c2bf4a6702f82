use num_complex::Complex64 as C64;

use super::matrix::ComplexMatrix;

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues, eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        let n = self.values.len();
        (0..n).map(|i| self.vectors[(i, k)]).collect()
    }
}

/// Hermitian eigensolver: closed form for 2×2, cyclic complex Jacobi otherwise.
///
/// Only the Hermitian part `(A + A†)/2` is used.
pub fn hermitian_eigen(a: &ComplexMatrix) -> HermitianEigen {
    let h = hermitian_part(a);
    if h.dim() == 2 {
        eigen_2x2(&h)
    } else {
        jacobi(h)
    }
}

fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + &a.adjoint()).scale(C64::new(0.5, 0.0))
}

fn eigen_2x2(h: &ComplexMatrix) -> HermitianEigen {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)];
    let mean = 0.5 * (a + d);
    let half_gap = 0.5 * (a - d);
    let r = half_gap.hypot(b.norm());
    let values = vec![mean - r, mean + r];

    let mut vectors = ComplexMatrix::zeros(2);
    if b.norm() <= f64::EPSILON * (a.abs() + d.abs() + 1.0) * 1e-3 {
        // already diagonal
        let (lo, hi) = if a <= d { (0, 1) } else { (1, 0) };
        vectors[(lo, 0)] = C64::new(1.0, 0.0);
        vectors[(hi, 1)] = C64::new(1.0, 0.0);
    } else {
        for (k, &lam) in values.iter().enumerate() {
            // (a - λ) x + b y = 0; pick the better-conditioned of the two row equations
            let (x, y) = if (a - lam).abs() >= (d - lam).abs() {
                (-b, C64::new(a - lam, 0.0))
            } else {
                (C64::new(d - lam, 0.0), -b.conj())
            };
            let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
            vectors[(0, k)] = x / n;
            vectors[(1, k)] = y / n;
        }
    }
    HermitianEigen { values, vectors }
}

fn jacobi(mut a: ComplexMatrix) -> HermitianEigen {
    let n = a.dim();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b <= 1e-300 {
                    continue;
                }
                let phase = apq / b;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * b);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = diag(1, conj(phase)) · [[c, s], [-s, c]]
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * gpp + akq * gqp;
                    a[(k, q)] = akp * gpq + akq * gqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                    a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * gpp + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * gqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (col, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = v[(r, i)];
        }
    }
    HermitianEigen { values, vectors }
}

/// Largest singular value, `sqrt(λ_max(A†A))`.
pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    let gram = &a.adjoint() * a;
    let eig = hermitian_eigen(&gram);
    eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Eigenvalues of a normal matrix.
///
/// `W = H₁ + iH₂` with commuting Hermitian parts; diagonalizing a generic real
/// combination of `H₁` and `H₂` yields a common eigenbasis, and the eigenvalues
/// follow as Rayleigh quotients.
pub fn normal_eigenvalues(w: &ComplexMatrix) -> Vec<C64> {
    let h1 = hermitian_part(w);
    let h2 = (w - &w.adjoint()).scale(C64::new(0.0, -0.5));
    // irrational mixing weight avoids accidental degeneracies of h1 + c·h2
    let mix = &h1 + &h2.scale(C64::new(std::f64::consts::SQRT_2 / 2.718_281_828, 0.0));
    let eig = hermitian_eigen(&mix);
    (0..w.dim())
        .map(|k| {
            let v = eig.vector(k);
            let wv = w.apply(&v).expect("square");
            v.iter().zip(&wv).map(|(a, b)| a.conj() * b).sum()
        })
        .collect()
}
