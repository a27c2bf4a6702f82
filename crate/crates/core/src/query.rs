//! Query unitaries `Q(ψ, φ)`, query sequences and the diagonalizing four-query block.
//!
//! A query applies, in order: the channel `e^{iθσx}` on the hidden qubit, the
//! controlled rotation `e^{iψσz}` on the measurement qubit (fired when the
//! hidden qubit is `|1⟩`), and the rotation `e^{iφσx}` on the measurement qubit.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::protocols::PhaseSequence;
use crate::qcore::{kron, ComplexMatrix};
use crate::{Error, Result};

/// Hidden-qubit value on which the controlled z-rotation fires.
///
/// With control on `|1⟩` the four-query block reproduces `P₁..P₄(cos θ, e^{iψ})`
/// verbatim on its diagonal (checked in the tests below).
pub const CONTROL_VALUE: usize = 1;

/// Off-diagonal magnitude below which a block counts as diagonal.
pub const DIAGONAL_TOL: f64 = 1e-9;

pub(crate) fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryParams {
    pub theta: f64,
    pub psi: f64,
    pub phi: f64,
}

impl QueryParams {
    pub fn new(theta: f64, psi: f64, phi: f64) -> Self {
        Self {
            theta: reduce_angle(theta),
            psi: reduce_angle(psi),
            phi: reduce_angle(phi),
        }
    }
}

/// `e^{iθσx} = cos θ·I + i sin θ·σx`.
pub fn x_rotation(theta: f64) -> ComplexMatrix {
    let (s, c) = theta.sin_cos();
    ComplexMatrix::from_rows([
        [C64::new(c, 0.0), C64::new(0.0, s)],
        [C64::new(0.0, s), C64::new(c, 0.0)],
    ])
}

/// `e^{iψσz}`.
pub fn z_rotation(psi: f64) -> ComplexMatrix {
    ComplexMatrix::diagonal(&[C64::from_polar(1.0, psi), C64::from_polar(1.0, -psi)])
}

/// The unknown channel `C = e^{iθσx}` on the hidden qubit.
pub fn channel_unitary(theta: f64) -> ComplexMatrix {
    x_rotation(theta)
}

/// `|c⟩⟨c| ⊗ e^{iψσz} + |c̄⟩⟨c̄| ⊗ I` with `c = CONTROL_VALUE`.
pub fn controlled_rotation(psi: f64) -> ComplexMatrix {
    let mut diag = [C64::new(1.0, 0.0); 4];
    diag[2 * CONTROL_VALUE] = C64::from_polar(1.0, psi);
    diag[2 * CONTROL_VALUE + 1] = C64::from_polar(1.0, -psi);
    ComplexMatrix::diagonal(&diag)
}

/// `(I ⊗ e^{iφσx}) · CR(ψ) · (C(θ) ⊗ I)`.
pub fn query_unitary(p: &QueryParams) -> ComplexMatrix {
    let id = ComplexMatrix::identity(2);
    let chan = kron(&channel_unitary(p.theta), &id).expect("two qubits");
    let rot = kron(&id, &x_rotation(p.phi)).expect("two qubits");
    &(&rot * &controlled_rotation(p.psi)) * &chan
}

/// `Q_K ··· Q_1` for the query phases of `seq`; the state-preparation angle `φ₀` is not included.
pub fn sequence_unitary(theta: f64, seq: &PhaseSequence) -> ComplexMatrix {
    let mut u = ComplexMatrix::identity(4);
    for n in 0..seq.len() {
        let q = query_unitary(&QueryParams::new(theta, seq.psi(n), seq.phi(n)));
        u = &q * &u;
    }
    u
}

/// `Q̌ = Q₄Q₃Q₂Q₁` with all `φ = 0` and shared `ψ`, at `θ = 0` and `θ = α`.
pub fn four_query_block(alpha: f64, psi: f64) -> (ComplexMatrix, ComplexMatrix) {
    let block = |theta: f64| {
        let q = query_unitary(&QueryParams::new(theta, psi, 0.0));
        let q2 = &q * &q;
        &q2 * &q2
    };
    (block(0.0), block(alpha))
}

/// Diagonalizing four-query block for a given channel angle.
#[derive(Clone, Debug)]
pub struct FourQueryBlock {
    pub alpha: f64,
    /// Controlled-rotation phase `ψ = arg ã`, in `[0, 2π)`.
    pub psi: f64,
    pub a_tilde: C64,
    /// Effective z-phase per block, principal branch `(−π, π]`.
    pub beta: f64,
    pub block_theta0: ComplexMatrix,
    pub block_alpha: ComplexMatrix,
}

/// Finds `ψ` making both four-query blocks diagonal.
///
/// Solves `x²a² + 2(x² − 1)a + x² = 0` for `x = cos α`; its roots are
/// unit-modulus exactly when `x² ≥ 1/2`. Of the two conjugate roots the one
/// with positive `β` is kept.
pub fn diagonalizing_psi(alpha: f64) -> Result<FourQueryBlock> {
    if !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("alpha = {alpha}")));
    }
    let x = alpha.cos();
    let x2 = x * x;
    let disc = 2.0 * x2 - 1.0;
    if disc < -1e-14 || x2 == 0.0 {
        return Err(Error::NoUnitRoot { alpha });
    }
    let re = (1.0 - x2) / x2;
    let im = disc.max(0.0).sqrt() / x2;
    let roots = [C64::new(re, -im), C64::new(re, im)];

    let candidates: Vec<(C64, f64)> = roots
        .iter()
        .map(|&a| {
            let a = a / a.norm();
            (a, polynomials::p1(x, a).arg())
        })
        .collect();
    let (a_tilde, beta) = if candidates[0].1 >= candidates[1].1 {
        candidates[0]
    } else {
        candidates[1]
    };
    let p1 = polynomials::p1(x, a_tilde);
    if (p1.norm() - 1.0).abs() > 1e-9 || (a_tilde.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::NoUnitRoot { alpha });
    }

    let psi = reduce_angle(a_tilde.arg());
    let (b0, ba) = four_query_block(alpha, psi);
    if b0.off_diagonal_max() < DIAGONAL_TOL && ba.off_diagonal_max() < DIAGONAL_TOL {
        return Ok(FourQueryBlock {
            alpha,
            psi,
            a_tilde,
            beta,
            block_theta0: b0,
            block_alpha: ba,
        });
    }
    numeric_diagonalizing_psi(alpha)
}

fn block_off_diagonal(alpha: f64, psi: f64) -> f64 {
    let (b0, ba) = four_query_block(alpha, psi);
    b0.off_diagonal_max().max(ba.off_diagonal_max())
}

/// Grid search over `ψ ∈ [0, 2π)` plus golden-section refinement of the
/// off-diagonal magnitude. Used when the closed form disagrees with the
/// implemented controlled-rotation convention.
fn numeric_diagonalizing_psi(alpha: f64) -> Result<FourQueryBlock> {
    const GRID: usize = 10_000;
    let h = TAU / GRID as f64;
    let mut best: Vec<(f64, f64)> = (0..GRID)
        .map(|i| {
            let psi = i as f64 * h;
            (psi, block_off_diagonal(alpha, psi))
        })
        .collect();
    best.sort_by(|a, b| a.1.total_cmp(&b.1));

    let x = alpha.cos();
    let mut found: Option<FourQueryBlock> = None;
    for &(psi0, _) in best.iter().take(8) {
        let (mut lo, mut hi) = (psi0 - h, psi0 + h);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let m1 = hi - g * (hi - lo);
            let m2 = lo + g * (hi - lo);
            if block_off_diagonal(alpha, m1) < block_off_diagonal(alpha, m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let psi = reduce_angle(0.5 * (lo + hi));
        if block_off_diagonal(alpha, psi) < DIAGONAL_TOL {
            let a_tilde = C64::from_polar(1.0, psi);
            let beta = polynomials::p1(x, a_tilde).arg();
            let better = found.as_ref().map_or(true, |f| beta > f.beta);
            if better {
                let (b0, ba) = four_query_block(alpha, psi);
                found = Some(FourQueryBlock {
                    alpha,
                    psi,
                    a_tilde,
                    beta,
                    block_theta0: b0,
                    block_alpha: ba,
                });
            }
        }
    }
    found.ok_or(Error::NoUnitRoot { alpha })
}

/// Diagonal entries of the four-query block as polynomials in `x = cos θ` and `a = e^{iψ}`.
pub mod polynomials {
    use num_complex::Complex64 as C64;

    fn core1(x: f64, a: C64) -> C64 {
        let x2 = x * x;
        a * a - a * (1.0 + a) * (3.0 + a) * x2 + (1.0 + a).powi(3) * x2 * x2
    }

    fn core2(x: f64, a: C64) -> C64 {
        let x2 = x * x;
        a - (1.0 + a) * (1.0 + 3.0 * a) * x2 + (1.0 + a).powi(3) * x2 * x2
    }

    pub fn p1(x: f64, a: C64) -> C64 {
        core1(x, a)
    }

    pub fn p2(x: f64, a: C64) -> C64 {
        core2(x, a) / a.powi(3)
    }

    pub fn p3(x: f64, a: C64) -> C64 {
        a * core2(x, a)
    }

    pub fn p4(x: f64, a: C64) -> C64 {
        core1(x, a) / a.powi(4)
    }

    /// The shared off-diagonal factor as printed: `x√(1−x²)·a(1−a)(−2a + (1+a)²x²)`.
    pub fn r(x: f64, a: C64) -> C64 {
        x * (1.0 - x * x).max(0.0).sqrt() * a * (1.0 - a) * (-2.0 * a + (1.0 + a).powi(2) * x * x)
    }
}

/// Applies one query to a two-qubit state vector in place.
#[inline]
pub(crate) fn apply_query(state: &mut [C64; 4], chan: (f64, f64), psi_phase: C64, rot: (f64, f64)) {
    let (cs, sn) = chan;
    let isn = C64::new(0.0, sn);
    for m in 0..2 {
        let a = state[m];
        let b = state[2 + m];
        state[m] = a * cs + isn * b;
        state[2 + m] = isn * a + b * cs;
    }
    let base = 2 * CONTROL_VALUE;
    state[base] *= psi_phase;
    state[base + 1] *= psi_phase.conj();
    let (rc, rs) = rot;
    let irs = C64::new(0.0, rs);
    for h in 0..2 {
        let a = state[2 * h];
        let b = state[2 * h + 1];
        state[2 * h] = a * rc + irs * b;
        state[2 * h + 1] = irs * a + b * rc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{random, DensityMatrix};
    use std::f64::consts::PI;
    use crate::rng::stream;
    use rand::Rng;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        (a - b).max_abs()
    }

    #[test]
    fn channel_examples() {
        assert!(close(&channel_unitary(0.0), &ComplexMatrix::identity(2)) < 1e-15);
        let ix = crate::qcore::pauli_x().scale(C64::new(0.0, 1.0));
        assert!(close(&channel_unitary(PI / 2.0), &ix) < 1e-15);
        let minus = ComplexMatrix::identity(2).scale(C64::new(-1.0, 0.0));
        assert!(close(&channel_unitary(PI), &minus) < 1e-15);
    }

    #[test]
    fn query_examples() {
        let q = query_unitary(&QueryParams::new(0.0, 0.0, 0.0));
        assert!(close(&q, &ComplexMatrix::identity(4)) < 1e-15);
        let q = query_unitary(&QueryParams::new(0.0, 0.0, PI / 4.0));
        let want = kron(&ComplexMatrix::identity(2), &x_rotation(PI / 4.0)).unwrap();
        assert!(close(&q, &want) < 1e-15);

        let mut rng = stream(31, 0);
        for _ in 0..50 {
            let p = QueryParams::new(rng.random::<f64>() * TAU, rng.random::<f64>() * TAU, rng.random::<f64>() * TAU);
            assert!(query_unitary(&p).unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn angles_reduced_on_construction() {
        let p = QueryParams::new(-0.5, 7.0, TAU);
        assert!((p.theta - (TAU - 0.5)).abs() < 1e-15);
        assert!((p.psi - (7.0 - TAU)).abs() < 1e-15);
        assert_eq!(p.phi, 0.0);
    }

    #[test]
    fn control_convention_reproduces_block_polynomials() {
        // bootstrap check freezing CONTROL_VALUE: diagonal of Q̌ is (P₁, P₂, P₃, P₄)
        let mut rng = stream(32, 0);
        for _ in 0..20 {
            let theta: f64 = rng.random::<f64>() * TAU;
            let psi: f64 = rng.random::<f64>() * TAU;
            let (_, b) = four_query_block(theta, psi);
            let x = theta.cos();
            let a = C64::from_polar(1.0, psi);
            let want = [
                polynomials::p1(x, a),
                polynomials::p2(x, a),
                polynomials::p3(x, a),
                polynomials::p4(x, a),
            ];
            for i in 0..4 {
                assert!((b[(i, i)] - want[i]).norm() < 1e-12, "entry {i}");
            }
            // only hidden-flip off-diagonals are populated
            for (i, j) in [(0, 1), (0, 3), (1, 2), (2, 3)] {
                assert!(b[(i, j)].norm() < 1e-12 && b[(j, i)].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn polynomial_relations() {
        let mut rng = stream(33, 0);
        for _ in 0..50 {
            let x: f64 = rng.random::<f64>() * 2.0 - 1.0;
            let a = C64::from_polar(1.0, rng.random::<f64>() * TAU);
            let p1 = polynomials::p1(x, a);
            assert!((polynomials::p4(x, a) - p1 / a.powi(4)).norm() < 1e-12);
            assert!((polynomials::p3(x, a) - a.powi(4) * polynomials::p2(x, a)).norm() < 1e-12);
        }
    }

    #[test]
    fn printed_off_diagonal_factor_vanishes_at_unit_root() {
        // R(x, ã) = 0 holds verbatim even though R is not the literal off-diagonal entry
        for alpha in [0.1, 0.3, 2.5] {
            let b = diagonalizing_psi(alpha).unwrap();
            assert!(polynomials::r(alpha.cos(), b.a_tilde).norm() < 1e-12);
        }
    }

    #[test]
    fn sequence_examples() {
        let empty = PhaseSequence::shared(0.3, vec![], 0.2);
        assert!(close(&sequence_unitary(0.4, &empty), &ComplexMatrix::identity(4)) < 1e-15);

        let one = PhaseSequence::shared(0.0, vec![0.7], 1.1);
        let q = query_unitary(&QueryParams::new(0.4, 1.1, 0.7));
        assert!(close(&sequence_unitary(0.4, &one), &q) < 1e-15);

        let theta = 0.37;
        let bare = PhaseSequence::shared(0.0, vec![0.0; 3], 0.0);
        let want = kron(&channel_unitary(3.0 * theta), &ComplexMatrix::identity(2)).unwrap();
        assert!(close(&sequence_unitary(theta, &bare), &want) < 1e-12);
    }

    #[test]
    fn composition_law() {
        let mut rng = stream(34, 0);
        for _ in 0..20 {
            let mk = |rng: &mut crate::rng::StreamRng, k: usize| {
                let phis = (0..k).map(|_| rng.random::<f64>() * TAU).collect();
                let psis = (0..k).map(|_| rng.random::<f64>() * TAU).collect();
                PhaseSequence::per_query(0.0, phis, psis).unwrap()
            };
            let a = mk(&mut rng, 3);
            let b = mk(&mut rng, 2);
            let theta = rng.random::<f64>() * TAU;
            let joined = a.concat(&b);
            let lhs = sequence_unitary(theta, &joined);
            let rhs = &sequence_unitary(theta, &b) * &sequence_unitary(theta, &a);
            assert!(close(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn four_query_block_at_psi_zero() {
        let alpha = 0.23;
        let (_, b) = four_query_block(alpha, 0.0);
        let x = alpha.cos();
        let p1 = 1.0 - 8.0 * x * x + 8.0 * x.powi(4);
        assert!((b[(0, 0)].re - p1).abs() < 1e-12);
        assert!((b[(0, 0)].re - (4.0 * alpha).cos()).abs() < 1e-12);
    }

    #[test]
    fn diagonalizing_blocks_have_documented_structure() {
        for alpha in [0.1, 0.05, 0.4, 0.7, 2.5, 3.5, 6.0] {
            let blk = diagonalizing_psi(alpha).unwrap();
            assert!((blk.a_tilde.norm() - 1.0).abs() < 1e-10);
            assert!(blk.block_theta0.off_diagonal_max() < 1e-9);
            assert!(blk.block_alpha.off_diagonal_max() < 1e-9);
            assert!(blk.block_theta0.unitarity_defect() < 1e-12);
            let b0 = &blk.block_theta0;
            let ba = &blk.block_alpha;
            let beta = blk.beta;
            // θ = 0: identity on hidden |0⟩, phases e^{±2iβ} on hidden |1⟩
            assert!((b0[(0, 0)] - 1.0).norm() < 1e-9 && (b0[(1, 1)] - 1.0).norm() < 1e-9);
            assert!((b0[(2, 2)] - C64::from_polar(1.0, 2.0 * beta)).norm() < 1e-9);
            assert!((b0[(3, 3)] - C64::from_polar(1.0, -2.0 * beta)).norm() < 1e-9);
            // θ = α: the same z-phase e^{±iβ} in both hidden subspaces
            for h in 0..2 {
                assert!((ba[(2 * h, 2 * h)] - C64::from_polar(1.0, beta)).norm() < 1e-9);
                assert!((ba[(2 * h + 1, 2 * h + 1)] - C64::from_polar(1.0, -beta)).norm() < 1e-9);
            }
            assert!(beta > 0.0 && beta <= PI);
        }
    }

    #[test]
    fn beta_asymptotics() {
        let r1 = diagonalizing_psi(0.1).unwrap().beta / (2.0 * 0.01);
        let r2 = diagonalizing_psi(0.05).unwrap().beta / (2.0 * 0.0025);
        let r3 = diagonalizing_psi(0.01).unwrap().beta / (2.0 * 1e-4);
        assert!((0.99..=1.01).contains(&r1), "{r1}");
        assert!((0.999..=1.001).contains(&r3), "{r3}");
        assert!((r1 - 1.0).abs() > (r2 - 1.0).abs() && (r2 - 1.0).abs() > (r3 - 1.0).abs());
    }

    #[test]
    fn no_unit_root_outside_first_region() {
        assert!(matches!(diagonalizing_psi(PI / 2.0), Err(Error::NoUnitRoot { .. })));
        assert!(matches!(diagonalizing_psi(1.0), Err(Error::NoUnitRoot { .. })));
        // boundary point x² = 1/2 has the double root a = 1
        let b = diagonalizing_psi(PI / 4.0).unwrap();
        assert!(b.psi.min(TAU - b.psi) < 1e-6);
    }

    #[test]
    fn numeric_fallback_agrees_with_closed_form() {
        for alpha in [0.1, 0.6] {
            let closed = diagonalizing_psi(alpha).unwrap();
            let numeric = numeric_diagonalizing_psi(alpha).unwrap();
            assert!((closed.beta - numeric.beta).abs() < 1e-7);
            assert!((closed.psi - numeric.psi).abs() < 1e-6);
        }
    }

    #[test]
    fn fast_kernel_matches_matrix_route() {
        let mut rng = stream(35, 0);
        for _ in 0..20 {
            let v = random::pure_state(4, &mut rng);
            let (t, p, f) = (rng.random::<f64>() * TAU, rng.random::<f64>() * TAU, rng.random::<f64>() * TAU);
            let u = query_unitary(&QueryParams::new(t, p, f));
            let want = u.apply(&v).unwrap();
            let mut s = [v[0], v[1], v[2], v[3]];
            apply_query(&mut s, (t.cos(), t.sin()), C64::from_polar(1.0, p), (f.cos(), f.sin()));
            for i in 0..4 {
                assert!((s[i] - want[i]).norm() < 1e-14);
            }
        }
        let _ = DensityMatrix::maximally_mixed(2);
    }
}
