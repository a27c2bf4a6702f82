//! Protocol simulation: single-shot sequential distributions, i.i.d. multi-shot
//! sampling, and the depth-1 parallel invariance check.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64 as C64;
use rand::distr::{Bernoulli, Distribution};
use serde::{Deserialize, Serialize};

use crate::qcore::{
    evolve, hermitian_eigen, kron, partial_trace_hidden, ComplexMatrix, DensityMatrix,
};
use crate::query::{apply_query, reduce_angle, sequence_unitary, x_rotation, CONTROL_VALUE};
use crate::rng::stream;
use crate::{Error, Result};

/// Controlled-rotation phases of a sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PsiPhases {
    Shared(f64),
    PerQuery(Vec<f64>),
}

/// Phases `Φ = (φ₀, φ₁..φ_K, ψ)` of a sequential protocol.
///
/// `φ₀` prepares the measurement qubit as `e^{iφ₀σx}|0⟩`; query `n` uses
/// `(ψ_n, φ_n)`. All angles are stored reduced to `[0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSequence {
    phi0: f64,
    phis: Vec<f64>,
    psis: PsiPhases,
}

impl PhaseSequence {
    pub fn shared(phi0: f64, phis: Vec<f64>, psi: f64) -> Self {
        Self {
            phi0: reduce_angle(phi0),
            phis: phis.into_iter().map(reduce_angle).collect(),
            psis: PsiPhases::Shared(reduce_angle(psi)),
        }
    }

    pub fn per_query(phi0: f64, phis: Vec<f64>, psis: Vec<f64>) -> Result<Self> {
        if psis.len() != phis.len() {
            return Err(Error::DimensionMismatch {
                expected: phis.len(),
                actual: psis.len(),
            });
        }
        Ok(Self {
            phi0: reduce_angle(phi0),
            phis: phis.into_iter().map(reduce_angle).collect(),
            psis: PsiPhases::PerQuery(psis.into_iter().map(reduce_angle).collect()),
        })
    }

    /// Optimizer starting point `φ = {π/4, 0, …, 0, π/4}` with shared `ψ`.
    pub fn initial_guess(k: usize, psi: f64) -> Self {
        let mut phis = vec![0.0; k];
        if let Some(last) = phis.last_mut() {
            *last = FRAC_PI_4;
        }
        Self::shared(FRAC_PI_4, phis, psi)
    }

    /// Number of queries `K`.
    pub fn len(&self) -> usize {
        self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phis.is_empty()
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    /// `φ_{n+1}` for query index `n ∈ 0..K`.
    pub fn phi(&self, n: usize) -> f64 {
        self.phis[n]
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    /// `ψ_{n+1}` for query index `n ∈ 0..K`.
    pub fn psi(&self, n: usize) -> f64 {
        match &self.psis {
            PsiPhases::Shared(p) => *p,
            PsiPhases::PerQuery(v) => v[n],
        }
    }

    pub fn psis(&self) -> &PsiPhases {
        &self.psis
    }

    pub fn is_shared(&self) -> bool {
        matches!(self.psis, PsiPhases::Shared(_))
    }

    /// Free angles in the order `(φ₀, φ₁..φ_K, ψ…)`: `K + 2` entries when shared, `2K + 1` otherwise.
    pub fn to_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.len() + 2);
        v.push(self.phi0);
        v.extend_from_slice(&self.phis);
        match &self.psis {
            PsiPhases::Shared(p) => v.push(*p),
            PsiPhases::PerQuery(ps) => v.extend_from_slice(ps),
        }
        v
    }

    /// Inverse of [`to_params`](Self::to_params).
    pub fn from_params(k: usize, shared: bool, params: &[f64]) -> Result<Self> {
        let want = if shared { k + 2 } else { 2 * k + 1 };
        if params.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                actual: params.len(),
            });
        }
        let phis = params[1..=k].to_vec();
        if shared {
            Ok(Self::shared(params[0], phis, params[k + 1]))
        } else {
            Self::per_query(params[0], phis, params[k + 1..].to_vec())
        }
    }

    /// Queries of `self` followed by those of `next`; keeps `self`'s `φ₀`.
    pub fn concat(&self, next: &Self) -> Self {
        let mut phis = self.phis.clone();
        phis.extend_from_slice(&next.phis);
        let psis = match (&self.psis, &next.psis) {
            (PsiPhases::Shared(a), PsiPhases::Shared(b)) if a == b || next.is_empty() => PsiPhases::Shared(*a),
            (_, PsiPhases::Shared(b)) if self.is_empty() => PsiPhases::Shared(*b),
            _ => PsiPhases::PerQuery(
                (0..self.len())
                    .map(|n| self.psi(n))
                    .chain((0..next.len()).map(|n| next.psi(n)))
                    .collect(),
            ),
        };
        Self {
            phi0: self.phi0,
            phis,
            psis,
        }
    }
}

/// A discrimination instance `(α, ε, ρ_h)`.
#[derive(Clone, Debug)]
pub struct HBCDProblem {
    alpha: f64,
    epsilon: f64,
    rho_h: DensityMatrix,
    branches: Vec<(f64, [C64; 2])>,
}

impl HBCDProblem {
    pub fn new(alpha: f64, epsilon: f64, rho_h: DensityMatrix) -> Result<Self> {
        if !(alpha > 0.0 && alpha < std::f64::consts::TAU) {
            return Err(Error::InvalidInput(format!("alpha = {alpha} outside (0, 2π)")));
        }
        if !(0.0..=0.5).contains(&epsilon) {
            return Err(Error::InvalidInput(format!("epsilon = {epsilon} outside [0, 0.5]")));
        }
        if rho_h.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: rho_h.dim(),
            });
        }
        let eig = hermitian_eigen(rho_h.matrix());
        let branches = (0..2)
            .filter(|&k| eig.values[k] > 0.0)
            .map(|k| {
                let v = eig.vector(k);
                (eig.values[k], [v[0], v[1]])
            })
            .collect();
        Ok(Self {
            alpha,
            epsilon,
            rho_h,
            branches,
        })
    }

    /// Instance with the hidden qubit maximally mixed.
    pub fn mixed(alpha: f64, epsilon: f64) -> Result<Self> {
        Self::new(alpha, epsilon, DensityMatrix::maximally_mixed(2))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rho_h(&self) -> &DensityMatrix {
        &self.rho_h
    }

    /// Same instance with a different hidden state.
    pub fn with_rho_h(&self, rho_h: DensityMatrix) -> Result<Self> {
        Self::new(self.alpha, self.epsilon, rho_h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Sequential,
    MultiShot,
    Parallel,
}

impl ProtocolKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProtocolKind::Sequential => "sequential",
            ProtocolKind::MultiShot => "multishot",
            ProtocolKind::Parallel => "parallel",
        }
    }
}

/// `Σ = (N, d, S, Φ)`; measurement is always the computational basis of the measurement qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    pub n: usize,
    pub d: usize,
    pub phase_sequence: PhaseSequence,
}

impl ProtocolConfig {
    pub fn new(kind: ProtocolKind, n: usize, d: usize, phase_sequence: PhaseSequence) -> Result<Self> {
        let cfg = Self {
            kind,
            n,
            d,
            phase_sequence,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        if self.n == 0 || self.d == 0 {
            return bad("N and d must be positive");
        }
        match self.kind {
            ProtocolKind::Sequential if self.d != self.n => bad("sequential protocol requires d = N"),
            ProtocolKind::MultiShot if self.n % self.d != 0 => bad("multi-shot protocol requires d | N"),
            ProtocolKind::Parallel if self.d != 1 => bad("parallel protocol requires d = 1"),
            _ if self.kind != ProtocolKind::Parallel && self.phase_sequence.len() != self.d => {
                bad("phase sequence length must equal d")
            }
            _ => Ok(()),
        }
    }

    /// Number of shots `m = N / d`.
    pub fn shots(&self) -> usize {
        self.n / self.d
    }
}

/// `(P(y=1 | θ=0), P(y=1 | θ=α))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub p1_given_0: f64,
    pub p1_given_alpha: f64,
}

impl OutcomeDistribution {
    const SLACK: f64 = 1e-12;

    /// Validates and clamps; values may exceed `[0, 1]` by at most `1e-12`.
    pub fn new(p1_given_0: f64, p1_given_alpha: f64) -> Result<Self> {
        for p in [p1_given_0, p1_given_alpha] {
            if p.is_nan() || p < -Self::SLACK || p > 1.0 + Self::SLACK {
                return Err(Error::InvalidInput(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(Self::clamped(p1_given_0, p1_given_alpha))
    }

    pub(crate) fn clamped(p1_given_0: f64, p1_given_alpha: f64) -> Self {
        Self {
            p1_given_0: p1_given_0.clamp(0.0, 1.0),
            p1_given_alpha: p1_given_alpha.clamp(0.0, 1.0),
        }
    }

    /// `P(1|α) − P(1|0)`.
    pub fn gap(&self) -> f64 {
        self.p1_given_alpha - self.p1_given_0
    }

    pub fn p1(&self, theta_is_alpha: bool) -> f64 {
        if theta_is_alpha {
            self.p1_given_alpha
        } else {
            self.p1_given_0
        }
    }
}

/// Per-query trig tables shared by both hypotheses.
pub(crate) struct CompiledSequence {
    prep: [C64; 2],
    psi: Vec<C64>,
    rot: Vec<(f64, f64)>,
}

impl CompiledSequence {
    pub(crate) fn new(seq: &PhaseSequence) -> Self {
        let (s0, c0) = seq.phi0().sin_cos();
        Self {
            prep: [C64::new(c0, 0.0), C64::new(0.0, s0)],
            psi: (0..seq.len()).map(|n| C64::from_polar(1.0, seq.psi(n))).collect(),
            rot: seq.phis().iter().map(|p| (p.cos(), p.sin())).collect(),
        }
    }

    /// Final two-qubit state for a pure hidden state `h`.
    pub(crate) fn propagate(&self, chan: (f64, f64), h: &[C64; 2]) -> [C64; 4] {
        let mut s = [
            h[0] * self.prep[0],
            h[0] * self.prep[1],
            h[1] * self.prep[0],
            h[1] * self.prep[1],
        ];
        for (psi, rot) in self.psi.iter().zip(&self.rot) {
            apply_query(&mut s, chan, *psi, *rot);
        }
        s
    }

    /// `P(y = 1)` for a pure hidden state `h`.
    fn p1_pure(&self, chan: (f64, f64), h: &[C64; 2]) -> f64 {
        let s = self.propagate(chan, h);
        s[1].norm_sqr() + s[3].norm_sqr()
    }

    pub(crate) fn p1(&self, theta: f64, problem: &HBCDProblem) -> f64 {
        let chan = (theta.cos(), theta.sin());
        problem
            .branches
            .iter()
            .map(|(w, h)| w * self.p1_pure(chan, h))
            .sum()
    }

    pub(crate) fn distribution(&self, problem: &HBCDProblem) -> OutcomeDistribution {
        OutcomeDistribution::clamped(self.p1(0.0, problem), self.p1(problem.alpha, problem))
    }
}

/// Exact outcome distribution of one sequential shot.
///
/// Propagates each eigen-branch of `ρ_h` as a pure two-qubit state vector.
pub fn single_shot_distribution(seq: &PhaseSequence, problem: &HBCDProblem) -> OutcomeDistribution {
    CompiledSequence::new(seq).distribution(problem)
}

/// Same as [`single_shot_distribution`] via explicit density matrices:
/// `⟨1| Tr_H[U (ρ_h ⊗ ρ_m) U†] |1⟩`.
pub fn single_shot_distribution_dense(seq: &PhaseSequence, problem: &HBCDProblem) -> OutcomeDistribution {
    let prep = x_rotation(seq.phi0());
    let zero = DensityMatrix::basis(2, 0);
    let rho_m = evolve(&prep, &zero).expect("2x2");
    let joint = DensityMatrix::new(kron(problem.rho_h().matrix(), rho_m.matrix()).expect("two qubits"))
        .expect("product of states");
    let p1 = |theta: f64| {
        let u = sequence_unitary(theta, seq);
        let out = evolve(&u, &joint).expect("4x4");
        partial_trace_hidden(&out).expect("4x4").population(1)
    };
    OutcomeDistribution::clamped(p1(0.0), p1(problem.alpha()))
}

/// Draws `m` i.i.d. shot outcomes at channel angle `theta ∈ {0, α}`.
///
/// The hidden qubit is re-initialized to `ρ_h` for every shot.
pub fn multishot_sample(
    seq: &PhaseSequence,
    problem: &HBCDProblem,
    theta: f64,
    m: usize,
    seed: u64,
) -> Result<Vec<u8>> {
    let is_alpha = if theta == 0.0 {
        false
    } else if (theta - problem.alpha()).abs() < 1e-12 {
        true
    } else {
        return Err(Error::InvalidInput(format!("theta = {theta} is neither 0 nor alpha")));
    };
    if m == 0 {
        return Err(Error::InvalidInput("m must be at least 1".into()));
    }
    let p = single_shot_distribution(seq, problem).p1(is_alpha);
    let mut rng = stream(seed, 0);
    Ok(sample_bits(p, m, &mut rng))
}

pub(crate) fn sample_bits<R: rand::Rng + ?Sized>(p: f64, m: usize, rng: &mut R) -> Vec<u8> {
    let bern = Bernoulli::new(p.clamp(0.0, 1.0)).expect("p in [0, 1]");
    (0..m).map(|_| bern.sample(rng) as u8).collect()
}

/// Largest register size for the parallel check (state dimension `4^N`).
pub const MAX_PARALLEL_COPIES: usize = 5;

/// Trace distance between the measurement-register states of a depth-1 parallel
/// protocol at `θ = 0` and `θ = α`, with every hidden copy in `I/2`.
///
/// `measurement_state` is an arbitrary (possibly entangled) pure state of the
/// `N = psis.len()` measurement qubits.
pub fn parallel_depth1_invariance(
    alpha: f64,
    psis: &[f64],
    phis: &[f64],
    measurement_state: &[C64],
) -> Result<f64> {
    parallel_depth1_distance(alpha, psis, phis, measurement_state, &DensityMatrix::maximally_mixed(2))
}

/// [`parallel_depth1_invariance`] with an arbitrary per-copy hidden state.
pub fn parallel_depth1_distance(
    alpha: f64,
    psis: &[f64],
    phis: &[f64],
    measurement_state: &[C64],
    rho_h: &DensityMatrix,
) -> Result<f64> {
    let n = psis.len();
    if n == 0 || n > MAX_PARALLEL_COPIES {
        return Err(Error::UnsupportedDimension(n));
    }
    if phis.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: phis.len(),
        });
    }
    let dm = 1usize << n;
    if measurement_state.len() != dm {
        return Err(Error::DimensionMismatch {
            expected: dm,
            actual: measurement_state.len(),
        });
    }
    if rho_h.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: rho_h.dim(),
        });
    }
    let eig = hermitian_eigen(rho_h.matrix());
    let rho0 = parallel_reduced_state(0.0, psis, phis, measurement_state, &eig);
    let rho1 = parallel_reduced_state(alpha, psis, phis, measurement_state, &eig);
    let diff = &rho0 - &rho1;
    Ok(0.5 * hermitian_eigen(&diff).values.iter().map(|x| x.abs()).sum::<f64>())
}

fn parallel_reduced_state(
    theta: f64,
    psis: &[f64],
    phis: &[f64],
    meas: &[C64],
    eig: &crate::qcore::HermitianEigen,
) -> ComplexMatrix {
    let n = psis.len();
    let dm = 1usize << n;
    let (cs, sn) = (theta.cos(), theta.sin());
    let mut rho = ComplexMatrix::zeros(dm);

    // hidden register: product of per-copy eigen-branches
    for branch in 0..dm {
        let mut weight = 1.0;
        let mut hidden = vec![C64::new(1.0, 0.0)];
        for copy in 0..n {
            let k = (branch >> (n - 1 - copy)) & 1;
            weight *= eig.values[k].max(0.0);
            let v = eig.vector(k);
            hidden = hidden.iter().flat_map(|a| [a * v[0], a * v[1]]).collect();
        }
        if weight == 0.0 {
            continue;
        }
        // joint index = hidden * dm + meas
        let mut psi: Vec<C64> = hidden.iter().flat_map(|h| meas.iter().map(move |m| h * m)).collect();

        for copy in 0..n {
            let bit = n - 1 - copy;
            let isn = C64::new(0.0, sn);
            for h in 0..dm {
                if (h >> bit) & 1 == 1 {
                    continue;
                }
                let h1 = h | (1 << bit);
                for m in 0..dm {
                    let a = psi[h * dm + m];
                    let b = psi[h1 * dm + m];
                    psi[h * dm + m] = a * cs + isn * b;
                    psi[h1 * dm + m] = isn * a + b * cs;
                }
            }
            let ph = C64::from_polar(1.0, psis[copy]);
            for h in 0..dm {
                if (h >> bit) & 1 != CONTROL_VALUE {
                    continue;
                }
                for m in 0..dm {
                    let f = if (m >> bit) & 1 == 0 { ph } else { ph.conj() };
                    psi[h * dm + m] *= f;
                }
            }
            let (rs, rc) = phis[copy].sin_cos();
            let irs = C64::new(0.0, rs);
            for h in 0..dm {
                for m in 0..dm {
                    if (m >> bit) & 1 == 1 {
                        continue;
                    }
                    let m1 = m | (1 << bit);
                    let a = psi[h * dm + m];
                    let b = psi[h * dm + m1];
                    psi[h * dm + m] = a * rc + irs * b;
                    psi[h * dm + m1] = irs * a + b * rc;
                }
            }
        }

        for h in 0..dm {
            let row = &psi[h * dm..(h + 1) * dm];
            for i in 0..dm {
                for j in 0..dm {
                    rho[(i, j)] += row[i] * row[j].conj() * weight;
                }
            }
        }
    }
    rho
}
