//! Closed-form results and constructions: angle regions, perfect
//! discrimination, query lower bound, shot-count reference, distinguishability
//! distance, Helstrom and noisy-query error bounds, cavity cooperativity.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::phaseopt::{run_restart, OptimizerConfig};
use crate::polish::{levenberg_marquardt, LmOptions};
use crate::protocols::{CompiledSequence, HBCDProblem, PhaseSequence};
use crate::qcore::{normal_eigenvalues, ComplexMatrix};
use crate::query::{diagonalizing_psi, reduce_angle};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    D1,
    D2,
    D3,
}

/// Angle-multiplication factor `j` and the region it comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionLabel {
    pub j: u32,
    pub region: Region,
}

fn in_any(alpha: f64, intervals: &[(f64, f64)]) -> bool {
    intervals.iter().any(|&(lo, hi)| alpha >= lo * PI && alpha <= hi * PI)
}

/// Region of `α ∈ [0, 2π)`; boundary points go to the lower `j`.
///
/// `D1 = [0, π/4] ∪ [3π/4, 5π/4] ∪ [7π/4, 2π)`,
/// `D2 = [3π/8, 5π/8] ∪ [11π/8, 13π/8]`, `D3` the rest.
pub fn region_of(alpha: f64) -> Result<RegionLabel> {
    if !(0.0..TAU).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} outside [0, 2π)")));
    }
    let label = if in_any(alpha, &[(0.0, 0.25), (0.75, 1.25), (1.75, 2.0)]) {
        RegionLabel { j: 1, region: Region::D1 }
    } else if in_any(alpha, &[(0.375, 0.625), (1.375, 1.625)]) {
        RegionLabel { j: 2, region: Region::D2 }
    } else {
        RegionLabel { j: 3, region: Region::D3 }
    };
    Ok(label)
}

/// How a perfect-discrimination sequence was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Construction {
    /// Diagonalizing four-query blocks with refined x-phases between blocks.
    Blocks,
    /// Phase optimization followed by a zero-residual polish.
    Searched,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerfectProtocolResult {
    pub alpha: f64,
    pub region: RegionLabel,
    /// Block phase for the multiplied angle `jα`; zero when that angle is `π`.
    pub beta: f64,
    /// `j·⌈2π/|β|⌉`, or `None` when `β = 0`.
    pub count_bound: Option<usize>,
    pub query_count: usize,
    pub construction: Construction,
    pub phase_sequence: PhaseSequence,
    pub p1_given_0: f64,
    pub p1_given_alpha: f64,
    /// Deterministic outcome observed when `θ = 0`.
    pub outcome_given_0: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerfectOptions {
    /// Largest block-route sequence considered.
    pub length_cap: usize,
    /// Largest searched length.
    pub search_cap: usize,
    pub seed: u64,
    pub use_search: bool,
    pub use_blocks: bool,
    /// Extra blocks tried beyond `⌈π/(2β)⌉`.
    pub extra_blocks: usize,
}

impl Default for PerfectOptions {
    fn default() -> Self {
        Self {
            length_cap: 1_000_000,
            search_cap: 64,
            seed: 0,
            use_search: true,
            use_blocks: true,
            extra_blocks: 4,
        }
    }
}

/// Accept a sequence when the summed squared wrong-outcome amplitudes fall below this.
const PERFECT_RESIDUAL: f64 = 1e-24;
/// Optimized losses below this are handed to the polish.
const POLISH_GATE: f64 = 1e-3;

/// Wrong-outcome amplitudes for hidden basis states `|0⟩, |1⟩` at both angles.
fn wrong_amplitudes(seq: &PhaseSequence, alpha: f64, outcome_given_0: usize) -> Vec<f64> {
    let compiled = CompiledSequence::new(seq);
    let mut r = Vec::with_capacity(16);
    for (theta, wrong) in [(0.0, 1 - outcome_given_0), (alpha, outcome_given_0)] {
        let chan = (theta.cos(), theta.sin());
        for h in 0..2 {
            let mut hv = [C64::new(0.0, 0.0); 2];
            hv[h] = C64::new(1.0, 0.0);
            let s = compiled.propagate(chan, &hv);
            for amp in [s[wrong], s[2 + wrong]] {
                r.push(amp.re);
                r.push(amp.im);
            }
        }
    }
    r
}

fn residual_cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn count_bound(j: u32, beta: f64) -> Option<usize> {
    (beta.abs() > 1e-12).then(|| j as usize * (TAU / beta.abs()).ceil() as usize)
}

fn finish(
    alpha: f64,
    region: RegionLabel,
    beta: f64,
    construction: Construction,
    seq: PhaseSequence,
    outcome_given_0: usize,
) -> Result<PerfectProtocolResult> {
    let problem = HBCDProblem::mixed(alpha, 0.0)?;
    let dist = CompiledSequence::new(&seq).distribution(&problem);
    Ok(PerfectProtocolResult {
        alpha,
        region,
        beta,
        count_bound: count_bound(region.j, beta),
        query_count: seq.len(),
        construction,
        phase_sequence: seq,
        p1_given_0: dist.p1_given_0,
        p1_given_alpha: dist.p1_given_alpha,
        outcome_given_0: outcome_given_0 as u8,
    })
}

/// Sequence of `n` diagonalizing blocks in which each effective query is
/// `j − 1` bare channel uses followed by one query with phase `ψ̃`.
fn block_sequence(j: u32, psi: f64, n: usize, params: &[f64]) -> PhaseSequence {
    let per_query = 4 * j as usize;
    let mut phis = Vec::with_capacity(n * per_query);
    let mut psis = Vec::with_capacity(n * per_query);
    for b in 0..n {
        for q in 0..4 {
            for _ in 1..j {
                phis.push(0.0);
                psis.push(0.0);
            }
            phis.push(if q == 3 { params[1 + b] } else { 0.0 });
            psis.push(psi);
        }
    }
    if j == 1 {
        PhaseSequence::shared(params[0], phis, psi)
    } else {
        PhaseSequence::per_query(params[0], phis, psis).expect("lengths agree")
    }
}

/// Block construction; x-phases after every block are refined to zero residual.
pub fn perfect_protocol_blocks(alpha: f64, opts: &PerfectOptions) -> Result<PerfectProtocolResult> {
    let region = region_of(alpha)?;
    let reduced = reduce_angle(alpha * region.j as f64);
    let block = diagonalizing_psi(reduced)?;
    let beta = block.beta;
    if beta.abs() < 1e-12 {
        return Err(Error::SequenceTooLong { cap: opts.length_cap });
    }
    let n0 = (PI / (2.0 * beta.abs()) - 1e-9).ceil().max(1.0) as usize;
    if 4 * region.j as usize * n0 > opts.length_cap {
        return Err(Error::SequenceTooLong { cap: opts.length_cap });
    }
    for n in n0..=n0 + opts.extra_blocks {
        if 4 * region.j as usize * n > opts.length_cap {
            break;
        }
        let mut x0 = vec![0.0; n + 1];
        x0[0] = FRAC_PI_4;
        x0[n] = FRAC_PI_4;
        for label in [1, 0] {
            let f = |x: &[f64]| wrong_amplitudes(&block_sequence(region.j, block.psi, n, x), alpha, label);
            let out = levenberg_marquardt(f, &x0, &LmOptions::default());
            if out.cost < PERFECT_RESIDUAL {
                let seq = block_sequence(region.j, block.psi, n, &out.x);
                return finish(alpha, region, beta, Construction::Blocks, seq, label);
            }
        }
    }
    Err(Error::NotFound { cap: 4 * region.j as usize * (n0 + opts.extra_blocks) })
}

/// Optimized construction: lengths from `⌈1/√(2(1 − cos α))⌉` upward, each
/// restart polished when its loss is small.
pub fn perfect_protocol_searched(alpha: f64, opts: &PerfectOptions) -> Result<PerfectProtocolResult> {
    let region = region_of(alpha)?;
    let beta = diagonalizing_psi(reduce_angle(alpha * region.j as f64)).map_or(0.0, |b| b.beta);
    let bound = count_bound(region.j, beta).unwrap_or(usize::MAX);
    let lo = (lower_bound_queries(alpha).ceil() as usize).max(1);
    let hi = opts.search_cap.min(bound);
    let problem = HBCDProblem::mixed(alpha, 0.0)?;
    let cfg = OptimizerConfig {
        seed: opts.seed,
        target_loss: Some(1e-10),
        ..Default::default()
    };
    for k in lo..=hi {
        for r in 0..cfg.n_reps {
            let (seq, loss, _) = run_restart(k, r, &problem, &cfg);
            if loss > POLISH_GATE {
                continue;
            }
            let label = 0;
            let f = |x: &[f64]| {
                let s = PhaseSequence::from_params(k, true, x).expect("parameter count fixed");
                wrong_amplitudes(&s, alpha, label)
            };
            let out = levenberg_marquardt(f, &seq.to_params(), &LmOptions::default());
            if out.cost < PERFECT_RESIDUAL {
                let seq = PhaseSequence::from_params(k, true, &out.x)?;
                // angle reduction perturbs the residual only at rounding level
                if residual_cost(&wrong_amplitudes(&seq, alpha, label)) < 1e-20 {
                    return finish(alpha, region, beta, Construction::Searched, seq, label);
                }
            }
        }
    }
    Err(Error::NotFound { cap: hi })
}

/// Zero-error protocol for `α`.
///
/// The optimized construction is tried first; the block construction is the
/// fallback.
pub fn perfect_protocol(alpha: f64) -> Result<PerfectProtocolResult> {
    perfect_protocol_with(alpha, &PerfectOptions::default())
}

pub fn perfect_protocol_with(alpha: f64, opts: &PerfectOptions) -> Result<PerfectProtocolResult> {
    if !(alpha > 0.0 && alpha < TAU) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} outside (0, 2π)")));
    }
    let mut last = Error::Infeasible("no construction enabled".into());
    if opts.use_search {
        match perfect_protocol_searched(alpha, opts) {
            Ok(r) => return Ok(r),
            Err(e) => last = e,
        }
    }
    if opts.use_blocks {
        match perfect_protocol_blocks(alpha, opts) {
            Ok(r) => return Ok(r),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// `1/√(2(1 − cos α))`: fewer sequential queries cannot discriminate perfectly.
pub fn lower_bound_queries(alpha: f64) -> f64 {
    1.0 / (2.0 * (1.0 - alpha.cos())).sqrt()
}

/// Order-of-magnitude shot count `ln(1/(4ε))/(4α²)` (constant factor 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqlReference {
    pub value: f64,
    /// Set when `ε ≥ 1/4`, where the logarithm is not positive; `value` is then 0.
    pub degenerate: bool,
}

pub fn sql_shot_bound(epsilon: f64, alpha: f64) -> Result<SqlReference> {
    if !(epsilon > 0.0 && epsilon < 0.5) || !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon = {epsilon}, alpha = {alpha}")));
    }
    let log = (1.0 / (4.0 * epsilon)).ln();
    Ok(if log <= 0.0 {
        SqlReference { value: 0.0, degenerate: true }
    } else {
        SqlReference {
            value: log / (4.0 * alpha * alpha),
            degenerate: false,
        }
    })
}

/// `min_η |⟨η|U₁†U₂|η⟩|` from the eigenphase arc of `U₁†U₂`.
pub fn distance_d(u1: &ComplexMatrix, u2: &ComplexMatrix) -> Result<f64> {
    if u1.dim() != u2.dim() {
        return Err(Error::DimensionMismatch {
            expected: u1.dim(),
            actual: u2.dim(),
        });
    }
    for u in [u1, u2] {
        let defect = u.unitarity_defect();
        if defect > 1e-10 {
            return Err(Error::NotUnitary(defect));
        }
    }
    let w = &u1.adjoint() * u2;
    let mut phases: Vec<f64> = normal_eigenvalues(&w).iter().map(|z| z.arg()).collect();
    phases.sort_by(f64::total_cmp);
    let n = phases.len();
    let mut max_gap = phases[0] + TAU - phases[n - 1];
    for w in phases.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    let spread = TAU - max_gap;
    Ok(if spread >= PI { 0.0 } else { (spread / 2.0).cos() })
}

/// Minimum error `(1 − √(1 − v²))/2` for two pure states with overlap `v`.
pub fn helstrom_single_shot(v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidInput(format!("overlap {v} outside [0, 1]")));
    }
    Ok(0.5 * (1.0 - (1.0 - v * v).sqrt()))
}

/// Per-query implementation errors for the two hypotheses, plus the noiseless overlap `γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub eta1: f64,
    pub eta2: f64,
    pub gamma: f64,
}

impl NoiseModel {
    pub fn new(eta1: f64, eta2: f64, gamma: f64) -> Result<Self> {
        if !(eta1 >= 0.0 && eta2 >= 0.0 && (0.0..=1.0).contains(&gamma)) {
            return Err(Error::InvalidInput(format!("eta1 = {eta1}, eta2 = {eta2}, gamma = {gamma}")));
        }
        Ok(Self { eta1, eta2, gamma })
    }

    /// Both errors set to `η = √P_se(C)`.
    pub fn from_cooperativity(c_qed: f64, gamma: f64) -> Result<Self> {
        let eta = query_error(c_qed)?;
        Self::new(eta, eta, gamma)
    }
}

/// `(1 − √(1 − s²))/2` with `s = N²η₁η₂ + Nη₁ + Nη₂ + γ`, saturating at `1/2` once `s ≥ 1`.
pub fn noisy_error_bound(n: usize, noise: &NoiseModel) -> f64 {
    let nf = n as f64;
    let s = nf * nf * noise.eta1 * noise.eta2 + nf * noise.eta2 + nf * noise.eta1 + noise.gamma;
    if s < 1.0 {
        0.5 * (1.0 - (1.0 - s * s).sqrt())
    } else {
        0.5
    }
}

/// Averaged spontaneous-emission probability `1/(4 + 2C)`.
pub fn spontaneous_emission(c_qed: f64) -> Result<f64> {
    if !(c_qed >= 0.0) {
        return Err(Error::InvalidInput(format!("cooperativity {c_qed} < 0")));
    }
    Ok(1.0 / (4.0 + 2.0 * c_qed))
}

/// Per-query error `η = √P_se(C)`.
pub fn query_error(c_qed: f64) -> Result<f64> {
    spontaneous_emission(c_qed).map(f64::sqrt)
}

/// `P_D = 1 − 2·noisy_error_bound` at cooperativity `C`.
pub fn detection_probability(n: usize, c_qed: f64, gamma: f64) -> Result<f64> {
    let noise = NoiseModel::from_cooperativity(c_qed, gamma)?;
    Ok(1.0 - 2.0 * noisy_error_bound(n, &noise))
}

/// Smallest cooperativity with `P_D ≥ target`, by bisection to relative `1e-6`.
pub fn required_cooperativity(n: usize, p_d_target: f64, gamma: f64) -> Result<f64> {
    if !(p_d_target > 0.0 && p_d_target < 1.0) {
        return Err(Error::InvalidInput(format!("target {p_d_target} outside (0, 1)")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidInput(format!("gamma = {gamma} outside [0, 1]")));
    }
    // C → ∞ leaves only γ
    let ceiling = 1.0 - 2.0 * noisy_error_bound(n, &NoiseModel::new(0.0, 0.0, gamma)?);
    if ceiling < p_d_target {
        return Err(Error::Infeasible(format!(
            "P_D cannot exceed {ceiling} at gamma = {gamma}"
        )));
    }
    let reaches = |c: f64| detection_probability(n, c, gamma).map(|p| p >= p_d_target);
    if reaches(0.0)? {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while !reaches(hi)? {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Infeasible("target not reached at any finite cooperativity".into()));
        }
    }
    let mut lo = hi / 2.0;
    if hi == 1.0 {
        lo = 0.0;
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if reaches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
