//! Decision rules and exact error probabilities over the binomial sufficient statistic.

use serde::{Deserialize, Serialize};

use crate::protocols::OutcomeDistribution;
use crate::{Error, Result};

/// `m` shots of which `y1` returned 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    m: usize,
    y1: usize,
}

impl ShotRecord {
    pub fn new(m: usize, y1: usize) -> Result<Self> {
        if y1 > m {
            return Err(Error::InvalidInput(format!("Y1 = {y1} exceeds m = {m}")));
        }
        Ok(Self { m, y1 })
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        Self {
            m: bits.len(),
            y1: bits.iter().filter(|&&b| b != 0).count(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn y1(&self) -> usize {
        self.y1
    }

    pub fn y0(&self) -> usize {
        self.m - self.y1
    }
}

/// A vertex of the operating characteristic. `eta` may be `+∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub eta: f64,
    pub p_f: f64,
    pub p_d: f64,
}

/// Resolution of `Λ = η`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieRule {
    #[default]
    ToZero,
    ToAlpha,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Zero,
    Alpha,
}

impl Decision {
    pub fn estimate(self, alpha: f64) -> f64 {
        match self {
            Decision::Zero => 0.0,
            Decision::Alpha => alpha,
        }
    }
}

/// `α` if strictly more than half the shots returned 1, else `0`.
pub fn majority_vote(record: &ShotRecord, alpha: f64) -> f64 {
    if 2 * record.y1 > record.m {
        alpha
    } else {
        0.0
    }
}

fn check_dist(dist: &OutcomeDistribution) -> Result<()> {
    for p in [dist.p1_given_0, dist.p1_given_alpha] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!("probability {p} outside [0, 1]")));
        }
    }
    Ok(())
}

/// `count · ln(num / den)` on the extended reals, with `0 · ln(·) = 0`.
fn weighted_log_ratio(count: usize, num: f64, den: f64) -> f64 {
    if count == 0 || num == den {
        return 0.0;
    }
    let c = count as f64;
    match (num == 0.0, den == 0.0) {
        (true, _) => f64::NEG_INFINITY,
        (_, true) => f64::INFINITY,
        _ => c * (num.ln() - den.ln()),
    }
}

/// `ln Λ = Y1 ln(p1α/p10) + Y0 ln((1−p1α)/(1−p10))` on the extended reals.
///
/// Records impossible under both hypotheses get `ln Λ = 0`.
pub fn log_likelihood_ratio(record: &ShotRecord, dist: &OutcomeDistribution) -> Result<f64> {
    check_dist(dist)?;
    let (p0, pa) = (dist.p1_given_0, dist.p1_given_alpha);
    let l = weighted_log_ratio(record.y1, pa, p0) + weighted_log_ratio(record.y0(), 1.0 - pa, 1.0 - p0);
    Ok(if l.is_nan() { 0.0 } else { l })
}

fn decide_from_llr(llr: f64, ln_eta: f64, tie: TieRule) -> Decision {
    if llr > ln_eta || (llr == ln_eta && tie == TieRule::ToAlpha) {
        Decision::Alpha
    } else {
        Decision::Zero
    }
}

fn ln_threshold(eta: f64) -> Result<f64> {
    if eta.is_nan() || eta < 0.0 {
        return Err(Error::InvalidInput(format!("threshold eta = {eta}")));
    }
    Ok(eta.ln())
}

/// Likelihood-ratio test with threshold `η` and ties sent to `0`.
pub fn lrt_decide(record: &ShotRecord, dist: &OutcomeDistribution, eta: f64) -> Result<Decision> {
    lrt_decide_with(record, dist, eta, TieRule::default())
}

pub fn lrt_decide_with(
    record: &ShotRecord,
    dist: &OutcomeDistribution,
    eta: f64,
    tie: TieRule,
) -> Result<Decision> {
    let ln_eta = ln_threshold(eta)?;
    Ok(decide_from_llr(log_likelihood_ratio(record, dist)?, ln_eta, tie))
}

/// Largest shot count whose pmf is evaluated by direct products.
const DIRECT_PMF_MAX: usize = 30;

/// `P(Y1 = k)` for `k = 0..=m`; direct products for small `m`, log space beyond.
pub fn binomial_pmf(m: usize, p: f64) -> Vec<f64> {
    if p <= 0.0 {
        let mut v = vec![0.0; m + 1];
        v[0] = 1.0;
        return v;
    }
    if p >= 1.0 {
        let mut v = vec![0.0; m + 1];
        v[m] = 1.0;
        return v;
    }
    if m <= DIRECT_PMF_MAX {
        // exact binomial coefficients; keeps `m = 1` equal to `[1 − p, p]` bit for bit
        let mut choose = 1.0;
        return (0..=m)
            .map(|k| {
                if k > 0 {
                    choose = choose * (m - k + 1) as f64 / k as f64;
                }
                choose * p.powi(k as i32) * (1.0 - p).powi((m - k) as i32)
            })
            .collect();
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut ln_choose = 0.0;
    (0..=m)
        .map(|k| {
            if k > 0 {
                ln_choose += ((m - k + 1) as f64).ln() - (k as f64).ln();
            }
            (ln_choose + k as f64 * lp + (m - k) as f64 * lq).exp()
        })
        .collect()
}

/// Exact Bayes error under a uniform prior:
/// `½[P(decide α | θ=0) + P(decide 0 | θ=α)]`.
pub fn exact_error_prob(m: usize, dist: &OutcomeDistribution, eta: f64) -> Result<f64> {
    exact_error_prob_with(m, dist, eta, TieRule::default())
}

pub fn exact_error_prob_with(m: usize, dist: &OutcomeDistribution, eta: f64, tie: TieRule) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidInput("m must be at least 1".into()));
    }
    check_dist(dist)?;
    let ln_eta = ln_threshold(eta)?;
    let pmf0 = binomial_pmf(m, dist.p1_given_0);
    let pmfa = binomial_pmf(m, dist.p1_given_alpha);
    let (mut false_alarm, mut miss) = (0.0, 0.0);
    for y1 in 0..=m {
        let rec = ShotRecord { m, y1 };
        match decide_from_llr(log_likelihood_ratio(&rec, dist)?, ln_eta, tie) {
            Decision::Alpha => false_alarm += pmf0[y1],
            Decision::Zero => miss += pmfa[y1],
        }
    }
    Ok(0.5 * (false_alarm + miss))
}

/// Smallest `m ≤ m_cap` with `exact_error_prob(m, dist, 1) ≤ ε`.
///
/// The Bayes error of the maximum-likelihood rule is non-increasing in `m`,
/// so the search gallops and then bisects.
pub fn min_shots(epsilon: f64, dist: &OutcomeDistribution, m_cap: usize) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidInput(format!("epsilon = {epsilon} outside (0, 0.5)")));
    }
    check_dist(dist)?;
    if dist.p1_given_0 == dist.p1_given_alpha {
        return Err(Error::Infeasible("outcome distributions are identical".into()));
    }
    if m_cap == 0 {
        return Err(Error::NotFound { cap: 0 });
    }
    let ok = |m: usize| exact_error_prob(m, dist, 1.0).map(|e| e <= epsilon);
    let mut lo = 0;
    let mut hi = 1;
    loop {
        if ok(hi)? {
            break;
        }
        if hi == m_cap {
            return Err(Error::NotFound { cap: m_cap });
        }
        lo = hi;
        hi = (hi * 2).min(m_cap);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The `m + 2` deterministic operating points of the likelihood-ratio test.
///
/// Outcomes `Y1` are admitted to the "decide α" region in order of decreasing
/// likelihood ratio; each prefix is one vertex. The first vertex has `η = +∞`,
/// later ones carry the ratio of the last admitted outcome.
pub fn qdoc_points(m: usize, dist: &OutcomeDistribution) -> Result<Vec<OperatingPoint>> {
    if m == 0 {
        return Err(Error::InvalidInput("m must be at least 1".into()));
    }
    check_dist(dist)?;
    let pmf0 = binomial_pmf(m, dist.p1_given_0);
    let pmfa = binomial_pmf(m, dist.p1_given_alpha);
    let mut order: Vec<(usize, f64)> = (0..=m)
        .map(|y1| Ok((y1, log_likelihood_ratio(&ShotRecord { m, y1 }, dist)?)))
        .collect::<Result<_>>()?;
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.cmp(&a.0)));

    let mut points = Vec::with_capacity(m + 2);
    points.push(OperatingPoint {
        eta: f64::INFINITY,
        p_f: 0.0,
        p_d: 0.0,
    });
    let (mut pf, mut pd) = (0.0f64, 0.0f64);
    for (i, &(y1, llr)) in order.iter().enumerate() {
        pf += pmf0[y1];
        pd += pmfa[y1];
        let last = i == m;
        points.push(OperatingPoint {
            eta: llr.exp(),
            p_f: if last { 1.0 } else { pf.min(1.0) },
            p_d: if last { 1.0 } else { pd.min(1.0) },
        });
    }
    Ok(points)
}

/// Smallest `L` with `1 − (1 − ε)^L ≥ p_conf`.
pub fn trials_needed(epsilon: f64, p_conf: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidInput(format!("epsilon = {epsilon} outside (0, 0.5)")));
    }
    if !(p_conf > 0.5 && p_conf < 1.0) {
        return Err(Error::InvalidInput(format!("p_conf = {p_conf} outside (0.5, 1)")));
    }
    let reached = |l: usize| 1.0 - (1.0 - epsilon).powi(l as i32) >= p_conf;
    let mut l = ((1.0 - p_conf).ln() / (1.0 - epsilon).ln()).ceil().max(1.0) as usize;
    while l > 1 && reached(l - 1) {
        l -= 1;
    }
    while !reached(l) {
        l += 1;
    }
    Ok(l)
}
