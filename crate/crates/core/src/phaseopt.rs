//! Phase-sequence optimization.
//!
//! The loss is `R(Φ) = (1 − P(1|α; Φ) + P(1|0; Φ))²`, evaluated from exact
//! outcome probabilities. Each restart runs L-BFGS with Armijo backtracking on
//! central finite-difference gradients, starting from `φ = {π/4, 0, …, 0, π/4}`
//! and `ψ⁰ ~ N(0, 1)`.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::protocols::{CompiledSequence, HBCDProblem, PhaseSequence};
use crate::rng::substream;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub n_reps: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub gradient_step: f64,
    pub convergence_tol: f64,
    /// One `ψ` for all queries (default) or one per query.
    pub shared_psi: bool,
    /// Stop a restart as soon as its loss reaches this value.
    pub target_loss: Option<f64>,
    pub init: InitStrategy,
}

/// Starting points of the restarts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitStrategy {
    /// `φ = {π/4, 0, …, 0, π/4}` and `ψ⁰ ~ N(0, 1)` for every restart.
    Endpoint,
    /// Every angle uniform on `[0, 2π)`.
    Uniform,
    /// Restart 0 as `Endpoint`, the others as `Uniform`.
    Mixed,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            n_reps: 10,
            seed: 0,
            max_iterations: 500,
            gradient_step: 1e-6,
            convergence_tol: 1e-10,
            shared_psi: true,
            target_loss: None,
            init: InitStrategy::Mixed,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_reps == 0 {
            return Err(Error::InvalidInput("n_reps must be at least 1".into()));
        }
        if !(self.gradient_step > 0.0 && self.gradient_step <= 1e-3) {
            return Err(Error::InvalidInput(format!(
                "gradient_step = {} outside (0, 1e-3]",
                self.gradient_step
            )));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidInput("convergence_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_phi: PhaseSequence,
    pub best_loss: f64,
    pub losses_per_restart: Vec<f64>,
    pub iterations: Vec<usize>,
}

/// `(1 − gap)²` with `gap = P(1|α) − P(1|0)`.
pub fn loss(seq: &PhaseSequence, problem: &HBCDProblem) -> f64 {
    let gap = CompiledSequence::new(seq).distribution(problem).gap();
    (1.0 - gap) * (1.0 - gap)
}

struct Objective<'a> {
    problem: &'a HBCDProblem,
    k: usize,
    shared: bool,
    step: f64,
}

impl Objective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let seq = PhaseSequence::from_params(self.k, self.shared, x).expect("parameter count fixed");
        loss(&seq, self.problem)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut xp = x.to_vec();
        (0..x.len())
            .map(|i| {
                xp[i] = x[i] + self.step;
                let up = self.value(&xp);
                xp[i] = x[i] - self.step;
                let down = self.value(&xp);
                xp[i] = x[i];
                (up - down) / (2.0 * self.step)
            })
            .collect()
    }
}

/// Central finite-difference gradient over the free angles (`φ₀, φ₁..φ_K, ψ…`).
pub fn loss_gradient(seq: &PhaseSequence, problem: &HBCDProblem, step: f64) -> Vec<f64> {
    let obj = Objective {
        problem,
        k: seq.len(),
        shared: seq.is_shared(),
        step,
    };
    obj.gradient(&seq.to_params())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const LBFGS_MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;

/// Returns `(x, f(x), iterations)`.
fn lbfgs(obj: &Objective, x0: Vec<f64>, cfg: &OptimizerConfig) -> (Vec<f64>, f64, usize) {
    let target = cfg.target_loss.unwrap_or(f64::NEG_INFINITY);
    let mut x = x0;
    let mut fx = obj.value(&x);
    let mut g = obj.gradient(&x);
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(LBFGS_MEMORY);
    let mut iters = 0;

    while iters < cfg.max_iterations {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < cfg.convergence_tol || fx <= target {
            break;
        }
        iters += 1;

        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = hist.back().map_or(1.0 / gnorm.max(1.0), |(s, y, _)| dot(s, y) / dot(y, y));
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut d: Vec<f64> = q.into_iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hist.clear();
            d = g.iter().map(|v| -v / gnorm.max(1.0)).collect();
            slope = dot(&g, &d);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let fnew = obj.value(&xn);
            if fnew <= fx + ARMIJO_C1 * step * slope {
                accepted = Some((xn, fnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if hist.is_empty() {
                break;
            }
            hist.clear();
            continue;
        };
        let gn = obj.gradient(&xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-18 {
            if hist.len() == LBFGS_MEMORY {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fnew;
        g = gn;
    }
    (x, fx, iters)
}

/// Starting point of restart `r` under `cfg.init`.
fn initial_params(k: usize, r: usize, cfg: &OptimizerConfig) -> Vec<f64> {
    let mut rng = substream(cfg.seed, k as u64, r as u64);
    let n_psi = if cfg.shared_psi { 1 } else { k };
    let endpoint = match cfg.init {
        InitStrategy::Endpoint => true,
        InitStrategy::Uniform => false,
        InitStrategy::Mixed => r == 0,
    };
    if endpoint {
        let mut x = PhaseSequence::initial_guess(k, 0.0).to_params();
        x.pop();
        for _ in 0..n_psi {
            let psi: f64 = rng.sample(StandardNormal);
            x.push(psi);
        }
        x
    } else {
        (0..k + 1 + n_psi).map(|_| rng.random::<f64>() * TAU).collect()
    }
}

pub(crate) fn run_restart(k: usize, r: usize, problem: &HBCDProblem, cfg: &OptimizerConfig) -> (PhaseSequence, f64, usize) {
    let obj = Objective {
        problem,
        k,
        shared: cfg.shared_psi,
        step: cfg.gradient_step,
    };
    let (x, _, iters) = lbfgs(&obj, initial_params(k, r, cfg), cfg);
    let seq = PhaseSequence::from_params(k, cfg.shared_psi, &x).expect("parameter count fixed");
    // re-evaluate on the reduced angles so the reported loss matches `best_phi`
    let l = loss(&seq, problem);
    (seq, l, iters)
}

fn merge(runs: Vec<(PhaseSequence, f64, usize)>) -> OptimizationResult {
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    OptimizationResult {
        best_phi: runs[best].0.clone(),
        best_loss: runs[best].1,
        losses_per_restart: runs.iter().map(|r| r.1).collect(),
        iterations: runs.iter().map(|r| r.2).collect(),
    }
}

/// Best of `n_reps` independent restarts at sequence length `k`.
pub fn optimize_phases(k: usize, problem: &HBCDProblem, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::InvalidInput("K must be at least 1".into()));
    }
    let runs: Vec<_> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|r| run_restart(k, r, problem, cfg))
        .collect();
    Ok(merge(runs))
}

/// Like [`optimize_phases`], but restarts run in order and stop at the first one reaching `target`.
pub fn optimize_phases_until(
    k: usize,
    problem: &HBCDProblem,
    cfg: &OptimizerConfig,
    target: f64,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::InvalidInput("K must be at least 1".into()));
    }
    let cfg = OptimizerConfig {
        target_loss: Some(target),
        ..cfg.clone()
    };
    let mut runs = Vec::new();
    for r in 0..cfg.n_reps {
        let run = run_restart(k, r, problem, &cfg);
        let done = run.1 <= target;
        runs.push(run);
        if done {
            break;
        }
    }
    Ok(merge(runs))
}

/// True when no `K`-query sequential protocol can reach error `ε` for this `α`.
///
/// Any two `K`-query circuits differ in operator norm by at most `K·|e^{iα} − 1|`,
/// so every pure input keeps overlap `v ≥ 1 − (K|e^{iα} − 1|)²/2`; the Helstrom
/// error `(1 − √(1 − v²))/2` then lower-bounds the achievable error.
pub fn provably_insufficient(k: usize, problem: &HBCDProblem) -> bool {
    let c = (2.0 * (1.0 - problem.alpha().cos())).sqrt();
    let kc = k as f64 * c;
    if kc >= 2.0 {
        return false;
    }
    let v = (1.0 - 0.5 * kc * kc).max(0.0);
    let floor = 0.5 * (1.0 - (1.0 - v * v).max(0.0).sqrt());
    floor > problem.epsilon() + 1e-12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinQueries {
    pub k: usize,
    pub result: OptimizationResult,
}

/// Smallest `K ≤ n_cap` whose optimized loss satisfies `R ≤ 4ε²`.
///
/// Lengths ruled out by [`provably_insufficient`] are skipped without optimizing.
pub fn min_queries_sequential(problem: &HBCDProblem, cfg: &OptimizerConfig, n_cap: usize) -> Result<MinQueries> {
    let eps = problem.epsilon();
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidInput(format!("epsilon = {eps} outside (0, 0.5)")));
    }
    let target = 4.0 * eps * eps;
    for k in 1..=n_cap {
        if provably_insufficient(k, problem) {
            continue;
        }
        let result = optimize_phases_until(k, problem, cfg, target)?;
        if result.best_loss <= target {
            return Ok(MinQueries { k, result });
        }
    }
    Err(Error::NotFound { cap: n_cap })
}
