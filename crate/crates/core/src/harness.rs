//! Experiment drivers: scaling sweeps with slope fits, QDOC curves, fixed-budget
//! comparisons, Monte-Carlo shot counts and noise tables.
//!
//! Every sweep point draws from its own derived random stream and results are
//! collected in input order, so tables do not depend on thread scheduling.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    lower_bound_queries, noisy_error_bound, perfect_protocol_with, spontaneous_emission, sql_shot_bound,
    NoiseModel, PerfectOptions, PerfectProtocolResult, SqlReference,
};
use crate::estimators::{
    exact_error_prob, lrt_decide, min_shots, qdoc_points, trials_needed, Decision, OperatingPoint, ShotRecord,
};
use crate::phaseopt::{min_queries_sequential, optimize_phases, InitStrategy, OptimizationResult, OptimizerConfig};
use crate::protocols::{single_shot_distribution, HBCDProblem, OutcomeDistribution, PhaseSequence, ProtocolKind};
use crate::rng::{derive_seed, stream};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Scaling,
    Qdoc,
    FixedBudget,
    #[serde(rename = "mstar")]
    MStar,
    Noise,
    Perfect,
    Bounds,
    Optimize,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Scaling,
        Experiment::Qdoc,
        Experiment::FixedBudget,
        Experiment::MStar,
        Experiment::Noise,
        Experiment::Perfect,
        Experiment::Bounds,
        Experiment::Optimize,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Scaling => "scaling",
            Experiment::Qdoc => "qdoc",
            Experiment::FixedBudget => "fixed-budget",
            Experiment::MStar => "mstar",
            Experiment::Noise => "noise",
            Experiment::Perfect => "perfect",
            Experiment::Bounds => "bounds",
            Experiment::Optimize => "optimize",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.as_str() == name)
    }
}

/// Optimizer knobs exposed to experiments; seeds are derived per task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub n_reps: usize,
    pub max_iterations: usize,
    pub gradient_step: f64,
    pub convergence_tol: f64,
    pub shared_psi: bool,
    pub init: InitStrategy,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            n_reps: d.n_reps,
            max_iterations: d.max_iterations,
            gradient_step: d.gradient_step,
            convergence_tol: d.convergence_tol,
            shared_psi: d.shared_psi,
            init: d.init,
        }
    }
}

impl OptimizerSettings {
    pub fn with_seed(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            n_reps: self.n_reps,
            seed,
            max_iterations: self.max_iterations,
            gradient_step: self.gradient_step,
            convergence_tol: self.convergence_tol,
            shared_psi: self.shared_psi,
            target_loss: None,
            init: self.init,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QdocSettings {
    /// Sequential lengths, one single-shot curve each.
    pub sequential_n: Vec<usize>,
    pub multishot_depth: usize,
    /// Shot counts for the multi-shot curves.
    pub multishot_shots: Vec<usize>,
}

impl Default for QdocSettings {
    fn default() -> Self {
        Self {
            sequential_n: vec![4, 8, 12, 16],
            multishot_depth: 8,
            multishot_shots: vec![1, 2, 4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSettings {
    pub n: usize,
    pub gamma: f64,
    pub c_qed_grid: Vec<f64>,
    /// Append the `C_QED = ∞` (`η = 0`) row.
    pub include_noiseless: bool,
}

impl Default for NoiseSettings {
    fn default() -> Self {
        Self {
            n: 8,
            gamma: 0.0,
            c_qed_grid: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1e3, 2e3, 5e3, 1e4],
            include_noiseless: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Radians, strictly positive, strictly descending.
    pub alpha_grid: Vec<f64>,
    pub epsilon_list: Vec<f64>,
    pub protocol: ProtocolKind,
    /// Query depth `d` for multi-shot runs and the sequence length for `optimize`.
    pub depth: usize,
    pub seed: u64,
    /// Monte-Carlo trials per shot count; derived from `epsilon` and `p_conf` when absent.
    pub trials_l: Option<usize>,
    pub p_conf: f64,
    pub n_cap: usize,
    pub m_cap: usize,
    /// Total query budget for the fixed-budget comparison.
    pub budget: usize,
    pub optimizer: OptimizerSettings,
    pub qdoc: QdocSettings,
    pub noise: NoiseSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_experiment(Experiment::Scaling)
    }
}

/// Seven log-spaced angles from 0.4 down to 0.05.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..7).map(|i| 0.4 * 0.5f64.powf(i as f64 / 2.0)).collect()
}

impl ExperimentConfig {
    /// Defaults tuned for each experiment.
    pub fn for_experiment(experiment: Experiment) -> Self {
        let mut cfg = Self {
            experiment,
            alpha_grid: default_alpha_grid(),
            epsilon_list: vec![0.05],
            protocol: ProtocolKind::Sequential,
            depth: 4,
            seed: 0,
            trials_l: None,
            p_conf: 0.95,
            n_cap: 256,
            m_cap: 1_000_000,
            budget: 16,
            optimizer: OptimizerSettings::default(),
            qdoc: QdocSettings::default(),
            noise: NoiseSettings::default(),
        };
        match experiment {
            Experiment::Scaling => {}
            Experiment::Qdoc | Experiment::FixedBudget => cfg.alpha_grid = vec![0.1],
            Experiment::MStar => {
                cfg.alpha_grid = vec![0.2];
                cfg.protocol = ProtocolKind::MultiShot;
            }
            Experiment::Noise => cfg.alpha_grid = vec![0.25],
            Experiment::Perfect => cfg.alpha_grid = vec![0.7 * PI, FRAC_PI_2, 0.5, 0.2, 0.1],
            Experiment::Bounds => cfg.alpha_grid.insert(0, PI),
            Experiment::Optimize => {
                cfg.alpha_grid = vec![0.1];
                cfg.depth = 16;
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.alpha_grid.is_empty() {
            return bad("alpha_grid: empty".into());
        }
        for (i, &a) in self.alpha_grid.iter().enumerate() {
            if !(a.is_finite() && a > 0.0) {
                return bad(format!("alpha_grid[{i}]: {a} is not a positive angle"));
            }
            if i > 0 && !(a < self.alpha_grid[i - 1]) {
                return bad(format!("alpha_grid[{i}]: grid must be strictly descending"));
            }
        }
        if self.epsilon_list.is_empty() {
            return bad("epsilon_list: empty".into());
        }
        for (i, &e) in self.epsilon_list.iter().enumerate() {
            if !(e > 0.0 && e < 0.5) {
                return bad(format!("epsilon_list[{i}]: {e} outside (0, 0.5)"));
            }
        }
        if self.depth == 0 {
            return bad("depth: must be at least 1".into());
        }
        if self.protocol == ProtocolKind::Parallel
            && matches!(self.experiment, Experiment::Scaling | Experiment::MStar)
        {
            return bad("protocol: parallel is not supported by this experiment".into());
        }
        if self.trials_l == Some(0) {
            return bad("trials_l: must be at least 1".into());
        }
        if !(self.p_conf > 0.5 && self.p_conf < 1.0) {
            return bad(format!("p_conf: {} outside (0.5, 1)", self.p_conf));
        }
        if self.n_cap == 0 || self.m_cap == 0 {
            return bad("n_cap, m_cap: must be at least 1".into());
        }
        if self.budget == 0 {
            return bad("budget: must be at least 1".into());
        }
        if self.qdoc.sequential_n.iter().any(|&n| n == 0) || self.qdoc.multishot_depth == 0 {
            return bad("qdoc: lengths must be at least 1".into());
        }
        if self.qdoc.multishot_shots.iter().any(|&m| m == 0) {
            return bad("qdoc.multishot_shots: shot counts must be at least 1".into());
        }
        if self.noise.n == 0 {
            return bad("noise.n: must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.noise.gamma) {
            return bad(format!("noise.gamma: {} outside [0, 1]", self.noise.gamma));
        }
        if let Some(c) = self.noise.c_qed_grid.iter().find(|c| !(**c >= 0.0)) {
            return bad(format!("noise.c_qed_grid: {c} is negative"));
        }
        self.optimizer.with_seed(0).validate().map_err(|e| match e {
            Error::InvalidInput(m) => Error::InvalidInput(format!("optimizer: {m}")),
            other => other,
        })
    }
}

/// Optimized single-shot protocol of length `k` at angle `alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizedProtocol {
    pub alpha: f64,
    pub k: usize,
    pub result: OptimizationResult,
    pub distribution: OutcomeDistribution,
}

fn optimize_at(alpha: f64, k: usize, settings: &OptimizerSettings, seed: u64) -> Result<OptimizedProtocol> {
    // the loss does not involve ε; any valid value works
    let problem = HBCDProblem::mixed(alpha, 0.25)?;
    let result = optimize_phases(k, &problem, &settings.with_seed(seed))?;
    let distribution = single_shot_distribution(&result.best_phi, &problem);
    Ok(OptimizedProtocol {
        alpha,
        k,
        result,
        distribution,
    })
}

// ---------------------------------------------------------------- scaling

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub alpha: f64,
    pub epsilon: f64,
    pub protocol: ProtocolKind,
    pub d: usize,
    pub m: usize,
    /// Total queries; `None` when the search hit its cap.
    pub n: Option<usize>,
    /// Sequential: optimized loss. Multi-shot: exact LRT error at `m` shots.
    pub achieved: f64,
}

impl ScalingPoint {
    pub fn found(&self) -> bool {
        self.n.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub epsilon: f64,
    pub slope: Option<f64>,
    pub points_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSweep {
    pub points: Vec<ScalingPoint>,
    /// One fit per entry of `epsilon_list`, in order.
    pub fits: Vec<SlopeFit>,
}

impl ScalingSweep {
    /// Slope for the first `ε`.
    pub fn slope(&self) -> Option<f64> {
        self.fits.first().and_then(|f| f.slope)
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two distinct `x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    if logs.len() < 2 {
        return None;
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn scaling_point(cfg: &ExperimentConfig, alpha: f64, epsilon: f64, seed: u64) -> Result<ScalingPoint> {
    let problem = HBCDProblem::mixed(alpha, epsilon)?;
    let flagged = |d, m| ScalingPoint {
        alpha,
        epsilon,
        protocol: cfg.protocol,
        d,
        m,
        n: None,
        achieved: f64::NAN,
    };
    match cfg.protocol {
        ProtocolKind::Sequential => match min_queries_sequential(&problem, &cfg.optimizer.with_seed(seed), cfg.n_cap) {
            Ok(found) => Ok(ScalingPoint {
                alpha,
                epsilon,
                protocol: cfg.protocol,
                d: found.k,
                m: 1,
                n: Some(found.k),
                achieved: found.result.best_loss,
            }),
            Err(Error::NotFound { .. }) => Ok(flagged(cfg.n_cap, 1)),
            Err(e) => Err(e),
        },
        ProtocolKind::MultiShot => {
            let opt = optimize_at(alpha, cfg.depth, &cfg.optimizer, seed)?;
            match min_shots(epsilon, &opt.distribution, cfg.m_cap) {
                Ok(m) => Ok(ScalingPoint {
                    alpha,
                    epsilon,
                    protocol: cfg.protocol,
                    d: cfg.depth,
                    m,
                    n: Some(cfg.depth * m),
                    achieved: exact_error_prob(m, &opt.distribution, 1.0)?,
                }),
                Err(Error::NotFound { .. } | Error::Infeasible(_)) => Ok(flagged(cfg.depth, cfg.m_cap)),
                Err(e) => Err(e),
            }
        }
        ProtocolKind::Parallel => Err(Error::InvalidInput("scaling sweep needs sequential or multishot".into())),
    }
}

/// Minimal query counts over `epsilon_list × alpha_grid` plus a log-log slope per `ε`.
///
/// Points are ordered by `ε` first, then by `α` as given. Points whose search hits
/// a cap are kept with `n = None` and left out of the fit.
pub fn scaling_sweep(cfg: &ExperimentConfig) -> Result<ScalingSweep> {
    cfg.validate()?;
    let tasks: Vec<(f64, f64)> = cfg
        .epsilon_list
        .iter()
        .flat_map(|&e| cfg.alpha_grid.iter().map(move |&a| (a, e)))
        .collect();
    let points = tasks
        .par_iter()
        .enumerate()
        .map(|(i, &(a, e))| scaling_point(cfg, a, e, derive_seed(cfg.seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let fits = cfg
        .epsilon_list
        .iter()
        .map(|&e| {
            let used: Vec<(f64, f64)> = points
                .iter()
                .filter(|p| p.epsilon == e)
                .filter_map(|p| p.n.map(|n| (p.alpha, n as f64)))
                .collect();
            SlopeFit {
                epsilon: e,
                slope: loglog_slope(&used),
                points_used: used.len(),
            }
        })
        .collect();
    Ok(ScalingSweep { points, fits })
}

// ---------------------------------------------------------------- qdoc

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QdocCurve {
    pub alpha: f64,
    pub protocol: ProtocolKind,
    pub d: usize,
    pub m: usize,
    pub loss: f64,
    pub distribution: OutcomeDistribution,
    pub phase_sequence: PhaseSequence,
    pub points: Vec<OperatingPoint>,
}

impl QdocCurve {
    /// Vertices other than `(0, 0)` and `(1, 1)`.
    pub fn interior(&self) -> &[OperatingPoint] {
        let n = self.points.len();
        if n <= 2 {
            &[]
        } else {
            &self.points[1..n - 1]
        }
    }
}

/// Optimize once per `(protocol, d)` and emit one curve per shot count.
fn curves(alpha: f64, groups: &[(ProtocolKind, usize, Vec<usize>)], cfg: &ExperimentConfig) -> Result<Vec<QdocCurve>> {
    let per_group = groups
        .par_iter()
        .enumerate()
        .map(|(i, (kind, d, shots))| {
            let opt = optimize_at(alpha, *d, &cfg.optimizer, derive_seed(cfg.seed, i as u64))?;
            shots
                .iter()
                .map(|&m| {
                    Ok(QdocCurve {
                        alpha,
                        protocol: *kind,
                        d: *d,
                        m,
                        loss: opt.result.best_loss,
                        distribution: opt.distribution,
                        phase_sequence: opt.result.best_phi.clone(),
                        points: qdoc_points(m, &opt.distribution)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_group.into_iter().flatten().collect())
}

/// Sequential single-shot curves for each length in `qdoc.sequential_n`, then
/// multi-shot curves at depth `qdoc.multishot_depth` for each shot count, at the first `α`.
pub fn qdoc_experiment(cfg: &ExperimentConfig) -> Result<Vec<QdocCurve>> {
    cfg.validate()?;
    let mut groups: Vec<(ProtocolKind, usize, Vec<usize>)> = cfg
        .qdoc
        .sequential_n
        .iter()
        .map(|&n| (ProtocolKind::Sequential, n, vec![1]))
        .collect();
    if !cfg.qdoc.multishot_shots.is_empty() {
        groups.push((ProtocolKind::MultiShot, cfg.qdoc.multishot_depth, cfg.qdoc.multishot_shots.clone()));
    }
    curves(cfg.alpha_grid[0], &groups, cfg)
}

/// One sequential curve using the whole budget `N`, then a multi-shot curve for
/// every proper divisor `d` of `N` with `m = N/d` shots, at the first `α`.
pub fn fixed_budget(cfg: &ExperimentConfig) -> Result<Vec<QdocCurve>> {
    cfg.validate()?;
    let n = cfg.budget;
    let mut groups = vec![(ProtocolKind::Sequential, n, vec![1])];
    groups.extend((1..n).filter(|d| n % d == 0).map(|d| (ProtocolKind::MultiShot, d, vec![n / d])));
    curves(cfg.alpha_grid[0], &groups, cfg)
}

// ---------------------------------------------------------------- m*

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MStarResult {
    pub alpha: f64,
    pub epsilon: f64,
    pub d: usize,
    pub l_used: usize,
    pub m_star: usize,
    /// Exact binomial minimum for the same distribution, when it exists below `m_cap`.
    pub m_exact: Option<usize>,
    pub distribution: OutcomeDistribution,
}

/// Whether all `l` simulated `m`-shot experiments are classified correctly.
fn all_trials_succeed(dist: &OutcomeDistribution, m: usize, l: usize, seed: u64) -> Result<bool> {
    let mut rng = stream(seed, m as u64);
    for _ in 0..l {
        let is_alpha: bool = rng.random();
        let p = dist.p1(is_alpha).clamp(0.0, 1.0);
        let y1 = Binomial::new(m as u64, p)
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .sample(&mut rng) as usize;
        let decision = lrt_decide(&ShotRecord::new(m, y1)?, dist, 1.0)?;
        if (decision == Decision::Alpha) != is_alpha {
            return Ok(false);
        }
    }
    Ok(true)
}

/// First `m` at which `l` independent trials (θ drawn uniformly, `m` shots, LRT at `η = 1`) all succeed.
pub fn mstar_for_distribution(dist: &OutcomeDistribution, l: usize, m_cap: usize, seed: u64) -> Result<usize> {
    if l == 0 {
        return Err(Error::InvalidInput("at least one trial per shot count".into()));
    }
    for m in 1..=m_cap {
        if all_trials_succeed(dist, m, l, seed)? {
            return Ok(m);
        }
    }
    Err(Error::NotFound { cap: m_cap })
}

/// Monte-Carlo `m*` for an optimized depth-`d` protocol at the first `(α, ε)`.
pub fn mstar_montecarlo(cfg: &ExperimentConfig) -> Result<MStarResult> {
    cfg.validate()?;
    let alpha = cfg.alpha_grid[0];
    let epsilon = cfg.epsilon_list[0];
    let l = match cfg.trials_l {
        Some(l) => l,
        None => trials_needed(epsilon, cfg.p_conf)?,
    };
    let opt = optimize_at(alpha, cfg.depth, &cfg.optimizer, derive_seed(cfg.seed, 0))?;
    let dist = opt.distribution;
    let m_exact = match min_shots(epsilon, &dist, cfg.m_cap) {
        Ok(m) => Some(m),
        Err(Error::NotFound { .. } | Error::Infeasible(_)) => None,
        Err(e) => return Err(e),
    };
    let m_star = mstar_for_distribution(&dist, l, cfg.m_cap, derive_seed(cfg.seed, 1))?;
    Ok(MStarResult {
        alpha,
        epsilon,
        d: cfg.depth,
        l_used: l,
        m_star,
        m_exact,
        distribution: dist,
    })
}

// ---------------------------------------------------------------- noise

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub c_qed: f64,
    pub p_se: f64,
    pub eta: f64,
    pub p_s_bound: f64,
    pub p_d: f64,
}

/// Error bound and detection probability for each cooperativity in the grid.
pub fn noise_table(cfg: &ExperimentConfig) -> Result<Vec<NoiseRow>> {
    cfg.validate()?;
    let mut grid = cfg.noise.c_qed_grid.clone();
    if cfg.noise.include_noiseless {
        grid.push(f64::INFINITY);
    }
    grid.into_iter()
        .map(|c| {
            let p_se = spontaneous_emission(c)?;
            let noise = NoiseModel::from_cooperativity(c, cfg.noise.gamma)?;
            let p_s = noisy_error_bound(cfg.noise.n, &noise);
            Ok(NoiseRow {
                c_qed: c,
                p_se,
                eta: noise.eta1,
                p_s_bound: p_s,
                p_d: 1.0 - 2.0 * p_s,
            })
        })
        .collect()
}

// ---------------------------------------------------------------- tables

/// Perfect protocols for every `α` in the grid; failures stay in-band.
pub fn perfect_table(cfg: &ExperimentConfig) -> Result<Vec<(f64, Result<PerfectProtocolResult>)>> {
    cfg.validate()?;
    let opts = PerfectOptions {
        seed: cfg.seed,
        ..PerfectOptions::default()
    };
    Ok(cfg
        .alpha_grid
        .par_iter()
        .map(|&a| (a, perfect_protocol_with(a, &opts)))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub alpha: f64,
    pub lower_bound: f64,
    pub sql_reference: SqlReference,
}

/// Query lower bound and shot-count reference for every `α`, at the first `ε`.
pub fn bounds_table(cfg: &ExperimentConfig) -> Result<Vec<BoundsRow>> {
    cfg.validate()?;
    let eps = cfg.epsilon_list[0];
    cfg.alpha_grid
        .iter()
        .map(|&a| {
            Ok(BoundsRow {
                alpha: a,
                lower_bound: lower_bound_queries(a),
                sql_reference: sql_shot_bound(eps, a)?,
            })
        })
        .collect()
}

/// Optimized length-`depth` sequences for every `α` in the grid.
pub fn optimize_table(cfg: &ExperimentConfig) -> Result<Vec<OptimizedProtocol>> {
    cfg.validate()?;
    cfg.alpha_grid
        .par_iter()
        .enumerate()
        .map(|(i, &a)| optimize_at(a, cfg.depth, &cfg.optimizer, derive_seed(cfg.seed, i as u64)))
        .collect()
}
