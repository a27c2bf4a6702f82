//! Browser bindings: perfect sequences, operating-characteristic curves and
//! small phase optimizations, each returned as a JSON string.
//!
//! The plain functions are usable natively; the `#[wasm_bindgen]` wrappers only
//! turn their errors into JavaScript exceptions.

use hbcd_core::analytic::{lower_bound_queries, perfect_protocol};
use hbcd_core::estimators::{min_shots, qdoc_points, OperatingPoint};
use hbcd_core::phaseopt::{optimize_phases, OptimizerConfig};
use hbcd_core::protocols::{single_shot_distribution, HBCDProblem, OutcomeDistribution, PhaseSequence};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Longest sequence the page may ask the optimizer for.
pub const MAX_DEMO_LENGTH: usize = 24;
/// Most restarts the page may request.
pub const MAX_DEMO_RESTARTS: usize = 16;

#[derive(Debug, Serialize)]
pub struct PerfectReport {
    pub alpha: f64,
    pub j: u32,
    pub beta: f64,
    pub queries: usize,
    pub count_bound: Option<usize>,
    pub lower_bound: f64,
    pub p1_given_0: f64,
    pub p1_given_alpha: f64,
    pub phases: PhaseSequence,
}

pub fn perfect(alpha: f64) -> Result<PerfectReport, String> {
    let r = perfect_protocol(alpha).map_err(|e| e.to_string())?;
    Ok(PerfectReport {
        alpha,
        j: r.region.j,
        beta: r.beta,
        queries: r.query_count,
        count_bound: r.count_bound,
        lower_bound: lower_bound_queries(alpha),
        p1_given_0: r.p1_given_0,
        p1_given_alpha: r.p1_given_alpha,
        phases: r.phase_sequence,
    })
}

pub fn qdoc(p1_given_0: f64, p1_given_alpha: f64, m: usize) -> Result<Vec<OperatingPoint>, String> {
    let d = OutcomeDistribution::new(p1_given_0, p1_given_alpha).map_err(|e| e.to_string())?;
    if m > 2000 {
        return Err(format!("m = {m} is too many shots for the page"));
    }
    qdoc_points(m, &d).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct OptimizeReport {
    pub alpha: f64,
    pub k: usize,
    pub loss: f64,
    pub p1_given_0: f64,
    pub p1_given_alpha: f64,
    /// Shots of this sequence needed for error 0.05, when reachable.
    pub shots_for_5_percent: Option<usize>,
    pub phases: PhaseSequence,
}

pub fn optimize(alpha: f64, k: usize, restarts: usize, seed: u64) -> Result<OptimizeReport, String> {
    if k == 0 || k > MAX_DEMO_LENGTH {
        return Err(format!("K must be in 1..={MAX_DEMO_LENGTH}"));
    }
    if restarts == 0 || restarts > MAX_DEMO_RESTARTS {
        return Err(format!("restarts must be in 1..={MAX_DEMO_RESTARTS}"));
    }
    let problem = HBCDProblem::mixed(alpha, 0.05).map_err(|e| e.to_string())?;
    let cfg = OptimizerConfig {
        n_reps: restarts,
        seed,
        ..OptimizerConfig::default()
    };
    let r = optimize_phases(k, &problem, &cfg).map_err(|e| e.to_string())?;
    let d = single_shot_distribution(&r.best_phi, &problem);
    Ok(OptimizeReport {
        alpha,
        k,
        loss: r.best_loss,
        p1_given_0: d.p1_given_0,
        p1_given_alpha: d.p1_given_alpha,
        shots_for_5_percent: min_shots(0.05, &d, 100_000).ok(),
        phases: r.best_phi,
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map(|v| serde_json::to_string(&v).expect("serializable"))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = perfectProtocol)]
pub fn perfect_protocol_js(alpha: f64) -> Result<String, JsError> {
    to_json(perfect(alpha))
}

#[wasm_bindgen(js_name = qdocCurve)]
pub fn qdoc_curve_js(p1_given_0: f64, p1_given_alpha: f64, m: usize) -> Result<String, JsError> {
    to_json(qdoc(p1_given_0, p1_given_alpha, m))
}

#[wasm_bindgen(js_name = optimizeSequence)]
pub fn optimize_sequence_js(alpha: f64, k: usize, restarts: usize, seed: u32) -> Result<String, JsError> {
    to_json(optimize(alpha, k, restarts, seed as u64))
}
