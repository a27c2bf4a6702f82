mod common;

use std::f64::consts::TAU;

use common::*;
use hbcd_core::protocols::{
    parallel_depth1_distance, parallel_depth1_invariance, single_shot_distribution, HBCDProblem, PhaseSequence,
};
use hbcd_core::qcore::{self, DensityMatrix};
use hbcd_core::rng::stream;
use hbcd_core::C64;
use nalgebra::DMatrix;
use rand::Rng;

#[test]
fn depth_one_sequential_is_blind_to_alpha() {
    let mut rng = stream(31, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let alpha = rng.random::<f64>() * TAU;
        let seq = PhaseSequence::shared(rng.random::<f64>() * TAU, vec![rng.random::<f64>() * TAU], rng.random::<f64>() * TAU);
        let problem = HBCDProblem::mixed(alpha.max(1e-6), 0.1).unwrap();
        let d = single_shot_distribution(&seq, &problem);
        worst = worst.max(d.gap().abs());
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn depth_one_with_pure_hidden_state_is_not_blind() {
    let problem = HBCDProblem::new(0.8, 0.1, DensityMatrix::basis(2, 0)).unwrap();
    let seq = PhaseSequence::shared(0.4, vec![0.3], 0.9);
    assert!(single_shot_distribution(&seq, &problem).gap().abs() > 1e-3);
}

/// Permutation taking the (hidden copies, measurement copies) ordering to the
/// interleaved (h0, m0, h1, m1, ...) ordering.
fn interleave(n: usize) -> DMatrix<C64> {
    let dim = 1 << (2 * n);
    let mut p = DMatrix::zeros(dim, dim);
    for src in 0..dim {
        let h = src >> n;
        let m = src & ((1 << n) - 1);
        let mut dst = 0;
        for copy in 0..n {
            let hb = (h >> (n - 1 - copy)) & 1;
            let mb = (m >> (n - 1 - copy)) & 1;
            dst = (dst << 2) | (hb << 1) | mb;
        }
        p[(dst, src)] = c(1.0, 0.0);
    }
    p
}

fn oracle_distance(alpha: f64, psis: &[f64], phis: &[f64], meas: &[C64], rho_h: &DensityMatrix) -> f64 {
    let n = psis.len();
    let dm = 1 << n;
    let perm = interleave(n);
    let reduced = |theta: f64| {
        let mut u = DMatrix::from_element(1, 1, c(1.0, 0.0));
        let mut rho_hid = DMatrix::from_element(1, 1, c(1.0, 0.0));
        for copy in 0..n {
            u = u.kronecker(&na_query(theta, psis[copy], phis[copy]));
            rho_hid = rho_hid.kronecker(&to_na(rho_h.matrix()));
        }
        let v = DMatrix::from_column_slice(dm, 1, meas);
        let joint = rho_hid.kronecker(&(&v * v.adjoint()));
        let u = perm.transpose() * u * &perm;
        let out = &u * joint * u.adjoint();
        DMatrix::from_fn(dm, dm, |a, b| (0..dm).map(|h| out[(h * dm + a, h * dm + b)]).sum())
    };
    na_trace_distance(&reduced(0.0), &reduced(alpha))
}

#[test]
fn parallel_matches_dense_oracle() {
    let mut rng = stream(32, 0);
    for n in 1..=4 {
        for trial in 0..4 {
            let psis: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
            let phis: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
            let meas = qcore::random::pure_state(1 << n, &mut rng);
            let rho = if trial == 0 {
                DensityMatrix::maximally_mixed(2)
            } else {
                qcore::random::density_matrix(2, &mut rng)
            };
            let alpha = rng.random::<f64>() * 3.0;
            let ours = parallel_depth1_distance(alpha, &psis, &phis, &meas, &rho).unwrap();
            let oracle = oracle_distance(alpha, &psis, &phis, &meas, &rho);
            assert!((ours - oracle).abs() < 1e-10, "n = {n}: {ours} vs {oracle}");
        }
    }
}

#[test]
fn parallel_depth_one_is_blind_up_to_five_copies() {
    let mut rng = stream(33, 0);
    for n in 1..=5 {
        for _ in 0..10 {
            let psis: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
            let phis: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
            let meas = qcore::random::pure_state(1 << n, &mut rng);
            let d = parallel_depth1_invariance(rng.random::<f64>() * TAU, &psis, &phis, &meas).unwrap();
            assert!(d < 1e-10, "n = {n}: {d}");
        }
    }
    assert!(parallel_depth1_invariance(0.3, &[0.0; 6], &[0.0; 6], &vec![c(0.0, 0.0); 64]).is_err());
}
