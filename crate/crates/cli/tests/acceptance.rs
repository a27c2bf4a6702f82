//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test --release -p hbcd-cli --test acceptance`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hbcd_core::analytic::{
    noisy_error_bound, helstrom_single_shot, lower_bound_queries, perfect_protocol, required_cooperativity, NoiseModel,
};
use hbcd_core::estimators::{exact_error_prob_with, lrt_decide_with, trials_needed, Decision, ShotRecord, TieRule};
use hbcd_core::harness::{fixed_budget, qdoc_experiment, scaling_sweep, Experiment, ExperimentConfig, QdocCurve};
use hbcd_core::phaseopt::{min_queries_sequential, OptimizerConfig};
use hbcd_core::protocols::{
    parallel_depth1_invariance, single_shot_distribution, HBCDProblem, OutcomeDistribution, PhaseSequence, ProtocolKind,
};
use hbcd_core::qcore;
use hbcd_core::query::diagonalizing_psi;
use hbcd_core::rng::stream;
use rand::Rng;
use sha2::{Digest, Sha256};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_invariance() -> Verdict {
    let mut rng = stream(1001, 0);
    let mut worst_seq = 0.0f64;
    for _ in 0..1000 {
        let alpha = rng.random::<f64>() * PI + 1e-3;
        let seq = PhaseSequence::shared(rng.random::<f64>() * TAU, vec![rng.random::<f64>() * TAU], rng.random::<f64>() * TAU);
        let d = single_shot_distribution(&seq, &HBCDProblem::mixed(alpha, 0.1).unwrap());
        worst_seq = worst_seq.max(d.gap().abs());
    }
    let mut worst_par = 0.0f64;
    for n in 1..=5 {
        for _ in 0..20 {
            let psis: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
            let phis: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
            let meas = qcore::random::pure_state(1 << n, &mut rng);
            let d = parallel_depth1_invariance(rng.random::<f64>() * PI, &psis, &phis, &meas).map_err(|e| e.to_string())?;
            worst_par = worst_par.max(d);
        }
    }
    check(
        worst_seq < 1e-12 && worst_par < 1e-10,
        format!("max |gap| over 1000 draws = {worst_seq:.2e}; max parallel trace distance (N <= 5) = {worst_par:.2e}"),
    )
}

fn c2_perfect() -> Verdict {
    let mut rng = stream(1002, 0);
    let mut parts = Vec::new();
    let mut ok = true;
    for alpha in [0.1, 0.2, 0.5, FRAC_PI_2, 0.7 * PI] {
        let r = perfect_protocol(alpha).map_err(|e| format!("alpha = {alpha}: {e}"))?;
        let gap = (r.p1_given_alpha - r.p1_given_0).abs();
        let mut dev = 0.0f64;
        for _ in 0..5 {
            let p = HBCDProblem::new(alpha, 0.1, qcore::random::density_matrix(2, &mut rng)).unwrap();
            let d = single_shot_distribution(&r.phase_sequence, &p);
            dev = dev.max((d.p1_given_0 - r.p1_given_0).abs()).max((d.p1_given_alpha - r.p1_given_alpha).abs());
        }
        let within = r.count_bound.is_none_or(|b| r.query_count <= b);
        ok &= gap > 1.0 - 1e-9 && dev < 1e-9 && within;
        parts.push(format!(
            "alpha={alpha:.4}: N={} bound={} gap-1={:.1e} dev={dev:.1e}",
            r.query_count,
            r.count_bound.map_or("inf".into(), |b| b.to_string()),
            gap - 1.0
        ));
    }
    check(ok, parts.join("; "))
}

fn c3_beta() -> Verdict {
    let r1 = diagonalizing_psi(0.1).map_err(|e| e.to_string())?.beta / (2.0 * 0.1 * 0.1);
    let r2 = diagonalizing_psi(0.01).map_err(|e| e.to_string())?.beta / (2.0 * 0.01 * 0.01);
    check(
        (0.99..=1.01).contains(&r1) && (0.999..=1.001).contains(&r2),
        format!("beta/(2 alpha^2) = {r1:.6} at 0.1, {r2:.6} at 0.01"),
    )
}

fn c4_sequential_scaling() -> Verdict {
    let cfg = ExperimentConfig::for_experiment(Experiment::Scaling);
    let sweep = scaling_sweep(&cfg).map_err(|e| e.to_string())?;
    let slope = sweep.slope().ok_or("no slope")?;
    let ns: Vec<String> = sweep.points.iter().map(|p| p.n.map_or("-".into(), |n| n.to_string())).collect();

    let strict = ExperimentConfig {
        epsilon_list: vec![1e-3],
        ..cfg
    };
    let tight = scaling_sweep(&strict).map_err(|e| e.to_string())?;
    let mut envelope_ok = true;
    let mut tight_ns = Vec::new();
    for p in &tight.points {
        let lb = lower_bound_queries(p.alpha).ceil() as usize;
        match p.n {
            Some(n) => {
                envelope_ok &= n >= lb;
                tight_ns.push(format!("{n}>={lb}"));
            }
            None => {
                envelope_ok = false;
                tight_ns.push(format!("-(lb {lb})"));
            }
        }
    }
    check(
        (-1.3..=-0.8).contains(&slope) && sweep.points.iter().all(|p| p.found()) && envelope_ok,
        format!(
            "eps=0.05 N=[{}] slope={slope:.4}; eps=1e-3 N vs envelope [{}]",
            ns.join(","),
            tight_ns.join(",")
        ),
    )
}

fn c5_multishot_scaling() -> Verdict {
    let cfg = ExperimentConfig {
        protocol: ProtocolKind::MultiShot,
        depth: 4,
        epsilon_list: vec![0.025],
        ..ExperimentConfig::for_experiment(Experiment::Scaling)
    };
    let sweep = scaling_sweep(&cfg).map_err(|e| e.to_string())?;
    let slope = sweep.slope().ok_or("no slope")?;
    let ns: Vec<String> = sweep.points.iter().map(|p| p.n.map_or("-".into(), |n| n.to_string())).collect();
    let totals = sweep.points.iter().all(|p| p.n == Some(p.d * p.m));
    check(
        (-2.4..=-1.6).contains(&slope) && totals,
        format!("N = 4 m* = [{}] slope={slope:.4}", ns.join(",")),
    )
}

fn c6_anchor() -> Verdict {
    let p = HBCDProblem::mixed(0.1, 0.05).unwrap();
    let r = min_queries_sequential(&p, &OptimizerConfig::default(), 64).map_err(|e| e.to_string())?;
    check(
        r.k <= 16 && r.result.best_loss <= 0.01,
        format!("N = {}, loss = {:.4e}", r.k, r.result.best_loss),
    )
}

fn string_log_prob(bits: u32, m: usize, p1: f64) -> f64 {
    (0..m).map(|i| if bits >> i & 1 == 1 { p1.ln() } else { (1.0 - p1).ln() }).sum()
}

fn c7_exact_error() -> Verdict {
    let mut rng = stream(1007, 0);
    let mut worst = 0.0f64;
    let mut mismatches = 0usize;
    let mut compared = 0usize;
    for _ in 0..50 {
        let d = OutcomeDistribution::new(rng.random(), rng.random()).unwrap();
        for m in 1..=12usize {
            let mut err = 0.0;
            for bits in 0..(1u32 << m) {
                let la = string_log_prob(bits, m, d.p1_given_alpha);
                let l0 = string_log_prob(bits, m, d.p1_given_0);
                let exhaustive = if la > l0 { Decision::Alpha } else { Decision::Zero };
                let pa: f64 = la.exp();
                let p0: f64 = l0.exp();
                match exhaustive {
                    Decision::Alpha => err += 0.5 * p0,
                    Decision::Zero => err += 0.5 * pa,
                }
                // likelihoods equal up to rounding admit either decision
                if (la - l0).abs() > 1e-9 {
                    let bitsv: Vec<u8> = (0..m).map(|i| (bits >> i & 1) as u8).collect();
                    let ours = lrt_decide_with(&ShotRecord::from_bits(&bitsv), &d, 1.0, TieRule::ToZero).unwrap();
                    compared += 1;
                    mismatches += (ours != exhaustive) as usize;
                }
            }
            let ours = exact_error_prob_with(m, &d, 1.0, TieRule::ToZero).unwrap();
            worst = worst.max((ours - err).abs());
        }
    }
    check(
        worst < 1e-12 && mismatches == 0,
        format!("max |exact - brute| = {worst:.2e}; LRT mismatches {mismatches}/{compared}"),
    )
}

fn c8_trials() -> Verdict {
    let got: Vec<usize> = [0.05, 0.025, 0.005].iter().map(|&e| trials_needed(e, 0.95).unwrap()).collect();
    check(got == [59, 119, 598], format!("L = {got:?}"))
}

fn curve_well_formed(c: &QdocCurve) -> bool {
    let first = c.points[0];
    let last = *c.points.last().unwrap();
    let monotone = c.points.windows(2).all(|w| w[1].p_f >= w[0].p_f && w[1].p_d >= w[0].p_d);
    let single = c.m != 1
        || (c.interior().len() == 1
            && c.interior()[0].p_f == c.distribution.p1_given_0
            && c.interior()[0].p_d == c.distribution.p1_given_alpha);
    monotone && (first.p_f, first.p_d, last.p_f, last.p_d) == (0.0, 0.0, 1.0, 1.0) && single
}

fn c9_qdoc() -> Verdict {
    let q = qdoc_experiment(&ExperimentConfig::for_experiment(Experiment::Qdoc)).map_err(|e| e.to_string())?;
    let fb = fixed_budget(&ExperimentConfig::for_experiment(Experiment::FixedBudget)).map_err(|e| e.to_string())?;
    let shapes = q.iter().chain(&fb).all(curve_well_formed);

    let seq = fb.iter().find(|c| c.protocol == ProtocolKind::Sequential).ok_or("no sequential curve")?;
    let seq_pd = seq.interior()[0].p_d;
    let seq_pf = seq.interior()[0].p_f;
    let mut best_multi = 0.0f64;
    for c in fb.iter().filter(|c| c.protocol == ProtocolKind::MultiShot) {
        for p in c.interior().iter().filter(|p| p.p_f <= 0.05) {
            best_multi = best_multi.max(p.p_d);
        }
    }
    let seq_pds: Vec<String> = q
        .iter()
        .filter(|c| c.protocol == ProtocolKind::Sequential)
        .map(|c| format!("N={}:({:.1e},{:.4})", c.d, c.interior()[0].p_f, c.interior()[0].p_d))
        .collect();
    check(
        shapes && seq_pf <= 0.05 && seq_pd > best_multi,
        format!(
            "{} curves well formed: {shapes}; sequential {}; budget 16: sequential P_D={seq_pd:.4} vs best multi-shot P_D={best_multi:.4} at P_F<=0.05",
            q.len() + fb.len(),
            seq_pds.join(" ")
        ),
    )
}

fn c10_noise() -> Verdict {
    let clamp = noisy_error_bound(8, &NoiseModel::new(0.3, 0.3, 0.0).unwrap()) == 0.5;
    let limit = [0.0, 0.4, 1.0].iter().all(|&g| {
        noisy_error_bound(8, &NoiseModel::new(0.0, 0.0, g).unwrap()) == helstrom_single_shot(g).unwrap()
    });
    let (n, eta) = (8usize, 1e-4);
    let ratio = noisy_error_bound(n, &NoiseModel::new(eta, eta, 0.0).unwrap()) / (n as f64 * eta).powi(2);
    let c = required_cooperativity(8, 0.2, 0.0).map_err(|e| e.to_string())?;
    check(
        clamp && limit && (ratio - 1.0).abs() < 0.05 && (100.0..=400.0).contains(&c),
        format!("clamp {clamp}, gamma limit {limit}, P_s/(N eta)^2 = {ratio:.4}, C_QED(P_D=0.2) = {c:.2}"),
    )
}

fn csv_digests(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "csv") {
            let bytes = std::fs::read(&p).unwrap();
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), hex::encode(Sha256::digest(bytes)));
        }
    }
    out
}

fn c11_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_hbcd");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: &[(&str, &[&str])] = &[
        ("scaling", &["--set", "alpha_grid=0.4,0.2,0.1"]),
        ("scaling", &["--set", "protocol=multishot", "--set", "epsilon_list=0.025"]),
        ("qdoc", &["--set", "qdoc.sequential_n=4,8"]),
        ("fixed-budget", &["--set", "budget=8"]),
        ("mstar", &[]),
        ("noise", &[]),
        ("perfect", &["--set", "alpha_grid=pi/2,0.5"]),
        ("bounds", &[]),
        ("optimize", &["--set", "depth=6"]),
    ];
    let mut files = 0;
    for (i, (sub, extra)) in runs.iter().enumerate() {
        let mut digests = Vec::new();
        for (rep, threads) in ["1", "4"].iter().enumerate() {
            let dir = tmp.path().join(format!("{i}-{rep}"));
            let status = Command::new(bin)
                .arg(sub)
                .args(*extra)
                .args(["--seed", "7", "--out"])
                .arg(&dir)
                .env("HBCD_THREADS", threads)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{sub}: exit {:?}", status.status.code()));
            }
            digests.push(csv_digests(&dir));
        }
        if digests[0].is_empty() || digests[0] != digests[1] {
            return Err(format!("{sub}: outputs differ between repeated runs"));
        }
        files += digests[0].len();
    }
    Ok(format!("{} invocations x 2 (1 and 4 threads): {files} CSV files byte-identical", runs.len()))
}

fn main() {
    let criteria: Vec<(&str, Duration, fn() -> Verdict)> = vec![
        ("depth-1 invariance", Duration::from_secs(10), c1_invariance),
        ("perfect discrimination", Duration::from_secs(60), c2_perfect),
        ("beta asymptotics", Duration::from_secs(1), c3_beta),
        ("sequential Heisenberg scaling", Duration::from_secs(600), c4_sequential_scaling),
        ("multi-shot SQL scaling", Duration::from_secs(300), c5_multishot_scaling),
        ("alpha = 0.1 anchor", Duration::from_secs(60), c6_anchor),
        ("exact-error oracle equivalence", Duration::from_secs(30), c7_exact_error),
        ("trial counts", Duration::from_millis(1), c8_trials),
        ("QDOC suite", Duration::from_secs(300), c9_qdoc),
        ("noise analysis", Duration::from_secs(10), c10_noise),
        ("CLI determinism", Duration::from_secs(60), c11_determinism),
    ];
    let mut passed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = f();
        let elapsed = t.elapsed();
        let in_time = elapsed <= *budget;
        let (ok, detail) = match verdict {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        passed += ok as usize;
        println!(
            "{} [{:>2}] {name}: {detail} ({:.3} s, budget {} s{})",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("{passed}/{} criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
