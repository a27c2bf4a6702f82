use std::path::{Path, PathBuf};

use hbcd_core::harness::{self, Experiment, ExperimentConfig, QdocCurve};
use hbcd_core::Error;
use serde::Serialize;

use crate::output::{json_bytes, num, opt_int, opt_num, sha256_hex, RunManifest, Table};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Compute(#[from] Error),
}

/// What a run produced, before anything is written.
#[derive(Default)]
struct Products {
    tables: Vec<(String, Table)>,
    json: Vec<(String, Vec<u8>)>,
    incomplete: bool,
    summary: Vec<String>,
}

impl Products {
    fn table(&mut self, name: impl Into<String>, t: Table) {
        self.tables.push((name.into(), t));
    }

    fn json<T: Serialize>(&mut self, name: impl Into<String>, v: &T) {
        self.json.push((name.into(), json_bytes(v)));
    }
}

pub struct RunOutcome {
    pub manifest: RunManifest,
    pub summary: Vec<String>,
    pub out_dir: PathBuf,
}

impl RunOutcome {
    pub fn complete(&self) -> bool {
        self.manifest.status == "ok"
    }
}

fn scaling(cfg: &ExperimentConfig, p: &mut Products) -> Result<(), Error> {
    let sweep = harness::scaling_sweep(cfg)?;
    let mut t = Table::new(&["alpha", "epsilon", "protocol", "d", "m", "N", "achieved"]);
    for pt in &sweep.points {
        t.push(vec![
            num(pt.alpha),
            num(pt.epsilon),
            pt.protocol.as_str().into(),
            pt.d.to_string(),
            pt.m.to_string(),
            opt_int(pt.n),
            num(pt.achieved),
        ]);
        if !pt.found() {
            p.incomplete = true;
            p.summary.push(format!("not found: alpha = {}, epsilon = {} (cap reached)", pt.alpha, pt.epsilon));
        }
    }
    p.table("scaling.csv", t);
    let mut f = Table::new(&["epsilon", "protocol", "slope", "points_used"]);
    for fit in &sweep.fits {
        f.push(vec![
            num(fit.epsilon),
            cfg.protocol.as_str().into(),
            opt_num(fit.slope),
            fit.points_used.to_string(),
        ]);
        p.summary.push(match fit.slope {
            Some(s) => format!("epsilon = {}: log-log slope {s:.4} over {} points", fit.epsilon, fit.points_used),
            None => format!("epsilon = {}: too few points for a slope", fit.epsilon),
        });
    }
    p.table("scaling_fit.csv", f);
    Ok(())
}

fn curve_tables(prefix: &str, curves: &[QdocCurve], p: &mut Products) {
    for c in curves {
        let mut t = Table::new(&["protocol", "d", "m", "eta", "P_F", "P_D"]);
        for pt in &c.points {
            t.push(vec![
                c.protocol.as_str().into(),
                c.d.to_string(),
                c.m.to_string(),
                num(pt.eta),
                num(pt.p_f),
                num(pt.p_d),
            ]);
        }
        p.table(format!("{prefix}_{}_d{}_m{}.csv", c.protocol.as_str(), c.d, c.m), t);
        p.summary.push(format!(
            "{} d = {} m = {}: p1|0 = {:.3e}, p1|alpha = {:.6}",
            c.protocol.as_str(),
            c.d,
            c.m,
            c.distribution.p1_given_0,
            c.distribution.p1_given_alpha
        ));
    }
    p.json(format!("{prefix}_curves.json"), &curves);
}

fn mstar(cfg: &ExperimentConfig, p: &mut Products) -> Result<(), Error> {
    let mut t = Table::new(&["alpha", "epsilon", "d", "L", "m_star", "m_exact", "p1_given_0", "p1_given_alpha"]);
    match harness::mstar_montecarlo(cfg) {
        Ok(r) => {
            t.push(vec![
                num(r.alpha),
                num(r.epsilon),
                r.d.to_string(),
                r.l_used.to_string(),
                r.m_star.to_string(),
                opt_int(r.m_exact),
                num(r.distribution.p1_given_0),
                num(r.distribution.p1_given_alpha),
            ]);
            p.summary.push(format!("m* = {} with L = {} (exact minimum {})", r.m_star, r.l_used, opt_int(r.m_exact)));
        }
        Err(Error::NotFound { cap }) => {
            p.incomplete = true;
            p.summary.push(format!("no shot count up to {cap} passed all trials"));
        }
        Err(e) => return Err(e),
    }
    p.table("mstar.csv", t);
    Ok(())
}

fn noise(cfg: &ExperimentConfig, p: &mut Products) -> Result<(), Error> {
    let mut t = Table::new(&["C_QED", "P_se", "eta", "P_s_bound", "P_D"]);
    for r in harness::noise_table(cfg)? {
        t.push(vec![num(r.c_qed), num(r.p_se), num(r.eta), num(r.p_s_bound), num(r.p_d)]);
    }
    p.table("noise.csv", t);
    Ok(())
}

fn perfect(cfg: &ExperimentConfig, p: &mut Products) -> Result<(), Error> {
    let mut t = Table::new(&["alpha", "j", "beta", "N", "p1_given_0", "p1_given_alpha"]);
    let mut found = Vec::new();
    for (alpha, r) in harness::perfect_table(cfg)? {
        match r {
            Ok(r) => {
                t.push(vec![
                    num(alpha),
                    r.region.j.to_string(),
                    num(r.beta),
                    r.query_count.to_string(),
                    num(r.p1_given_0),
                    num(r.p1_given_alpha),
                ]);
                found.push(r);
            }
            Err(e) => {
                p.incomplete = true;
                p.summary.push(format!("alpha = {alpha}: {e}"));
                t.push(vec![num(alpha), String::new(), String::new(), String::new(), String::new(), String::new()]);
            }
        }
    }
    for r in &found {
        p.summary.push(format!(
            "alpha = {}: N = {} (bound {}), p1|0 = {:.3e}, p1|alpha = {:.12}",
            r.alpha,
            r.query_count,
            r.count_bound.map_or("none".into(), |b| b.to_string()),
            r.p1_given_0,
            r.p1_given_alpha
        ));
    }
    p.table("perfect.csv", t);
    p.json("perfect_protocols.json", &found);
    Ok(())
}

fn bounds(cfg: &ExperimentConfig, p: &mut Products) -> Result<(), Error> {
    let mut t = Table::new(&["alpha", "lower_bound", "sql_reference"]);
    for r in harness::bounds_table(cfg)? {
        t.push(vec![num(r.alpha), num(r.lower_bound), num(r.sql_reference.value)]);
    }
    p.table("bounds.csv", t);
    Ok(())
}

fn optimize(cfg: &ExperimentConfig, p: &mut Products) -> Result<(), Error> {
    let rows = harness::optimize_table(cfg)?;
    let mut t = Table::new(&["alpha", "K", "loss", "p1_given_0", "p1_given_alpha"]);
    for r in &rows {
        t.push(vec![
            num(r.alpha),
            r.k.to_string(),
            num(r.result.best_loss),
            num(r.distribution.p1_given_0),
            num(r.distribution.p1_given_alpha),
        ]);
        p.summary.push(format!("alpha = {}: K = {}, loss = {:.3e}", r.alpha, r.k, r.result.best_loss));
    }
    p.table("optimize.csv", t);
    p.json("optimize_protocols.json", &rows);
    Ok(())
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    std::fs::write(path, bytes).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs one experiment and writes `config.json`, its outputs and `manifest.json` into `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome, RunError> {
    let mut p = Products::default();
    match cfg.experiment {
        Experiment::Scaling => scaling(cfg, &mut p)?,
        Experiment::Qdoc => curve_tables("qdoc", &harness::qdoc_experiment(cfg)?, &mut p),
        Experiment::FixedBudget => curve_tables("fixed_budget", &harness::fixed_budget(cfg)?, &mut p),
        Experiment::MStar => mstar(cfg, &mut p)?,
        Experiment::Noise => noise(cfg, &mut p)?,
        Experiment::Perfect => perfect(cfg, &mut p)?,
        Experiment::Bounds => bounds(cfg, &mut p)?,
        Experiment::Optimize => optimize(cfg, &mut p)?,
    }

    std::fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let config_bytes = json_bytes(cfg);
    write(&out_dir.join("config.json"), &config_bytes)?;
    let mut outputs = Vec::new();
    for (name, table) in &p.tables {
        let path = out_dir.join(name);
        table.write(&path).map_err(|source| RunError::Io { path, source })?;
        outputs.push(name.clone());
    }
    for (name, bytes) in &p.json {
        write(&out_dir.join(name), bytes)?;
        outputs.push(name.clone());
    }
    let manifest = RunManifest {
        subcommand: cfg.experiment.as_str().into(),
        config_digest: sha256_hex(&config_bytes),
        seed: cfg.seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        output_paths: outputs,
        status: if p.incomplete { "incomplete" } else { "ok" }.into(),
    };
    write(&out_dir.join("manifest.json"), &json_bytes(&manifest))?;
    Ok(RunOutcome {
        manifest,
        summary: p.summary,
        out_dir: out_dir.to_path_buf(),
    })
}
