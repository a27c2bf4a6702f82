use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hbcd_cli::{parse_config, run, RunError, EXIT_INCOMPLETE, EXIT_OK, EXIT_USAGE};
use hbcd_core::harness::Experiment;

#[derive(Parser)]
#[command(name = "hbcd", version, about = "Hidden binary channel discrimination experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal query counts over an angle grid, with a log-log slope fit.
    Scaling(Common),
    /// Operating-characteristic curves for sequential and multi-shot protocols.
    Qdoc(Common),
    /// Sequential against multi-shot splits of one query budget.
    FixedBudget(Common),
    /// Monte-Carlo shot count against the exact minimum.
    Mstar(Common),
    /// Noisy error bound and detection probability against cooperativity.
    Noise(Common),
    /// Perfect-discrimination sequences.
    Perfect(Common),
    /// Query lower bound and shot-count reference.
    Bounds(Common),
    /// Optimized phase sequences of a fixed length.
    Optimize(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config file; missing keys take the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set epsilon_list=0.05` or `--set optimizer.n_reps=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Master seed (default: HBCD_SEED, else 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "hbcd-out")]
    out: PathBuf,
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Command::Scaling(c) => (Experiment::Scaling, c),
            Command::Qdoc(c) => (Experiment::Qdoc, c),
            Command::FixedBudget(c) => (Experiment::FixedBudget, c),
            Command::Mstar(c) => (Experiment::MStar, c),
            Command::Noise(c) => (Experiment::Noise, c),
            Command::Perfect(c) => (Experiment::Perfect, c),
            Command::Bounds(c) => (Experiment::Bounds, c),
            Command::Optimize(c) => (Experiment::Optimize, c),
        }
    }
}

fn env_number<T: std::str::FromStr>(name: &str) -> Result<Option<T>, String> {
    match std::env::var(name) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| format!("{name}: cannot parse {v:?}")),
        Err(_) => Ok(None),
    }
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = cli.command.split();

    let env_seed = match env_number::<u64>("HBCD_SEED") {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    match env_number::<usize>("HBCD_THREADS") {
        Ok(Some(0)) => return usage_error("HBCD_THREADS: must be at least 1"),
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                return usage_error(e);
            }
        }
        Ok(None) => {}
        Err(e) => return usage_error(e),
    }

    let mut overrides = args.set;
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = match parse_config(experiment, args.config.as_deref(), &overrides, env_seed) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };

    match run(&cfg, &args.out) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for name in &outcome.manifest.output_paths {
                println!("wrote {}", outcome.out_dir.join(name).display());
            }
            println!("wrote {}", outcome.out_dir.join("manifest.json").display());
            ExitCode::from(if outcome.complete() { EXIT_OK } else { EXIT_INCOMPLETE } as u8)
        }
        Err(RunError::Io { path, source }) => usage_error(format!("cannot write {}: {source}", path.display())),
        Err(RunError::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INCOMPLETE as u8)
        }
    }
}
