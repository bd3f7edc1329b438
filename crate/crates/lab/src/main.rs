use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use fblab::pipeline::{self, snapshot};
use fblab::scenario::{scenario, NAMES};
use fblab::{ExperimentConfig, Kind, LabError, Result};

#[derive(Parser)]
#[command(name = "fblab", version, about = "Free-boundary experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write the solution and convergence log.
    Minimize(RunArgs),
    /// Solve, then write a diagnostics report for every target.
    Diagnose(RunArgs),
    /// Solve, then write the A± / Φ trace for every target.
    Monotonicity(RunArgs),
    /// Solve, then write blow-up sequences for every target.
    Blowup(RunArgs),
    /// Solve and run every invariant check; exits 2 if any fails.
    Verify(RunArgs),
    /// Show a built-in scenario (lists them when no name is given).
    Scenario {
        name: Option<String>,
        /// Dump the full config JSON.
        #[arg(long)]
        print: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file; repeat to sweep several configs.
    #[arg(long, required_unless_present = "scenario")]
    config: Vec<PathBuf>,
    /// Built-in scenario to run instead of (or as well as) config files.
    #[arg(long)]
    scenario: Vec<String>,
    /// Output directory. With several configs each gets `<out>/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Configs run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Run everything twice and fail unless the artifacts are byte-identical.
    #[arg(long)]
    seed_check: bool,
}

fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>, several: bool) -> PathBuf {
    match out {
        Some(o) if several => o.join(&cfg.name),
        Some(o) => o.to_path_buf(),
        None => match &cfg.output {
            Some(p) => p.clone(),
            None => std::env::var_os("FBLAB_OUT")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("fblab-out"))
                .join(&cfg.name),
        },
    }
}

fn run_one(cfg: &ExperimentConfig, kind: Kind, dir: &Path, seed_check: bool) -> Result<()> {
    let prepared = cfg.prepare()?;
    let first = pipeline::run(&prepared, kind, dir);
    if seed_check {
        let again_dir = dir.join(".seed-check");
        let again = pipeline::run(&prepared, kind, &again_dir);
        let compare = match (&first, &again) {
            (Ok(a), Ok(b)) => Some((snapshot(a)?, snapshot(b)?)),
            _ => None,
        };
        std::fs::remove_dir_all(&again_dir).map_err(|e| LabError::io(&again_dir, e))?;
        if let Some((a, b)) = compare {
            if a.len() != b.len() {
                return Err(LabError::Nondeterministic(format!("{} vs {} files", a.len(), b.len())));
            }
            for ((pa, ba), (_, bb)) in a.iter().zip(&b) {
                if ba != bb {
                    return Err(LabError::Nondeterministic(pa.display().to_string()));
                }
            }
            log::info!("{}: {} artifacts identical across two runs", cfg.name, a.len());
        }
    }
    let art = first?;
    for f in &art.files {
        println!("{}", f.display());
    }
    art.status()
}

fn run_all(kind: Kind, args: RunArgs) -> Result<()> {
    let mut configs = Vec::new();
    for p in &args.config {
        configs.push(ExperimentConfig::load(p).inspect_err(|e| eprintln!("fblab: {}: {e}", p.display()))?);
    }
    for s in &args.scenario {
        configs.push(scenario(s).inspect_err(|e| eprintln!("fblab: {e}"))?);
    }
    for c in &configs {
        if c.kind != kind {
            log::warn!("{}: config kind {} overridden by subcommand {}", c.name, c.kind.name(), kind.name());
        }
    }
    let several = configs.len() > 1;
    let next = AtomicUsize::new(0);
    let failures: Mutex<Vec<(String, LabError)>> = Mutex::new(Vec::new());
    let jobs = args.jobs.clamp(1, configs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cfg) = configs.get(i) else { break };
                let dir = output_dir(cfg, args.out.as_deref(), several);
                if let Err(e) = run_one(cfg, kind, &dir, args.seed_check) {
                    failures.lock().expect("no panics while held").push((cfg.name.clone(), e));
                }
            });
        }
    });
    let mut failures = failures.into_inner().expect("no panics while held");
    for (name, e) in &failures {
        eprintln!("fblab: {name}: {e}");
    }
    // the most severe failure decides the exit status
    failures.sort_by_key(|(_, e)| e.exit_code());
    match failures.pop() {
        Some((_, e)) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Minimize(a) => run_all(Kind::Minimize, a),
        Command::Diagnose(a) => run_all(Kind::Diagnose, a),
        Command::Monotonicity(a) => run_all(Kind::Monotonicity, a),
        Command::Blowup(a) => run_all(Kind::Blowup, a),
        Command::Verify(a) => run_all(Kind::Verify, a),
        Command::Scenario { name: None, .. } => {
            for n in NAMES {
                println!("{n}");
            }
            Ok(())
        }
        Command::Scenario { name: Some(n), print } => scenario(&n)
            .map(|c| {
                if print {
                    println!("{}", c.to_json());
                } else {
                    println!("{} ({})", c.name, c.kind.name());
                }
            })
            .inspect_err(|e| eprintln!("fblab: {e}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // already reported
        Err(e) => ExitCode::from(e.exit_code() as u8),
    }
}
