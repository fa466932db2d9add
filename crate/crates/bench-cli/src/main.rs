use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rsvgd_bench::commands::execute;
use rsvgd_bench::config::{Command, DataSource, KernelChoice, Method, RunConfig};

#[derive(Parser, Debug)]
#[command(version, about = "Stein variational gradient descent benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Bayesian logistic regression: test accuracy along iterations.
    BlrBench(Overrides),
    /// vMF mixture on a hypersphere, tracking the Riemannian Stein discrepancy.
    SphereDemo(Overrides),
    /// vMF mixture on every block of a product of hyperspheres.
    ProductDemo(Overrides),
    /// Standard normal target, reporting sample moments.
    GaussianSanity(Overrides),
}

#[derive(Args, Debug)]
struct Overrides {
    /// Flat `key=value` file; a previous report also works.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    step: Option<f64>,
    /// median, fixed:H or summed.
    #[arg(long)]
    kernel: Option<KernelChoice>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Sparse `label idx:val` file, or synthetic:ROWSxCOLS.
    #[arg(long)]
    data: Option<DataSource>,
    #[arg(long)]
    split: Option<f64>,
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    cadence: Option<usize>,
    /// Record wall-clock time (reports are then no longer byte-reproducible).
    #[arg(long)]
    timing: bool,
    /// Any other config key, e.g. `--set alpha=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads for the field computation (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// CSV destination; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve(command: Command, o: &Overrides) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::defaults(command);
    if let Some(path) = &o.config {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.apply_text(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    for kv in &o.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
        cfg.set(k.trim(), v.trim()).map_err(|e| e.to_string())?;
    }
    if let Some(v) = o.method {
        cfg.method = v;
    }
    if let Some(v) = o.particles {
        cfg.particles = v;
    }
    if let Some(v) = o.iters {
        cfg.iters = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.step {
        cfg.step = Some(v);
    }
    if let Some(v) = o.kernel {
        cfg.kernel = v;
    }
    if let Some(v) = o.kappa {
        cfg.kappa = v;
    }
    if let Some(v) = &o.data {
        cfg.data = v.clone();
    }
    if let Some(v) = o.split {
        cfg.split = v;
    }
    if o.standardize {
        cfg.standardize = true;
    }
    if let Some(v) = o.cadence {
        cfg.cadence = v;
    }
    if o.timing {
        cfg.timing = true;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, overrides) = match &cli.command {
        Sub::BlrBench(o) => (Command::BlrBench, o),
        Sub::SphereDemo(o) => (Command::SphereDemo, o),
        Sub::ProductDemo(o) => (Command::ProductDemo, o),
        Sub::GaussianSanity(o) => (Command::GaussianSanity, o),
    };
    match run(command, overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command, overrides: &Overrides) -> Result<(), String> {
    let cfg = resolve(command, overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(overrides.threads)
        .build()
        .map_err(|e| e.to_string())?;
    let outcome = pool.install(|| execute(&cfg)).map_err(|e| e.to_string())?;
    let csv = outcome.report.to_csv();
    match &overrides.out {
        Some(path) => fs::write(path, csv).map_err(|e| format!("{}: {e}", path.display()))?,
        None => std::io::stdout().write_all(csv.as_bytes()).map_err(|e| e.to_string())?,
    }
    Ok(())
}
