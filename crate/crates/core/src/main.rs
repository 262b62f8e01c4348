use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use locreg::config::{validate_config, ConfigError, ExperimentConfig, ExperimentKind};
use locreg::experiment::{load_config, run_experiment};

#[derive(Parser)]
#[command(name = "locreg", version, about = "Simulate and analyse locally regulated spatial populations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration (or the manifest of an earlier run)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for replicate runs
    #[arg(long, value_name = "INT")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Individual-based simulation
    SimulateIbm(Common),
    /// Lookdown simulation with genealogy
    SimulateLookdown(Common),
    /// Deterministic limiting equation
    SolvePde(Common),
    /// Lineage position relative to a travelling front (or the identifiability demo)
    Lineage(Common),
    /// Linear stability of the homogeneous equilibrium
    Stability(Common),
    /// Nonlocal-to-local kernel-width sweep
    Sweep(Common),
    /// Report configuration errors and advisories
    Validate(Common),
}

fn load(common: &Common, default: ExperimentKind, allowed: &[ExperimentKind]) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    match cfg.experiment {
        None => cfg.experiment = Some(default),
        Some(k) if allowed.is_empty() || allowed.contains(&k) => {}
        Some(k) => {
            return Err(ConfigError(vec![format!("experiment {:?} does not match subcommand (expected {})", k.name(), default.name())]))
        }
    }
    if let Some(s) = common.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    use ExperimentKind as K;
    let (common, default, allowed): (&Common, K, &[K]) = match &cli.command {
        Command::SimulateIbm(c) => (c, K::Ibm, &[K::Ibm]),
        Command::SimulateLookdown(c) => (c, K::Lookdown, &[K::Lookdown]),
        Command::SolvePde(c) => (c, K::Pde, &[K::Pde]),
        Command::Lineage(c) => (c, K::Lineage, &[K::Lineage, K::Identifiability]),
        Command::Stability(c) => (c, K::Stability, &[K::Stability]),
        Command::Sweep(c) => (c, K::ConvergenceSweep, &[K::ConvergenceSweep]),
        Command::Validate(c) => (c, K::Ibm, &[]),
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: could not size thread pool: {e}");
        }
    }
    let cfg = match load(common, default, allowed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if matches!(cli.command, Command::Validate(_)) {
        let report = validate_config(&cfg);
        println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
        return ExitCode::from(if report.ok() { 0 } else { 2 });
    }
    match run_experiment(&cfg) {
        Ok(summary) => {
            for a in &summary.advisories {
                eprintln!("advisory [{}]: {}", a.code, a.message);
            }
            println!("wrote {} files to {}", summary.artifacts.len(), summary.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
