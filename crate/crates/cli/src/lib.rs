//! Scenario runner behind the `bbspike` binary.
//!
//! A scenario file fixes the domain, a ground truth (explicit curves, a
//! seeded generator, or raw data), the observation template, the noise level
//! and the solver settings. [`run_scenario`] turns it into a result bundle.

pub mod bundle;
pub mod oracle;
pub mod scenario;

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use bbspike_core::{solve, AtomicMeasurePair, MeasureJson};

pub use bundle::{Bundle, Certificates, MeasureFile, Metrics};
pub use oracle::{OracleReport, OracleSuite};
pub use scenario::{parse_json, Prepared, Scenario};

/// Problems with the user's input, reported with exit code 2.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

/// How a successful invocation ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// The solver stopped with the gap above tolerance; outputs were still written.
    NotConverged,
    /// A certificate or oracle comparison failed.
    CheckFailed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::CheckFailed => 1,
            Status::NotConverged => 3,
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bbspike", version, about = "Sparse recovery of moving sources from time-sampled measurements")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scenario and write the result bundle.
    Run(RunArgs),
    /// Check the extremality certificate of every atom in a measure file.
    Certify(CertifyArgs),
    /// Compare the insertion step against brute-force enumeration.
    OracleLmo(OracleArgs),
    /// Print a built-in scenario template.
    MakeScenario(MakeScenarioArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file.
    pub config_path: Option<PathBuf>,
    /// Scenario file (alternative to the positional argument).
    #[arg(long = "config")]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to `bundle-<run_id>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// `measure.json` from a bundle, or a bare measure.
    pub measure: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Suite file.
    pub config_path: Option<PathBuf>,
    #[arg(long = "config")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MakeScenarioArgs {
    /// One of `static`, `crossing`, `generated`.
    pub template: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn pick_config(positional: Option<PathBuf>, flag: Option<PathBuf>) -> Result<PathBuf, ConfigError> {
    match (positional, flag) {
        (Some(a), Some(b)) if a != b => Err(ConfigError::Usage(format!("two config files given: {} and {}", a.display(), b.display()))),
        (Some(p), _) | (None, Some(p)) => Ok(p),
        (None, None) => Err(ConfigError::Usage("a config file is required".into())),
    }
}

/// Caps rayon's worker count from `SOLVER_THREADS`, if set.
pub fn configure_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var("SOLVER_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ConfigError::Invalid { path: "SOLVER_THREADS".into(), message: format!("expected a positive integer, got {raw:?}") })?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

pub fn execute(cli: Cli) -> Result<Status, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run(args) => {
            let path = pick_config(args.config_path, args.config)?;
            let mut scenario = Scenario::load(&path)?;
            if let Some(seed) = args.seed {
                scenario.seed = seed;
            }
            let out = args.out.unwrap_or_else(|| PathBuf::from(format!("bundle-{}", scenario.run_id)));
            let bundle = run_scenario(scenario)?;
            bundle.write(&out)?;
            let m = &bundle.metrics;
            log::info!(
                "{}: p = {}, objective {:.6e}, gap {:.2e}, rmse {} -> {}",
                m.run_id,
                m.p,
                m.objective,
                m.gap,
                m.rmse.map_or("n/a".to_string(), |r| format!("{r:.3e}")),
                out.display()
            );
            if m.converged {
                Ok(Status::Success)
            } else {
                log::warn!("gap {:.3e} above tolerance {:.1e} after {} iterations", m.gap, m.gap_tolerance, m.outer_iterations);
                Ok(Status::NotConverged)
            }
        }
        Command::Certify(args) => {
            let text = std::fs::read_to_string(&args.measure).map_err(|e| ConfigError::Io(format!("{}: {e}", args.measure.display())))?;
            let (run_id, seed, measure) = load_measure(&text)?;
            let report = Certificates::for_measure(&run_id, seed, &measure);
            emit(args.out.as_deref(), &serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?)?;
            Ok(if report.verdict { Status::Success } else { Status::CheckFailed })
        }
        Command::OracleLmo(args) => {
            let path = pick_config(args.config_path, args.config)?;
            let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
            let mut suite: OracleSuite = parse_json(&text)?;
            if let Some(seed) = args.seed {
                suite.seed = seed;
            }
            let report = suite.run()?;
            log::info!("{} instances, max raw gap {:.3e}, max snapped gap {:.3e}", report.instances.len(), report.max_raw_gap, report.max_snapped_gap);
            emit(args.out.as_deref(), &serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?)?;
            Ok(if report.pass { Status::Success } else { Status::CheckFailed })
        }
        Command::MakeScenario(args) => {
            let mut s = scenario::template(&args.template).ok_or_else(|| {
                ConfigError::Usage(format!("unknown template {:?}; choose one of {}", args.template, scenario::TEMPLATE_NAMES.join(", ")))
            })?;
            if let Some(seed) = args.seed {
                s.seed = seed;
            }
            emit(args.out.as_deref(), &serde_json::to_string_pretty(&s).map_err(anyhow::Error::from)?)?;
            Ok(Status::Success)
        }
    }
}

/// Generate the truth, synthesize data, solve, and collect metrics and certificates.
pub fn run_scenario(scenario: Scenario) -> Result<Bundle, CliError> {
    let Prepared { scenario, truth, observation } = scenario.prepare()?;
    log::info!("{}: {} samples, observation dimension {}", scenario.run_id, observation.sample_count(), observation.total_dim());
    let report = solve(&observation, &scenario.domain, &scenario.solver).context("solver failed")?;
    Ok(Bundle::assemble(&scenario.run_id, scenario.seed, &report, truth.as_ref(), &observation, &scenario.domain, scenario.solver.gap_tolerance))
}

/// Reads either a bundle `measure.json` or a bare measure.
pub fn load_measure(text: &str) -> Result<(String, u64, AtomicMeasurePair), ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Schema { path: ".".into(), message: e.to_string() })?;
    let (run_id, seed, json) = if value.get("measure").is_some() {
        let f: MeasureFile = parse_json(text)?;
        (f.run_id, f.seed, f.measure)
    } else {
        let m: MeasureJson = parse_json(text)?;
        ("measure".to_string(), 0, m)
    };
    let measure = AtomicMeasurePair::from_json(&json).map_err(|e| ConfigError::Invalid { path: "measure".into(), message: e.to_string() })?;
    Ok((run_id, seed, measure))
}
