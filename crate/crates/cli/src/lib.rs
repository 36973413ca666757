//! Configuration-driven front end for the paraweight probes.
//!
//! Every subcommand reads a [`RunConfig`], writes its artifacts to the output
//! directory and exits 0 iff its verdict is pass.

pub mod commands;
pub mod config;
pub mod error;
pub mod golden;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use paraweight::carleman::Recipe;
use paraweight::paraproduct::Verdict;

pub use commands::Outcome;
pub use config::{FieldError, RunConfig};
pub use error::CliError;
pub use golden::{compare_golden, DiffReport};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "PARAWEIGHT_THREADS";

/// Exit status of a run whose verdict is fail.
pub const EXIT_FAIL: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "paraweight", version, about = "Numerical probes for modulus weights, paraproducts and Carleman estimates")]
pub struct Cli {
    /// TOML run configuration; defaults apply to every missing key.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Ensemble seed, overriding `ensemble.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Only print failures.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Build the weight, tabulate it and check its ODE.
    Weights,
    /// Dyadic decomposition of `probe.field`.
    Lp,
    /// Positivity threshold and the four paraproduct estimates.
    Para,
    /// Mollification constants over `mollify.nu_min..=nu_max`.
    Mollify,
    /// γ-sweep of the Carleman ratio and the per-block ledgers.
    Carleman,
    /// All of the above into one suite report.
    Verify,
    /// Compare a result directory with a golden one.
    CompareGolden {
        result: PathBuf,
        golden: PathBuf,
        /// Relative tolerance on numeric fields.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    /// The effective configuration, without the output section.
    pub config: Value,
    pub probes: Vec<Outcome>,
    /// Probes not applicable to the configuration, with the reason.
    pub skipped: Vec<(String, String)>,
    pub verdict: Verdict,
}

/// Loads the configuration and applies the command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(CliError::Config)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.ensemble.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn config_value(cfg: &RunConfig) -> Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Value::Object(m) = &mut v {
        m.remove("output");
    }
    v
}

/// Runs every probe the configuration admits; `suite.json` holds the reports
/// and `timing.json` the wall-clock seconds per probe.
pub fn verify(cfg: &RunConfig, out: &Path) -> Result<SuiteResult, CliError> {
    type Step = fn(&RunConfig, &Path) -> Result<Outcome, CliError>;
    let mut steps: Vec<(&str, Step)> = vec![("weights", commands::weights), ("lp", commands::lp)];
    let mut skipped = Vec::new();
    if matches!(cfg.recipe(), Recipe::RoughInTime(_)) {
        skipped.push(("para".to_string(), "time-dependent coefficients".to_string()));
    } else {
        steps.push(("para", commands::para));
    }
    steps.push(("mollify", commands::mollify));
    steps.push(("carleman", commands::carleman));
    let mut probes = Vec::new();
    let mut timing = serde_json::Map::new();
    for (name, step) in steps {
        let start = Instant::now();
        probes.push(step(cfg, out)?);
        timing.insert(name.to_string(), json!(start.elapsed().as_secs_f64()));
    }
    let verdict = Verdict::from_bool(probes.iter().all(|p| p.verdict.passed()));
    let suite = SuiteResult { config: config_value(cfg), probes, skipped, verdict };
    let mut text = serde_json::to_string_pretty(&suite).expect("suite serializes");
    text.push('\n');
    fs::write(out.join("suite.json"), text)?;
    fs::write(out.join("timing.json"), serde_json::to_string_pretty(&Value::Object(timing)).expect("timing") + "\n")?;
    Ok(suite)
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::field(THREADS_ENV, format!("`{v}` is not a positive integer")))?;
    // A second initialisation in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn report_outcome(o: &Outcome, out: &Path, quiet: bool) {
    let path = out.join(format!("{}.json", o.name));
    match o.verdict {
        Verdict::Pass if !quiet => println!("{}: pass ({})", o.name, path.display()),
        Verdict::Pass => {}
        Verdict::Fail => eprintln!("{}: FAIL, see {}", o.name, path.display()),
    }
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    init_threads()?;
    if let Command::CompareGolden { result, golden, tol } = &cli.command {
        let report = compare_golden(result, golden, *tol)?;
        println!("{}", serde_json::to_string_pretty(&report).expect("diff serializes"));
        return Ok(if report.passed() { 0 } else { EXIT_FAIL });
    }
    let cfg = effective_config(cli)?;
    let out = cfg.output.dir.clone();
    fs::create_dir_all(&out)?;
    let ok = match &cli.command {
        Command::Verify => {
            let suite = verify(&cfg, &out)?;
            for p in &suite.probes {
                report_outcome(p, &out, cli.quiet);
            }
            if !cli.quiet {
                println!("suite: {} ({})", if suite.verdict.passed() { "pass" } else { "fail" }, out.join("suite.json").display());
            }
            suite.verdict.passed()
        }
        cmd => {
            let o = match cmd {
                Command::Weights => commands::weights(&cfg, &out)?,
                Command::Lp => commands::lp(&cfg, &out)?,
                Command::Para => commands::para(&cfg, &out)?,
                Command::Mollify => commands::mollify(&cfg, &out)?,
                Command::Carleman => commands::carleman(&cfg, &out)?,
                Command::Verify | Command::CompareGolden { .. } => unreachable!(),
            };
            report_outcome(&o, &out, cli.quiet);
            o.verdict.passed()
        }
    };
    Ok(if ok { 0 } else { EXIT_FAIL })
}

/// Runs the parsed command line and returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
