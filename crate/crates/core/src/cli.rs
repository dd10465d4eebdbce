//! Command-line front end: argument parsing, config resolution, thread pool,
//! manifest and exit codes (0 success, 1 configuration error, 2 failure).

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::output::Manifest;
use crate::{reproduce, runner};

pub const THREADS_ENV: &str = "REL_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "ricci-entropy",
    version,
    about = "Volume entropy along homogeneous Ricci flows"
)]
struct Cli {
    /// Worker threads (falls back to REL_THREADS, then all cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the geometry catalog.
    Catalog(ScenarioArgs),
    /// Integrate the Ricci flow and write trajectory.csv.
    Flow(ScenarioArgs),
    /// Ball volume profile of the initial metric (profile.csv).
    Volume(ScenarioArgs),
    /// Entropy estimates along the flow (entropy.csv).
    Entropy(ScenarioArgs),
    /// Evolution, radial, supersolution, soliton and rescaling tables.
    Audit(ScenarioArgs),
    /// Blow-up classification (classification.jsonl).
    Classify(ScenarioArgs),
    /// Run every acceptance scenario and write the report directory.
    ReproduceAll(ReproduceArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Config file; flags override its entries.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    geometry: Option<String>,
    /// Initial coefficients "A,B,C".
    #[arg(long, value_name = "A,B,C", allow_hyphen_values = true)]
    coeffs: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    curvature_cap: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    coefficient_floor: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    r_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    r_max: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    r_count: Option<String>,
    /// linear or log.
    #[arg(long, allow_hyphen_values = true)]
    spacing: Option<String>,
    /// Rule name or "closed-form".
    #[arg(long, allow_hyphen_values = true)]
    quadrature: Option<String>,
    #[arg(long, value_name = "START,END", allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    window_points: Option<String>,
    #[arg(long, value_name = "T1,T2,...", allow_hyphen_values = true)]
    t_sequence: Option<String>,
    #[arg(long, value_name = "R1,R2,...", allow_hyphen_values = true)]
    radii: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dr: Option<String>,
    #[arg(long, value_name = "L1,L2,L3", allow_hyphen_values = true)]
    lattice: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    horizon: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    exponent_tol: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    #[arg(long, value_name = "DIR", default_value = "acceptance-report")]
    out: PathBuf,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        let flags = [
            (&self.geometry, "scenario", "geometry"),
            (&self.coeffs, "scenario", "initial_coeffs"),
            (&self.t_end, "flow", "t_end"),
            (&self.tol, "flow", "tol"),
            (&self.curvature_cap, "flow", "curvature_cap"),
            (&self.coefficient_floor, "flow", "coefficient_floor"),
            (&self.r_min, "volume", "r_min"),
            (&self.r_max, "volume", "r_max"),
            (&self.r_count, "volume", "r_count"),
            (&self.spacing, "volume", "spacing"),
            (&self.quadrature, "volume", "quadrature"),
            (&self.window, "entropy", "window"),
            (&self.window_points, "entropy", "window_points"),
            (&self.t_sequence, "entropy", "t_sequence"),
            (&self.radii, "audit", "radii"),
            (&self.dr, "audit", "dr"),
            (&self.lattice, "audit", "lattice"),
            (&self.horizon, "classify", "horizon"),
            (&self.exponent_tol, "classify", "exponent_tol"),
            (&self.out, "output", "dir"),
            (&self.seed, "output", "seed"),
        ];
        for (value, section, key) in flags {
            if let Some(v) = value {
                cfg.set(section, key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| {
                Error::Config(format!("{THREADS_ENV}={v:?} is not a thread count"))
            })?),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(Error::Config("thread count must be positive".into()));
    }
    Ok(n)
}

fn exit_code(err: &Error) -> u8 {
    if err.is_config_error() {
        1
    } else {
        2
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let threads = thread_count(cli.threads)?;
    let (name, cfg) = match &cli.command {
        Command::Catalog(a) => ("catalog", a.resolve()?),
        Command::Flow(a) => ("flow", a.resolve()?),
        Command::Volume(a) => ("volume", a.resolve()?),
        Command::Entropy(a) => ("entropy", a.resolve()?),
        Command::Audit(a) => ("audit", a.resolve()?),
        Command::Classify(a) => ("classify", a.resolve()?),
        Command::ReproduceAll(a) => {
            let mut cfg = ScenarioConfig::default();
            cfg.out_dir = a.out.clone();
            ("reproduce-all", cfg)
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    fs::create_dir_all(&cfg.out_dir)?;
    let started = Instant::now();
    let outcome = pool.install(|| match &cli.command {
        Command::Catalog(_) => runner::run_catalog(&cfg.out_dir),
        Command::Flow(_) => runner::run_flow(&cfg),
        Command::Volume(_) => runner::run_volume(&cfg),
        Command::Entropy(_) => runner::run_entropy(&cfg),
        Command::Audit(_) => runner::run_audit(&cfg),
        Command::Classify(_) => runner::run_classify(&cfg),
        Command::ReproduceAll(_) => reproduce::run(&cfg.out_dir),
    });
    let results = match &outcome {
        Ok(r) => {
            let mut all = vec![("status".to_string(), "ok".to_string())];
            all.extend(r.iter().cloned());
            all
        }
        Err(e) => vec![
            ("status".to_string(), "error".to_string()),
            ("error".to_string(), e.to_string().replace('\n', " ")),
        ],
    };
    let manifest = Manifest {
        subcommand: name.to_string(),
        config_text: cfg.to_text(),
        results,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    fs::write(cfg.out_dir.join("manifest.txt"), manifest.render())?;
    outcome.map(|_| ())
}
