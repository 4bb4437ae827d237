//! Command-line surface for `qdarwin`.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags, malformed
//! configuration or distribution specs), 1 for I/O or computation failures.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qdarwin::analytics::averaged_gamma_curve;
use qdarwin::experiments::{
    fig3_config, reproduce_fig2, run_sweep_with, Execution, ExperimentConfig, Sidecar, SweepResult,
};
use qdarwin::model::{
    build_model, classify, sample_instance, CouplingDistribution, ModelKind, ModelOverrides,
    ModelSpec, DEFAULT_CLASSIFY_TOL,
};

pub mod output;

pub use output::{fig2_csv, fmt_g12, heatmap_svg, sweep_csv, write_csv, Quantity};

/// Environment variable capping the worker count; 0 or unset means automatic.
pub const THREADS_ENV: &str = "QDARWIN_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "qdarwin",
    version,
    about = "Redundant records of a qubit in a qubit environment"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a model specification for pointer-basis support.
    Classify {
        /// Model specification JSON (or an experiment config naming a model kind).
        #[arg(long)]
        config: PathBuf,
        /// Seed for the numeric instance that is classified.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CLASSIFY_TOL)]
        tol: f64,
    },
    /// Run a Monte Carlo sweep described by an experiment config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutPaths,
        /// Replaces the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Long-time I and chi against fragment size.
    Fig2 {
        #[arg(long, default_value_t = 50)]
        n_env: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha0_sq: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time by fragment-size sweep for one of the reference models.
    Fig3 {
        #[arg(long)]
        model: ModelKind,
        #[command(flatten)]
        overrides: OverrideArgs,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutPaths,
    },
    /// Disorder-averaged squared decoherence factor on a uniform time grid.
    Gamma {
        /// `uniform:<a>`, `discrete:v1,v2,...` or `const:<v>`.
        #[arg(long)]
        dist: CouplingDistribution,
        #[arg(long)]
        alpha2: f64,
        #[arg(long)]
        tmax: f64,
        /// Number of grid points, `t_k = k tmax / (steps - 1)`.
        #[arg(long)]
        steps: usize,
        /// Writes to standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct OutPaths {
    /// CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional SVG heatmap.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Quantity::Ratio)]
    pub quantity: Quantity,
    /// Optional JSON sidecar with config echo, seed and code version.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OverrideArgs {
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Comma-separated support of the discrete law.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub discrete_support: Option<Vec<f64>>,
    #[arg(long)]
    pub scrambling_strength: Option<f64>,
}

impl From<&OverrideArgs> for ModelOverrides {
    fn from(a: &OverrideArgs) -> Self {
        ModelOverrides {
            half_width: a.half_width,
            discrete_support: a.discrete_support.clone(),
            scrambling_strength: a.scrambling_strength,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn execution() -> Result<Execution, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(Execution::default()),
        Ok(v) => {
            let threads: usize = v.trim().parse().map_err(|_| {
                usage(format!(
                    "{THREADS_ENV} must be a non-negative integer, got `{v}`"
                ))
            })?;
            Ok(Execution::Parallel { threads })
        }
    }
}

#[derive(Serialize)]
struct ClassifyLine {
    pointer_basis: bool,
    continuous_support: bool,
    no_scrambling: bool,
    darwinism_supported: bool,
}

fn load_model(text: &str) -> Result<ModelSpec, CliError> {
    match ModelSpec::from_json(text) {
        Ok(spec) => Ok(spec),
        Err(spec_err) => match ExperimentConfig::from_json(text) {
            Ok(c) => build_model(c.model, c.n_env, &c.overrides).map_err(usage),
            Err(_) => Err(usage(format!("malformed model config: {spec_err}"))),
        },
    }
}

fn run_classify(
    config: &Path,
    seed: u64,
    tol: f64,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let spec = load_model(&read(config)?)?;
    let inst = sample_instance(&spec, seed).map_err(runtime)?;
    let c = classify(&inst, spec.continuous_support(), tol).map_err(usage)?;
    let line = ClassifyLine {
        pointer_basis: c.pointer_basis,
        continuous_support: c.continuous_support,
        no_scrambling: c.no_scrambling,
        darwinism_supported: c.darwinism_supported,
    };
    writeln!(stdout, "{}", serde_json::to_string(&line).map_err(runtime)?).map_err(runtime)
}

fn emit_sweep(
    result: &SweepResult,
    out: &OutPaths,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let sidecar = Sidecar::for_result(result);
    let svg = match out.svg {
        Some(_) => Some(heatmap_svg(result, out.quantity).ok_or_else(|| {
            usage(format!(
                "{:?} was not computed for model {}",
                out.quantity, result.config.model
            ))
        })?),
        None => None,
    };
    write_csv(result, &out.out).map_err(|e| runtime(format!("{}: {e}", out.out.display())))?;
    if let (Some(path), Some(svg)) = (&out.svg, svg) {
        write(path, &svg)?;
    }
    if let Some(path) = &out.json {
        write(path, &(sidecar.to_json().map_err(runtime)? + "\n"))?;
    }
    let echo = serde_json::to_string(&sidecar).map_err(runtime)?;
    let _ = writeln!(stderr, "config: {echo}");
    Ok(())
}

fn run_config(
    config: &ExperimentConfig,
    out: &OutPaths,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    config.validate().map_err(usage)?;
    let result = run_sweep_with(config, execution()?).map_err(runtime)?;
    emit_sweep(&result, out, stderr)
}

fn gamma_csv(
    dist: &CouplingDistribution,
    alpha2: f64,
    tmax: f64,
    steps: usize,
) -> Result<String, CliError> {
    if steps == 0 {
        return Err(usage("--steps must be at least 1"));
    }
    if !(tmax.is_finite() && tmax >= 0.0) {
        return Err(usage("--tmax must be finite and >= 0"));
    }
    dist.validate().map_err(usage)?;
    let times: Vec<f64> = if steps == 1 {
        vec![0.0]
    } else {
        (0..steps)
            .map(|k| tmax * k as f64 / (steps - 1) as f64)
            .collect()
    };
    let curve = averaged_gamma_curve(dist, alpha2, &times).map_err(usage)?;
    let mut csv = String::from("t,avg_gamma_sq\n");
    for (t, v) in curve.times.iter().zip(&curve.values) {
        csv.push_str(&format!("{},{}\n", fmt_g12(*t), fmt_g12(*v)));
    }
    Ok(csv)
}

/// Runs one parsed command, writing reports to the given streams.
pub fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Classify { config, seed, tol } => run_classify(&config, seed, tol, stdout),
        Command::Sweep { config, out, seed } => {
            let mut cfg = ExperimentConfig::from_json(&read(&config)?)
                .map_err(|e| usage(format!("malformed experiment config: {e}")))?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            run_config(&cfg, &out, stderr)
        }
        Command::Fig2 {
            n_env,
            alpha0_sq,
            out,
        } => {
            let rows = reproduce_fig2(n_env, alpha0_sq).map_err(usage)?;
            write(&out, &fig2_csv(&rows))?;
            let _ = writeln!(
                stderr,
                "config: {{\"n_env\":{n_env},\"alpha0_sq\":{alpha0_sq}}}"
            );
            Ok(())
        }
        Command::Fig3 {
            model,
            overrides,
            realizations,
            seed,
            out,
        } => {
            let mut cfg = fig3_config(model, ModelOverrides::from(&overrides));
            cfg.master_seed = seed;
            if let Some(r) = realizations {
                cfg.realizations = r;
            }
            run_config(&cfg, &out, stderr)
        }
        Command::Gamma {
            dist,
            alpha2,
            tmax,
            steps,
            out,
        } => {
            let csv = gamma_csv(&dist, alpha2, tmax, steps)?;
            match out {
                Some(path) => write(&path, &csv),
                None => stdout.write_all(csv.as_bytes()).map_err(runtime),
            }
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let stderr = io::stderr();
    match dispatch(cli, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qdarwin: {e}");
            e.exit_code()
        }
    }
}
