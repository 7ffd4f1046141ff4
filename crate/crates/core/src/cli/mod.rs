//! Command-line front end: configuration files, output layout and the
//! `run`, `sweep-n`, `sweep-delta`, `oracle` and `identities` commands.
//!
//! Exit codes: 0 success, 1 ledger violation or failed run, 2 usage or
//! configuration error.

mod config;
mod identities;
mod manifest;

pub use config::{config_from_pairs, config_to_text, parse_config, parse_config_str, parse_pairs};
pub use identities::{bulk_gradient_error, random_material, random_q, run_identities, IdentityReport};
pub use manifest::{manifest_files, RunManifest, MANIFEST};

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::galerkin::{
    energy_identity_residual, integrate, Differencing, GalerkinConfig, GalerkinError, GalerkinState, GalerkinSystem,
    SpectralBasis,
};
use crate::solver::{run, sweep_delta, sweep_penalty, write_sweep_csv, RunStatus, SolverError};
use crate::tensor::MaterialConstants;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Galerkin(#[from] GalerkinError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Solver(SolverError::Config(_)) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nematic-colloid", version, about = "Rigid colloids in a nematic liquid crystal flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (flat key = value).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct IdentityArgs {
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time-step one configuration and write ledger, body and field files.
    Run(Common),
    /// Repeat a run over penalty strengths n.
    SweepN(SweepArgs),
    /// Repeat a run over regularization strengths delta.
    SweepDelta(SweepArgs),
    /// Integrate the spectral Galerkin oracle and its energy identity.
    Oracle(OracleArgs),
    /// Randomized checks of the pointwise tensor identities.
    Identities(IdentityArgs),
}

fn is_ours(name: &str) -> bool {
    matches!(name, "manifest.txt" | "ledger.csv" | "sweep.csv" | "oracle_ledger.csv")
        || (name.starts_with("body_") && name.ends_with(".csv"))
        || (name.starts_with("fields_") && name.ends_with(".vtk"))
}

/// Creates `dir`, or refuses a non-empty one unless `force`, in which case
/// earlier outputs of this tool are removed first.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<(), CliError> {
    if !dir.exists() {
        std::fs::create_dir_all(dir)?;
        return Ok(());
    }
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("--output-dir: {} is not a directory", dir.display())));
    }
    let entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    if entries.is_empty() {
        return Ok(());
    }
    if !force {
        return Err(CliError::Usage(format!(
            "--output-dir: {} is not empty (pass --force to overwrite)",
            dir.display()
        )));
    }
    for e in entries {
        if e.file_type()?.is_file() && is_ours(&e.file_name().to_string_lossy()) {
            std::fs::remove_file(e.path())?;
        }
    }
    Ok(())
}

fn load(common: &Common) -> Result<crate::solver::SimConfig, CliError> {
    let mut cfg = parse_config(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn cmd_run(args: &Common, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = load(args)?;
    prepare_output_dir(&args.output_dir, args.force)?;
    let mut manifest = RunManifest::new("run", cfg.seed, &args.output_dir);
    manifest.config = Some(config_to_text(&cfg));
    let report = run(&cfg, Some(&args.output_dir))?;
    let code = match &report.status {
        RunStatus::Completed => EXIT_OK,
        _ => EXIT_FAILURE,
    };
    manifest.files = report.files.clone();
    manifest.max_ledger_residual = Some(report.max_residual());
    manifest.exit_status = code;
    manifest.status = match &report.status {
        RunStatus::Completed => "ok".into(),
        RunStatus::LedgerViolation { step, residual } => format!("ledger violation at step {step} (residual {residual:e})"),
        RunStatus::Failed(m) => format!("failed: {m}"),
    };
    manifest.write(&args.output_dir)?;
    writeln!(
        out,
        "{}: {} steps, t = {:.6e}, max ledger residual {:.3e}",
        manifest.status,
        report.state.step,
        report.state.t,
        report.max_residual()
    )?;
    Ok(code)
}

fn cmd_sweep(args: &SweepArgs, delta: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = load(&args.common)?;
    let dir = &args.common.output_dir;
    for v in &args.values {
        if !(*v >= 0.0 && v.is_finite()) {
            return Err(CliError::Usage(format!("--values: entries must be finite and >= 0 (got {v})")));
        }
    }
    prepare_output_dir(dir, args.common.force)?;
    let name = if delta { "sweep-delta" } else { "sweep-n" };
    let mut manifest = RunManifest::new(name, cfg.seed, dir);
    manifest.config = Some(config_to_text(&cfg));
    let rows = if delta { sweep_delta(&cfg, &args.values)? } else { sweep_penalty(&cfg, &args.values)? };
    write_sweep_csv(&dir.join("sweep.csv"), &rows)?;
    let ok = rows.iter().all(|r| r.status == "ok");
    let code = if ok { EXIT_OK } else { EXIT_FAILURE };
    manifest.files = vec!["sweep.csv".into()];
    manifest.max_ledger_residual = Some(rows.iter().map(|r| r.max_residual).fold(f64::NEG_INFINITY, f64::max));
    manifest.exit_status = code;
    manifest.status = if ok { "ok".into() } else { "some members failed".into() };
    manifest.write(dir)?;
    for r in &rows {
        writeln!(out, "{:>10.3e}  {:<16} q_body {:.4e}  strain_body {:.4e}", r.param, r.status, r.q_body, r.strain_body)?;
    }
    Ok(code)
}

/// Parameters of the oracle command: a 4×4 periodic box keeps the stiffest
/// mode well inside the RK4 stability region for `dt ≤ 1e−2`.
pub fn oracle_system(k: usize) -> Result<GalerkinSystem, CliError> {
    let mc = MaterialConstants { a: -0.3, b: 0.8, c: 1.2, gamma: 1.0, mu: 0.5 };
    Ok(GalerkinSystem::new(SpectralBasis::new(k, [4.0, 4.0])?, GalerkinConfig::new(mc))?)
}

fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if !(args.dt > 0.0 && args.dt.is_finite()) {
        return Err(CliError::Usage(format!("--dt: dt > 0 (got {})", args.dt)));
    }
    if args.steps < 4 {
        return Err(CliError::Usage(format!("--steps: steps >= 4 (got {})", args.steps)));
    }
    let sys = oracle_system(args.k).map_err(|e| match e {
        CliError::Galerkin(GalerkinError::Invalid(m)) => CliError::Usage(format!("--{m}")),
        other => other,
    })?;
    prepare_output_dir(&args.output_dir, args.force)?;
    let seed = args.seed.unwrap_or(0);
    let mut manifest = RunManifest::new("oracle", seed, &args.output_dir);
    manifest.config = Some(format!("k = {}\ndt = {:?}\nsteps = {}\n", args.k, args.dt, args.steps));
    let s0 = GalerkinState::seeded(args.k, seed, 0.6);
    let (code, rows, worst) = match integrate(&sys, &s0, args.dt, args.steps) {
        Ok(traj) => {
            let res = energy_identity_residual(&sys, &traj, Differencing::Central4)?;
            let mut rows = Vec::with_capacity(traj.len());
            for (i, s) in traj.iter().enumerate() {
                let r = if i >= 2 && i < traj.len() - 2 { res[i - 2].1 } else { f64::NAN };
                rows.push(vec![s.t, sys.energy(s).total(), r]);
            }
            let worst = res.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
            manifest.status = "ok".into();
            (EXIT_OK, rows, worst)
        }
        Err(e) => {
            manifest.status = format!("failed: {e}");
            (EXIT_FAILURE, Vec::new(), f64::NAN)
        }
    };
    crate::fields::write_csv(&args.output_dir.join("oracle_ledger.csv"), &["t", "E", "residual"], &rows).map_err(SolverError::from)?;
    manifest.files = vec!["oracle_ledger.csv".into()];
    manifest.max_ledger_residual = Some(worst);
    manifest.exit_status = code;
    manifest.write(&args.output_dir)?;
    writeln!(out, "{}: max energy-identity residual {worst:.3e}", manifest.status)?;
    Ok(code)
}

fn cmd_identities(args: &IdentityArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let reports = run_identities(args.samples, args.seed.unwrap_or(0));
    let mut ok = true;
    for r in &reports {
        ok &= r.passed();
        writeln!(
            out,
            "{:<4} {:<36} {} / {} passed, worst {:.2e} (tol {:.0e})",
            if r.passed() { "PASS" } else { "FAIL" },
            r.name,
            r.samples - r.failures,
            r.samples,
            r.worst,
            r.tolerance
        )?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::SweepN(a) => cmd_sweep(a, false, out),
        Command::SweepDelta(a) => cmd_sweep(a, true, out),
        Command::Oracle(a) => cmd_oracle(a, out),
        Command::Identities(a) => cmd_identities(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
