//! Command-line driver.
//!
//! Every command resolves an instance (from `--config` or a built-in
//! `--instance`), applies command-line overrides (flags take precedence
//! over the configuration file, which takes precedence over defaults),
//! writes its data artifacts to `--out-dir`, and finishes with a
//! `manifest.toml` listing each artifact with its SHA-256 digest. The
//! effective configuration is written as `config.toml`, so that rerunning
//! with `--config config.toml` reproduces every digest.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 the run
//! completed but reported findings (audit violations, failed saddle checks,
//! insufficient convergence order, identity violations).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, InstanceConfig, ResolvedInstance};
use crate::game::{
    default_alternatives, saddle_check_with_samples, write_estimates_csv, write_saddle_csv, write_samples_csv,
    Alternatives, GameError, StoppingRule,
};
use crate::grid::{write_grid_csv, GridError, GridFunction};
use crate::hamiltonian::identities::run_identity_suites;
use crate::registry;
use crate::solver::{
    convergence_study, manufactured_instance, solve_vi, write_audit_csv, SolverError,
};

/// Exit code of a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code of a usage, configuration or runtime error.
pub const EXIT_ERROR: i32 = 1;
/// Exit code of a run that completed with findings.
pub const EXIT_FINDINGS: i32 = 2;

/// Name of the manifest written by every command.
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot build a thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Parser)]
#[command(name = "bilateral", version, about = "Double-obstacle Isaacs equations and their stopping games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the variational inequality and audit the solution.
    Solve(InstanceArgs),
    /// Solve, then check the hitting-time strategies by Monte Carlo.
    VerifyGame {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        game: GameArgs,
    },
    /// Measure the error against a manufactured solution under refinement.
    Convergence {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Number of grids; each halves the spacing of the previous one.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Run the randomized Hamiltonian identity suites.
    Identities {
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0, value_parser = seed_parser())]
        seed: u64,
        #[arg(long, default_value = "bilateral-out")]
        out_dir: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write the obstacles, running cost and (for profiles) exact solution.
    ExportGrid(InstanceArgs),
}

/// Seeds are stored in TOML integers, which are signed 64-bit.
fn seed_parser() -> clap::builder::RangedU64ValueParser {
    clap::value_parser!(u64).range(0..=i64::MAX as u64)
}

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Instance configuration file.
    #[arg(long, conflicts_with = "instance", required_unless_present = "instance")]
    pub config: Option<PathBuf>,
    /// Built-in instance name.
    #[arg(long)]
    pub instance: Option<String>,
    #[arg(long, default_value = "bilateral-out")]
    pub out_dir: PathBuf,
    /// Overrides `game.seed`.
    #[arg(long, value_parser = seed_parser())]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Overrides `solver.tolerance`.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Overrides `grid.nodes` (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub nodes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Args)]
pub struct GameArgs {
    /// Overrides `game.paths`.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Overrides `game.dt`.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Overrides `game.horizon`.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Overrides `game.x0` (comma separated).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    /// Overrides `game.alternatives`: `default` or `never`.
    #[arg(long)]
    pub alternatives: Option<String>,
    /// Sets `game.antithetic = true`.
    #[arg(long)]
    pub antithetic: bool,
    /// Overrides `game.contact_eps`.
    #[arg(long)]
    pub contact_eps: Option<f64>,
}

impl InstanceArgs {
    /// The configuration with command-line overrides applied.
    pub fn load(&self) -> Result<InstanceConfig, CliError> {
        let mut config = match (&self.config, &self.instance) {
            (Some(path), _) => InstanceConfig::from_path(path)?,
            (None, Some(name)) => registry::load(name)?,
            (None, None) => return Err(CliError::Usage("give --config or --instance".into())),
        };
        if let Some(t) = self.tolerance {
            config.solver.tolerance = Some(t);
        }
        if let Some(nodes) = &self.nodes {
            config.grid.nodes = nodes.clone();
        }
        if let Some(seed) = self.seed {
            config.game.seed = Some(seed);
        }
        Ok(config)
    }
}

impl GameArgs {
    fn apply(&self, config: &mut InstanceConfig) {
        let g = &mut config.game;
        if let Some(v) = self.paths {
            g.paths = Some(v);
        }
        if let Some(v) = self.dt {
            g.dt = Some(v);
        }
        if let Some(v) = self.horizon {
            g.horizon = Some(v);
        }
        if let Some(v) = &self.x0 {
            g.x0 = Some(v.clone());
        }
        if let Some(v) = &self.alternatives {
            g.alternatives = Some(v.clone());
        }
        if self.antithetic {
            g.antithetic = Some(true);
        }
        if let Some(v) = self.contact_eps {
            g.contact_eps = Some(v);
        }
    }
}

/// One artifact listed in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Record of one run. Only the timestamps vary between identical reruns.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub started: String,
    pub finished: String,
    pub exit_code: i32,
    /// Effective configuration, identical to `config.toml`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    pub summary: BTreeMap<String, String>,
    pub outputs: Vec<OutputEntry>,
}

/// Writes artifacts into one directory and records their digests.
struct Artifacts {
    dir: PathBuf,
    outputs: Vec<OutputEntry>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.outputs.push(OutputEntry {
            file: name.to_string(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    fn write<E>(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<(), E>) -> Result<(), CliError>
    where
        CliError: From<E>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write_bytes(name, &buf)
    }

    fn write_grid(&mut self, name: &str, grid: &GridFunction) -> Result<(), CliError> {
        self.write(name, |buf| write_grid_csv(grid, buf))
    }
}

/// State shared by one command invocation.
struct Run {
    command: &'static str,
    started: String,
    artifacts: Artifacts,
    instance: Option<String>,
    seed: Option<u64>,
    config: Option<String>,
    summary: BTreeMap<String, String>,
}

impl Run {
    fn new(command: &'static str, out_dir: &Path) -> Result<Self, CliError> {
        Ok(Run {
            command,
            started: timestamp(),
            artifacts: Artifacts::new(out_dir)?,
            instance: None,
            seed: None,
            config: None,
            summary: BTreeMap::new(),
        })
    }

    fn with_config(command: &'static str, out_dir: &Path, config: &InstanceConfig) -> Result<Self, CliError> {
        let mut run = Run::new(command, out_dir)?;
        let text = config.to_toml();
        run.artifacts.write_bytes("config.toml", text.as_bytes())?;
        run.instance = Some(config.name.clone());
        run.seed = config.game.seed;
        run.config = Some(text);
        Ok(run)
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.insert(key.to_string(), value.to_string());
    }

    fn finish(self, exit_code: i32) -> Result<i32, CliError> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            instance: self.instance,
            seed: self.seed,
            started: self.started,
            finished: timestamp(),
            exit_code,
            config: self.config,
            summary: self.summary,
            outputs: self.artifacts.outputs,
        };
        let text = toml::to_string(&manifest).expect("manifests serialize");
        let path = self.artifacts.dir.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(exit_code)
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Runs a parsed command on a thread pool of the requested size.
pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    let threads = match &cli.command {
        Command::Solve(a) | Command::ExportGrid(a) => a.threads,
        Command::VerifyGame { instance, .. } | Command::Convergence { instance, .. } => instance.threads,
        Command::Identities { threads, .. } => *threads,
    };
    match threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| dispatch(&cli.command)),
        None => dispatch(&cli.command),
    }
}

fn dispatch(command: &Command) -> Result<i32, CliError> {
    match command {
        Command::Solve(args) => cmd_solve(args),
        Command::VerifyGame { instance, game } => cmd_verify_game(instance, game),
        Command::Convergence { instance, levels } => cmd_convergence(instance, *levels),
        Command::Identities {
            trials,
            seed,
            out_dir,
            ..
        } => cmd_identities(*trials, *seed, out_dir),
        Command::ExportGrid(args) => cmd_export_grid(args),
    }
}

/// Solves the instance and writes `solution.csv` and `audit.csv`. Returns
/// whether the audit passed.
fn solve_and_write(run: &mut Run, resolved: &ResolvedInstance) -> Result<(GridFunction, bool), CliError> {
    let report = solve_vi(&resolved.spec, &resolved.lattice, &resolved.solve)?;
    run.artifacts.write_grid("solution.csv", &report.solution)?;
    run.artifacts
        .write("audit.csv", |buf| write_audit_csv(&report.vi_audit, buf))?;
    run.note("solver", report.summary_text());
    let passed = report.vi_audit.passed();
    println!(
        "solved {} in {} iterations (residual {:.3e}); audit {} (observed constant {:.3e})",
        resolved.name,
        report.iterations,
        report.final_residual,
        if passed { "passed" } else { "FAILED" },
        report.vi_audit.observed_constant()
    );
    Ok((report.solution, passed))
}

fn cmd_solve(args: &InstanceArgs) -> Result<i32, CliError> {
    let config = args.load()?;
    let resolved = config.resolve()?;
    let mut run = Run::with_config("solve", &args.out_dir, &config)?;
    let (_, passed) = solve_and_write(&mut run, &resolved)?;
    run.finish(if passed { EXIT_OK } else { EXIT_FINDINGS })
}

fn cmd_verify_game(args: &InstanceArgs, game: &GameArgs) -> Result<i32, CliError> {
    let mut config = args.load()?;
    game.apply(&mut config);
    let resolved = config.resolve()?;
    if !resolved.spec.is_uncontrolled() {
        return Err(CliError::Usage(
            "verification requires singleton controls: the stopping game has no control choice".into(),
        ));
    }
    let settings = config.game_settings(&resolved)?;
    let mut run = Run::with_config("verify-game", &args.out_dir, &config)?;
    let (solution, audit_passed) = solve_and_write(&mut run, &resolved)?;

    let alternatives = if settings.full_battery {
        default_alternatives(&resolved.spec, &settings.x0)
    } else {
        Alternatives {
            theta: vec![StoppingRule::Never],
            tau: vec![StoppingRule::Never],
        }
    };
    let (report, batch) = saddle_check_with_samples(
        &resolved.spec,
        &solution,
        &settings.x0,
        &alternatives,
        &settings.mc,
        settings.contact_eps,
    )?;
    run.artifacts.write("saddle.csv", |buf| write_saddle_csv(&report, buf))?;
    let labels: Vec<String> = report.checks().map(|c| format!("{}:{}", c.kind, c.rule)).collect();
    let mut rows = vec![("main", &report.main)];
    rows.extend(labels.iter().map(String::as_str).zip(report.checks().map(|c| &c.estimate)));
    run.artifacts.write("estimates.csv", |buf| write_estimates_csv(&rows, buf))?;
    run.artifacts.write("samples.csv", |buf| write_samples_csv(&batch, 0, buf))?;

    let failed: Vec<String> = report
        .checks()
        .filter(|c| !c.passed)
        .map(|c| format!("{}:{}", c.kind, c.rule))
        .collect();
    run.note("w_x0", float(report.w_x0));
    run.note("value_estimate", float(report.main.mean));
    run.note("value_std_error", float(report.main.std_error));
    run.note("tol_num", float(report.tol_num));
    run.note("contact_eps", float(report.contact_eps));
    run.note("exit_fraction", float(report.main.exit_fraction));
    run.note("immediate_strictly_slack", report.immediate_strictly_slack());
    run.note("saddle_passed", report.passed());
    run.note("failed_checks", failed.join(";"));
    println!(
        "w(x0) = {:.6}, estimate = {:.6} ± {:.2e} (tol_num {:.3e}); {} of {} checks passed; exit fraction {:.4}",
        report.w_x0,
        report.main.mean,
        report.main.std_error,
        report.tol_num,
        report.checks().filter(|c| c.passed).count(),
        report.checks().count(),
        report.main.exit_fraction
    );
    for name in &failed {
        println!("failed: {name}");
    }
    let ok = report.passed() && audit_passed;
    run.finish(if ok { EXIT_OK } else { EXIT_FINDINGS })
}

fn cmd_convergence(args: &InstanceArgs, levels: usize) -> Result<i32, CliError> {
    if levels < 2 {
        return Err(CliError::Usage(format!("--levels must be at least 2, got {levels}")));
    }
    let config = args.load()?;
    let resolved = config.resolve()?;
    let profile = resolved.profile.ok_or_else(|| {
        CliError::Usage("`profile`: convergence studies need a manufactured-profile configuration".into())
    })?;
    let mut run = Run::with_config("convergence", &args.out_dir, &config)?;
    let nodes = &resolved.lattice.nodes()[..resolved.lattice.dim()];
    let table = convergence_study(profile, &resolved.spec.domain, nodes, levels, &resolved.solve)?;
    run.artifacts.write("convergence.csv", |buf| table.write_csv(buf))?;
    for r in &table.rows {
        println!(
            "nodes {:?}  h {:.4e}  interior error {:.4e}  order {}",
            r.nodes,
            r.max_spacing,
            r.interior_error,
            r.observed_order.map(|o| format!("{o:.3}")).unwrap_or_else(|| "-".into())
        );
    }
    run.note("strictly_decreasing", table.strictly_decreasing());
    run.note("terminal_order", table.terminal_order().map(float).unwrap_or_default());
    run.note("required_order", float(table.required_order()));
    run.finish(if table.passed() { EXIT_OK } else { EXIT_FINDINGS })
}

fn cmd_identities(trials: usize, seed: u64, out_dir: &Path) -> Result<i32, CliError> {
    if trials < 1 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let mut run = Run::new("identities", out_dir)?;
    run.seed = Some(seed);
    let report = run_identity_suites(trials, seed);
    run.artifacts.write("identities.csv", |buf| -> std::io::Result<()> {
        writeln!(buf, "suite,trials,violations,max_deviation")?;
        for s in &report.suites {
            writeln!(buf, "{},{},{},{}", s.name, s.trials, s.violations, float(s.max_deviation))?;
        }
        Ok(())
    })?;
    for s in &report.suites {
        println!(
            "{:<40} trials {:>8}  violations {:>3}  max deviation {:.3e}",
            s.name, s.trials, s.violations, s.max_deviation
        );
    }
    run.note("trials", trials);
    run.note("tolerance", float(report.tolerance));
    run.note("max_deviation", float(report.max_deviation()));
    run.note("passed", report.passed());
    run.finish(if report.passed() { EXIT_OK } else { EXIT_FINDINGS })
}

fn cmd_export_grid(args: &InstanceArgs) -> Result<i32, CliError> {
    let config = args.load()?;
    let resolved = config.resolve()?;
    let mut run = Run::with_config("export-grid", &args.out_dir, &config)?;
    let (spec, lattice) = (&resolved.spec, resolved.lattice);
    run.artifacts
        .write_grid("psi_upper.csv", &GridFunction::from_fn(lattice, |x| spec.psi_upper(x)))?;
    run.artifacts
        .write_grid("psi_lower.csv", &GridFunction::from_fn(lattice, |x| spec.psi_lower(x)))?;
    run.artifacts.write_grid(
        "running_cost.csv",
        &GridFunction::from_fn(lattice, |x| spec.first_pair_cost(x)),
    )?;
    if let Some(profile) = resolved.profile {
        let (_, exact) = manufactured_instance(profile.name(), &lattice)?;
        run.artifacts.write_grid("exact.csv", &exact)?;
    }
    run.finish(EXIT_OK)
}

impl From<std::io::Error> for CliError {
    fn from(source: std::io::Error) -> Self {
        CliError::Io {
            path: "<buffer>".into(),
            source,
        }
    }
}
