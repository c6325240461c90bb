//! Command-line front end.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::cable::{build_cable, build_reduced, ReducedInput};
use crate::capacity::{
    average_rate, myopic_intensity, myopic_policy, optimize_policy, sweep_alpha_min, ActionGrid, CapacityError,
    SignalingBounds, SolveOptions,
};
use crate::config::{self, ConfigError, ModelKind, ReducedInputKind, RunConfig};
use crate::electron::{build_isolated_cell, fit_parameters, FitOptions};
use crate::engine::{run_ensemble, EngineError, RunStatus, SimOptions, Trajectory};
use crate::manifest::{self, sha256_hex, RunManifest, Table};
use crate::profile::Staircase;
use crate::quorum::{self, fit_logistic, ColonyModel};
use crate::rng;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MODEL: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "mqsim",
    version,
    about = "Queuing models of bacterial energy harvesting, electron relay and quorum sensing"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output CSV; the manifest is written to `<out>.manifest.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    #[arg(long = "sample-period", global = true)]
    pub sample_period: Option<f64>,
    /// Override a config key, e.g. `--set gamma=4` or `--set capacity.e_max=50`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Isolated cell.
    #[command(subcommand)]
    Cell(CellCmd),
    /// Multicellular cable.
    #[command(subcommand)]
    Cable(SimulateCmd),
    /// Reduced birth-death cable.
    #[command(subcommand)]
    Reduced(SimulateCmd),
    /// Achievable-rate optimization.
    #[command(subcommand)]
    Capacity(CapacityCmd),
    /// Quorum-sensing colony.
    #[command(subcommand)]
    Quorum(QuorumCmd),
    /// Check a config without running it.
    Validate,
    /// Re-run the job recorded in a manifest.
    Replay { manifest: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum CellCmd {
    Simulate,
    Fit,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCmd {
    Simulate,
}

#[derive(Debug, Subcommand)]
pub enum CapacityCmd {
    Solve,
    Sweep,
}

#[derive(Debug, Subcommand)]
pub enum QuorumCmd {
    Simulate,
    FitGrowth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Job {
    CellSimulate,
    CellFit,
    CableSimulate,
    ReducedSimulate,
    CapacitySolve,
    CapacitySweep,
    QuorumSimulate,
    QuorumFitGrowth,
}

impl Job {
    pub const ALL: [Job; 8] = [
        Job::CellSimulate,
        Job::CellFit,
        Job::CableSimulate,
        Job::ReducedSimulate,
        Job::CapacitySolve,
        Job::CapacitySweep,
        Job::QuorumSimulate,
        Job::QuorumFitGrowth,
    ];

    pub fn words(self) -> [&'static str; 2] {
        match self {
            Job::CellSimulate => ["cell", "simulate"],
            Job::CellFit => ["cell", "fit"],
            Job::CableSimulate => ["cable", "simulate"],
            Job::ReducedSimulate => ["reduced", "simulate"],
            Job::CapacitySolve => ["capacity", "solve"],
            Job::CapacitySweep => ["capacity", "sweep"],
            Job::QuorumSimulate => ["quorum", "simulate"],
            Job::QuorumFitGrowth => ["quorum", "fit-growth"],
        }
    }

    fn from_words(words: &[String]) -> Option<Job> {
        Job::ALL
            .into_iter()
            .find(|j| j.words().iter().copied().eq(words.iter().map(String::as_str)))
    }

    pub fn model(self) -> ModelKind {
        match self {
            Job::CellSimulate | Job::CellFit => ModelKind::Cell,
            Job::CableSimulate => ModelKind::Cable,
            Job::ReducedSimulate => ModelKind::Reduced,
            Job::CapacitySolve | Job::CapacitySweep => ModelKind::Capacity,
            Job::QuorumSimulate | Job::QuorumFitGrowth => ModelKind::Quorum,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Model(String),
    NotConverged(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Model(_) => EXIT_MODEL,
            CliError::NotConverged(_) => EXIT_NOT_CONVERGED,
            CliError::Io(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Model(m) | CliError::NotConverged(m) | CliError::Io(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Model(e.to_string())
    }
}

impl From<CapacityError> for CliError {
    fn from(e: CapacityError) -> Self {
        match e {
            CapacityError::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            CapacityError::Engine(e) => e.into(),
        }
    }
}

/// What a job produced before it is written out.
struct Outcome {
    table: Table,
    events: Vec<u64>,
    summary: BTreeMap<String, serde_json::Value>,
    /// Set when the job finished but did not converge.
    not_converged: Option<String>,
}

impl Outcome {
    fn table(table: Table) -> Self {
        Self {
            table,
            events: Vec::new(),
            summary: BTreeMap::new(),
            not_converged: None,
        }
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let job = match &cli.command {
        Command::Validate => return validate(&cli.common),
        Command::Replay { manifest } => return replay(manifest, cli.common.out.as_deref()),
        Command::Cell(CellCmd::Simulate) => Job::CellSimulate,
        Command::Cell(CellCmd::Fit) => Job::CellFit,
        Command::Cable(SimulateCmd::Simulate) => Job::CableSimulate,
        Command::Reduced(SimulateCmd::Simulate) => Job::ReducedSimulate,
        Command::Capacity(CapacityCmd::Solve) => Job::CapacitySolve,
        Command::Capacity(CapacityCmd::Sweep) => Job::CapacitySweep,
        Command::Quorum(QuorumCmd::Simulate) => Job::QuorumSimulate,
        Command::Quorum(QuorumCmd::FitGrowth) => Job::QuorumFitGrowth,
    };
    let (text, out) = effective_config(job, &cli.common)?;
    let out = out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", job.words().join("-"))));
    execute(job, &text, &out).map(|_| ())
}

fn validate(common: &CommonArgs) -> Result<(), CliError> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("validate needs --config".into()))?;
    let mut table = config::read_table(path)?;
    let section = table.get("model").and_then(|m| m.as_str()).map(str::to_string);
    config::apply_overrides(&mut table, &common.set, section.as_deref())?;
    let cfg = config::from_table(&table, &path.display().to_string())?;
    let v = config::violations(&cfg);
    if v.is_empty() {
        println!("{}: ok", path.display());
        Ok(())
    } else {
        for m in &v {
            eprintln!("{m}");
        }
        Err(CliError::Config(format!(
            "{}: {} violation(s)",
            path.display(),
            v.len()
        )))
    }
}

/// Merge config file, flags and `--set` into one self-contained TOML text.
fn effective_config(job: Job, common: &CommonArgs) -> Result<(String, Option<PathBuf>), CliError> {
    let mut table = match &common.config {
        Some(path) => {
            let mut t = config::read_table(path)?;
            let base = path
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            config::absolutize_inputs(&mut t, base);
            t
        }
        None => toml::Table::new(),
    };
    let section = match job {
        Job::CellFit => "cell",
        _ => job.model().name(),
    };
    let mut flags = Vec::new();
    if let Some(s) = common.seed {
        flags.push(format!("seed={s}"));
    }
    if let Some(r) = common.runs {
        flags.push(format!("runs={r}"));
    }
    if let Some(h) = common.horizon {
        flags.push(format!("horizon={h:?}"));
    }
    if let Some(p) = common.sample_period {
        flags.push(format!("sample_period={p:?}"));
    }
    config::apply_overrides(&mut table, &flags, Some(section))?;
    config::apply_overrides(&mut table, &common.set, Some(section))?;
    match table.get("model").and_then(|m| m.as_str()) {
        Some(m) if m != job.model().name() => {
            return Err(CliError::Config(format!(
                "config is for model `{m}` but `{}` was requested",
                job.words().join(" ")
            )))
        }
        _ => {
            table.insert("model".into(), toml::Value::String(job.model().name().into()));
        }
    }
    let out = match table.remove("out") {
        Some(toml::Value::String(s)) => Some(PathBuf::from(s)),
        Some(other) => return Err(CliError::Config(format!("`out` must be a path, got {other}"))),
        None => None,
    };
    let text = toml::to_string(&table).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((text, common.out.clone().or(out)))
}

fn execute(job: Job, text: &str, out: &Path) -> Result<RunManifest, CliError> {
    let table = config::parse_table(text, "effective config")?;
    let cfg = config::from_table(&table, "config")?;
    let v = config::violations(&cfg);
    if !v.is_empty() {
        return Err(CliError::Config(v.join("; ")));
    }
    let start = Instant::now();
    let outcome = match job {
        Job::CellSimulate => cell_simulate(&cfg)?,
        Job::CellFit => cell_fit(&cfg)?,
        Job::CableSimulate => cable_simulate(&cfg)?,
        Job::ReducedSimulate => reduced_simulate(&cfg)?,
        Job::CapacitySolve => capacity_solve(&cfg)?,
        Job::CapacitySweep => capacity_sweep(&cfg)?,
        Job::QuorumSimulate => quorum_simulate(&cfg)?,
        Job::QuorumFitGrowth => quorum_fit_growth(&cfg)?,
    };
    let csv = outcome.table.to_csv();
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: job.words().iter().map(|s| s.to_string()).collect(),
        config_digest: sha256_hex(text.as_bytes()),
        config: text.to_string(),
        seed: cfg.seed,
        runs: cfg.runs,
        time_unit: cfg.unit().label().into(),
        events: outcome.events,
        wall_time_s: start.elapsed().as_secs_f64(),
        output: out.display().to_string(),
        output_digest: sha256_hex(&csv),
        summary: outcome.summary,
    };
    let mpath =
        manifest::write_outputs(out, &csv, &manifest).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    eprintln!("wrote {} and {}", out.display(), mpath.display());
    match outcome.not_converged {
        Some(msg) => Err(CliError::NotConverged(msg)),
        None => Ok(manifest),
    }
}

fn replay(path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let m = manifest::read_manifest(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let job = Job::from_words(&m.command)
        .ok_or_else(|| CliError::Config(format!("manifest names unknown command {:?}", m.command)))?;
    if sha256_hex(m.config.as_bytes()) != m.config_digest {
        return Err(CliError::Config("manifest config does not match its digest".into()));
    }
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&m.output));
    let fresh = execute(job, &m.config, &out)?;
    if fresh.output_digest == m.output_digest {
        println!("{}: identical to recorded output", out.display());
        Ok(())
    } else {
        Err(CliError::Io(format!(
            "{}: output digest {} differs from recorded {}",
            out.display(),
            fresh.output_digest,
            m.output_digest
        )))
    }
}

fn sim_opts(cfg: &RunConfig) -> SimOptions {
    SimOptions {
        event_cap: cfg.event_cap.unwrap_or(SimOptions::default().event_cap),
    }
}

fn horizon_and_period(cfg: &RunConfig) -> Result<(f64, f64), CliError> {
    Ok((
        *cfg.require(&cfg.horizon, "horizon")?,
        *cfg.require(&cfg.sample_period, "sample_period")?,
    ))
}

fn trajectories_table(trs: &[Trajectory]) -> Table {
    let many = trs.len() > 1;
    let mut header: Vec<String> = Vec::new();
    if many {
        header.push("run".into());
    }
    header.push("t".into());
    header.extend(trs[0].names.iter().cloned());
    let mut table = Table::new(header);
    for (r, tr) in trs.iter().enumerate() {
        for (t, row) in tr.times.iter().zip(&tr.samples) {
            let mut cells = Vec::with_capacity(row.len() + 2);
            if many {
                cells.push(r.to_string());
            }
            cells.push(t.to_string());
            cells.extend(row.iter().map(i64::to_string));
            table.push(cells);
        }
    }
    table
}

fn ensemble_outcome(trs: Vec<Trajectory>) -> Outcome {
    let capped = trs.iter().filter(|t| t.status == RunStatus::EventCapReached).count();
    if capped > 0 {
        eprintln!("warning: {capped} run(s) hit the event cap; their rows end early");
    }
    let mut o = Outcome::table(trajectories_table(&trs));
    o.events = trs.iter().map(|t| t.meta.events).collect();
    o.summary.insert("event_cap_runs".into(), json!(capped));
    o
}

fn cell_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (horizon, period) = horizon_and_period(cfg)?;
    let net = build_isolated_cell(&cfg.cell_params()?, &cfg.environment()?)?;
    let init = net.schema().zero();
    Ok(ensemble_outcome(run_ensemble(
        &net,
        &init,
        horizon,
        period,
        cfg.runs,
        cfg.seed,
        &sim_opts(cfg),
    )?))
}

/// Read a two-column numeric CSV with a header row.
fn read_series(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut out = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 2 {
            return Err(bad(format!("line {}: expected 2 columns, got {}", k + 2, rec.len())));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("line {}: `{s}`: {e}", k + 2)))
        };
        out.push((num(&rec[0])?, num(&rec[1])?));
    }
    Ok(out)
}

fn param_table(rows: &[(&str, String)]) -> Table {
    let mut t = Table::new(["parameter", "value"]);
    for (k, v) in rows {
        t.push(vec![k.to_string(), v.clone()]);
    }
    t
}

fn cell_fit(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let fit = cfg.require(&cfg.fit, "fit")?;
    let observed = read_series(&fit.observed)?;
    let guess = cfg.cell_params()?;
    let opts = FitOptions {
        max_iter: fit.max_iter,
        scale: fit.scale,
        ..FitOptions::default()
    };
    let r = fit_parameters(&observed, &cfg.environment()?, &guess, &opts)?;
    let mut o = Outcome::table(param_table(&[
        ("rho", r.params.rho.to_string()),
        ("zeta", r.params.zeta.to_string()),
        ("beta", r.params.beta.to_string()),
        ("residual", r.residual.to_string()),
        ("initial_residual", r.initial_residual.to_string()),
        ("iterations", r.iterations.to_string()),
        ("converged", r.converged.to_string()),
    ]));
    if !r.converged {
        o.not_converged = Some(format!(
            "cell fit stopped after {} iterations without converging",
            r.iterations
        ));
    }
    Ok(o)
}

fn cable_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (horizon, period) = horizon_and_period(cfg)?;
    let net = build_cable(&cfg.cable_params()?)?;
    let init = net.schema().zero();
    Ok(ensemble_outcome(run_ensemble(
        &net,
        &init,
        horizon,
        period,
        cfg.runs,
        cfg.seed,
        &sim_opts(cfg),
    )?))
}

fn reduced_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (horizon, period) = horizon_and_period(cfg)?;
    let r = cfg.require(&cfg.reduced, "reduced")?;
    let p = r.params()?;
    let bounds = || -> Result<SignalingBounds, CliError> {
        Ok(SignalingBounds::new(
            *cfg.require(&r.lambda_min, "lambda_min")?,
            *cfg.require(&r.lambda_max, "lambda_max")?,
        )?)
    };
    let mut summary = BTreeMap::new();
    let input = match r.input {
        ReducedInputKind::Myopic => ReducedInput::Policy(myopic_policy(&bounds()?, r.e_max).lambda_bar),
        ReducedInputKind::Optimal => {
            let b = bounds()?;
            let res = optimize_policy(
                &p,
                &b,
                &ActionGrid::with_myopic(&b, r.grid_points),
                &SolveOptions::default(),
            )?;
            summary.insert("rate_opt".into(), json!(res.rate));
            ReducedInput::Policy(res.policy.lambda_bar)
        }
        ReducedInputKind::Profile => {
            let t = cfg.require(&r.intensity_times, "intensity_times")?;
            let l = cfg.require(&r.intensity_levels, "intensity_levels")?;
            ReducedInput::Profile(
                Staircase::new(t.clone(), l.clone())
                    .map_err(|e| CliError::Config(format!("intensity profile: {e}")))?,
            )
        }
    };
    let net = build_reduced(&p, &input)?;
    let init = net.schema().state(&[("E", r.init)])?;
    let mut o = ensemble_outcome(run_ensemble(
        &net,
        &init,
        horizon,
        period,
        cfg.runs,
        cfg.seed,
        &sim_opts(cfg),
    )?);
    o.summary.extend(summary);
    Ok(o)
}

fn capacity_setup(
    cfg: &RunConfig,
) -> Result<(&config::CapacitySection, SignalingBounds, ActionGrid, SolveOptions), CliError> {
    let c = cfg.require(&cfg.capacity, "capacity")?;
    let b = SignalingBounds::new(c.lambda_min, c.lambda_max)?;
    let grid = ActionGrid::with_myopic(&b, c.grid_points);
    let opts = SolveOptions {
        tolerance: c.tolerance,
        max_sweeps: c.max_sweeps,
    };
    Ok((c, b, grid, opts))
}

fn capacity_solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (c, b, grid, opts) = capacity_setup(cfg)?;
    let alpha_min = *cfg.require(&c.alpha_min, "alpha_min")?;
    let p = c.params(alpha_min)?;
    let res = optimize_policy(&p, &b, &grid, &opts)?;
    let mp = average_rate(&myopic_policy(&b, c.e_max), &p, &b)?;
    let mut t = Table::new(["state", "lambda_bar"]);
    for (i, x) in res.policy.lambda_bar.iter().enumerate() {
        t.push(vec![i.to_string(), x.to_string()]);
    }
    let mut o = Outcome::table(t);
    o.summary.insert("rate_opt".into(), json!(res.rate));
    o.summary.insert("rate_mp".into(), json!(mp));
    o.summary.insert("lambda_mp".into(), json!(myopic_intensity(&b)));
    o.summary.insert("gap_pct".into(), json!(100.0 * (res.rate - mp) / mp));
    o.summary.insert("iterations".into(), json!(res.iterations));
    println!(
        "rate_opt = {}  rate_mp = {}  iterations = {}",
        res.rate, mp, res.iterations
    );
    Ok(o)
}

fn capacity_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (c, b, grid, opts) = capacity_setup(cfg)?;
    let list = cfg.require(&c.alpha_min_list, "alpha_min_list")?;
    if c.alpha.is_some() || c.mu.is_some() {
        return Err(CliError::Config(
            "capacity sweep builds its own alpha/mu tables; remove `alpha` and `mu`".into(),
        ));
    }
    let rows = sweep_alpha_min(list, c.e_max, &b, &grid, &opts)?;
    let mut t = Table::new(["alpha_min", "rate_opt", "rate_mp", "gap_pct"]);
    for r in &rows {
        t.push(vec![
            r.alpha_min.to_string(),
            r.rate_opt.to_string(),
            r.rate_mp.to_string(),
            r.gap_pct.to_string(),
        ]);
    }
    Ok(Outcome::table(t))
}

const QUORUM_HORIZON_H: f64 = 12.0;
const QUORUM_PERIOD_H: f64 = 1.0 / 6.0;

fn quorum_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.require(&cfg.quorum, "quorum")?.clone();
    let model = ColonyModel::new(params, cfg.interference.clone())?;
    let horizon = cfg.horizon.unwrap_or(QUORUM_HORIZON_H);
    let period = cfg.sample_period.unwrap_or(QUORUM_PERIOD_H);
    let opts = sim_opts(cfg);
    let trs: Vec<Trajectory> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng::stream(cfg.seed, r);
            quorum::simulate_colony_with(
                &model,
                cfg.representation,
                horizon,
                period,
                &mut stream,
                &opts,
                cfg.stop_at_activation,
            )
        })
        .collect::<Result<_, _>>()?;
    let many = trs.len() > 1;
    let mut header = Vec::new();
    if many {
        header.push("run".to_string());
    }
    header.extend(quorum::table_header(&model));
    let mut table = Table::new(header);
    let mut activation = Vec::new();
    for (r, tr) in trs.iter().enumerate() {
        for row in quorum::table_rows(tr, &model) {
            let mut cells = Vec::with_capacity(row.len() + 1);
            if many {
                cells.push(r.to_string());
            }
            cells.extend(row.iter().map(f64::to_string));
            table.push(cells);
        }
        activation.push(quorum::activation_time(tr, &model));
    }
    let mut o = Outcome::table(table);
    o.events = trs.iter().map(|t| t.meta.events).collect();
    o.summary.insert("activation_h".into(), json!(activation));
    Ok(o)
}

fn quorum_fit_growth(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = cfg.require(&cfg.growth, "growth")?;
    let series = read_series(&g.series)?;
    let fit = fit_logistic(&series)?;
    if fit.low_confidence {
        eprintln!("warning: series shows no growth; logistic fit is low-confidence");
    }
    Ok(Outcome::table(param_table(&[
        ("rho_max", fit.rho_max.to_string()),
        ("capacity", fit.capacity.to_string()),
        ("x0", fit.x0.to_string()),
        ("residual", fit.residual.to_string()),
        ("low_confidence", fit.low_confidence.to_string()),
    ])))
}

/// Cap the global pool at `MQ_THREADS` when set.
pub fn init_thread_pool() -> Result<(), String> {
    match std::env::var("MQ_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("MQ_THREADS must be a positive integer, got `{v}`"))?;
            if n == 0 {
                return Err("MQ_THREADS must be >= 1".into());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_words_round_trip() {
        for job in Job::ALL {
            let words: Vec<String> = job.words().iter().map(|s| s.to_string()).collect();
            assert_eq!(Job::from_words(&words), Some(job));
        }
    }

    #[test]
    fn flags_land_in_effective_config() {
        let common = CommonArgs {
            seed: Some(5),
            horizon: Some(2.0),
            set: vec!["e_max=7".into()],
            ..Default::default()
        };
        let (text, out) = effective_config(Job::CapacitySolve, &common).unwrap();
        assert!(out.is_none());
        let t = config::parse_table(&text, "t").unwrap();
        assert_eq!(t["seed"].as_integer(), Some(5));
        assert_eq!(t["horizon"].as_float(), Some(2.0));
        assert_eq!(t["capacity"]["e_max"].as_integer(), Some(7));
        assert_eq!(t["model"].as_str(), Some("capacity"));
    }

    #[test]
    fn model_mismatch_is_a_config_error() {
        let common = CommonArgs {
            set: vec!["model=quorum".into()],
            ..Default::default()
        };
        let err = effective_config(Job::CapacitySweep, &common).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn bad_arguments_exit_with_config_code() {
        assert_eq!(run(["mqsim", "capacity", "fly"]), EXIT_CONFIG);
        assert_eq!(run(["mqsim", "--help"]), EXIT_OK);
    }
}
