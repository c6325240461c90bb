//! Run configuration: strict TOML with `--set` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cable::{alpha_of, mu_of, CableParams, ReducedCableParams};
use crate::electron::{CellParams, EnvironmentProfile};
use crate::profile::{Staircase, TimeUnit};
use crate::quorum::{InterferenceParams, QuorumParams, Representation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("{0}")]
    Parse(String),
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cell,
    Cable,
    Reduced,
    Capacity,
    Quorum,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cell => "cell",
            ModelKind::Cable => "cable",
            ModelKind::Reduced => "reduced",
            ModelKind::Capacity => "capacity",
            ModelKind::Quorum => "quorum",
        }
    }
}

/// Staircase donor and acceptor profiles as breakpoint/value lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub donor_times: Vec<f64>,
    pub donor_levels: Vec<f64>,
    #[serde(default = "zero_list")]
    pub acceptor_times: Vec<f64>,
    #[serde(default = "unit_list")]
    pub acceptor_levels: Vec<f64>,
}

fn zero_list() -> Vec<f64> {
    vec![0.0]
}

fn unit_list() -> Vec<f64> {
    vec![1.0]
}

impl ProfileSection {
    pub fn to_profile(&self, unit: TimeUnit) -> Result<EnvironmentProfile, ConfigError> {
        let stair = |t: &[f64], v: &[f64], what: &str| {
            Staircase::new(t.to_vec(), v.to_vec()).map_err(|e| ConfigError::Invalid(format!("{what}: {e}")))
        };
        Ok(EnvironmentProfile {
            unit,
            sigma_d: stair(&self.donor_times, &self.donor_levels, "donor profile")?,
            sigma_a: stair(&self.acceptor_times, &self.acceptor_levels, "acceptor profile")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Two-column CSV `t,atp`.
    pub observed: PathBuf,
    #[serde(default = "unit_scale")]
    pub scale: f64,
    #[serde(default = "default_fit_iter")]
    pub max_iter: u64,
}

fn unit_scale() -> f64 {
    1.0
}

fn default_fit_iter() -> u64 {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellOverride {
    pub cell: usize,
    pub rho: Option<f64>,
    pub zeta: Option<f64>,
    pub beta: Option<f64>,
    pub m_ch: Option<i64>,
    pub n_axp: Option<i64>,
    pub profile: Option<ProfileSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CableSection {
    pub cells: usize,
    pub q_h: i64,
    pub zeta_a: f64,
    pub zeta_u: f64,
    #[serde(default = "unit_scale")]
    pub kappa: f64,
    #[serde(default, rename = "override")]
    pub overrides: Vec<CellOverride>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReducedInputKind {
    #[default]
    Myopic,
    Optimal,
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedSection {
    pub e_max: usize,
    pub alpha_min: f64,
    /// Explicit clogging table; replaces the linear one built from `alpha_min`.
    pub alpha: Option<Vec<f64>>,
    /// Explicit exit-rate table.
    pub mu: Option<Vec<f64>>,
    #[serde(default)]
    pub init: i64,
    #[serde(default)]
    pub input: ReducedInputKind,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub intensity_times: Option<Vec<f64>>,
    pub intensity_levels: Option<Vec<f64>>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

impl ReducedSection {
    pub fn params(&self) -> Result<ReducedCableParams, ConfigError> {
        tables(self.e_max, self.alpha_min, self.alpha.as_deref(), self.mu.as_deref())
    }
}

fn tables(
    e_max: usize,
    alpha_min: f64,
    alpha: Option<&[f64]>,
    mu: Option<&[f64]>,
) -> Result<ReducedCableParams, ConfigError> {
    if e_max == 0 {
        return Err(ConfigError::Invalid("e_max must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&alpha_min) {
        return Err(ConfigError::Invalid(format!("alpha_min = {alpha_min} outside [0, 1]")));
    }
    let model = |e: crate::engine::EngineError| ConfigError::Invalid(e.to_string());
    let alpha = match alpha {
        Some(a) => a.to_vec(),
        None => (0..=e_max)
            .map(|i| alpha_of(i, alpha_min, e_max))
            .collect::<Result<_, _>>()
            .map_err(model)?,
    };
    let mu = match mu {
        Some(m) => m.to_vec(),
        None => (0..=e_max)
            .map(|i| mu_of(i, e_max))
            .collect::<Result<_, _>>()
            .map_err(model)?,
    };
    Ok(ReducedCableParams { e_max, alpha, mu })
}

fn default_grid_points() -> usize {
    201
}

fn default_tolerance() -> f64 {
    1e-14
}

fn default_sweeps() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySection {
    pub e_max: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Clogging floor for `capacity solve`.
    pub alpha_min: Option<f64>,
    /// Clogging floors for `capacity sweep`.
    pub alpha_min_list: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub mu: Option<Vec<f64>>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
}

impl CapacitySection {
    pub fn params(&self, alpha_min: f64) -> Result<ReducedCableParams, ConfigError> {
        tables(self.e_max, alpha_min, self.alpha.as_deref(), self.mu.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSection {
    /// Two-column CSV `t,density`.
    pub series: PathBuf,
}

/// Parsed run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelKind>,
    #[serde(default)]
    pub seed: u64,
    pub horizon: Option<f64>,
    pub sample_period: Option<f64>,
    #[serde(default = "one_run")]
    pub runs: usize,
    pub out: Option<PathBuf>,
    pub time_unit: Option<TimeUnit>,
    /// Per-trajectory event budget.
    pub event_cap: Option<u64>,
    #[serde(default)]
    pub representation: Representation,
    #[serde(default)]
    pub stop_at_activation: bool,
    pub cell: Option<CellParams>,
    pub profile: Option<ProfileSection>,
    pub fit: Option<FitSection>,
    pub cable: Option<CableSection>,
    pub reduced: Option<ReducedSection>,
    pub capacity: Option<CapacitySection>,
    pub quorum: Option<QuorumParams>,
    #[serde(default)]
    pub interference: Vec<InterferenceParams>,
    pub growth: Option<GrowthSection>,
}

fn one_run() -> usize {
    1
}

/// Keys that live at the top level; any other bare `--set` key goes to the
/// model's own section.
const TOP_LEVEL: [&str; 11] = [
    "model",
    "event_cap",
    "seed",
    "horizon",
    "sample_period",
    "runs",
    "out",
    "time_unit",
    "representation",
    "stop_at_activation",
    "interference",
];

/// Parse the value side of a `--set`: a TOML literal, a comma list, or a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let literal = |s: &str| {
        format!("v = {s}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
    };
    if let Some(v) = literal(raw) {
        return v;
    }
    if raw.contains(',') {
        let parts: Vec<toml::Value> = raw
            .split(',')
            .map(|p| literal(p.trim()).unwrap_or_else(|| toml::Value::String(p.trim().to_string())))
            .collect();
        return toml::Value::Array(parts);
    }
    toml::Value::String(raw.to_string())
}

/// Apply `key=value` overrides. A dotted key names its section explicitly;
/// a bare key goes to the top level or to `[section]`.
pub fn apply_overrides(
    table: &mut toml::Table,
    overrides: &[String],
    section: Option<&str>,
) -> Result<(), ConfigError> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| ConfigError::Override(item.clone()))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Override(item.clone()));
        }
        let mut path: Vec<&str> = key.split('.').collect();
        if path.len() == 1 && !TOP_LEVEL.contains(&key) {
            if let Some(s) = section {
                path.insert(0, s);
            }
        }
        let (last, parents) = path.split_last().expect("non-empty path");
        let mut node = &mut *table;
        for p in parents {
            let entry = node
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            node = entry
                .as_table_mut()
                .ok_or_else(|| ConfigError::Invalid(format!("`{p}` is not a section in override `{item}`")))?;
        }
        node.insert(last.to_string(), parse_value(raw.trim()));
    }
    Ok(())
}

/// Config text with line-numbered parse errors.
pub fn parse_table(text: &str, origin: &str) -> Result<toml::Table, ConfigError> {
    text.parse::<toml::Table>()
        .map_err(|e| ConfigError::Parse(format!("{origin}: {}", with_line(text, &e.to_string(), e.span()))))
}

fn with_line(text: &str, message: &str, span: Option<std::ops::Range<usize>>) -> String {
    let message = message.trim_end();
    match span {
        Some(s) => {
            let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
            if message.contains(&format!("line {line}")) {
                message.to_string()
            } else {
                format!("line {line}: {message}")
            }
        }
        None => message.to_string(),
    }
}

pub fn from_table(table: &toml::Table, origin: &str) -> Result<RunConfig, ConfigError> {
    let text = toml::to_string(table).map_err(|e| ConfigError::Parse(e.to_string()))?;
    toml::from_str::<RunConfig>(&text).map_err(|e| {
        let msg = e.message().to_string();
        match (missing_key(&msg), e.span()) {
            (Some(k), _) => ConfigError::Missing(k),
            (None, Some(span)) => {
                let start = text[..span.start].rfind('\n').map_or(0, |i| i + 1);
                let end = text[span.start..].find('\n').map_or(text.len(), |i| span.start + i);
                ConfigError::Parse(format!("{origin}: {msg} in `{}`", text[start..end].trim()))
            }
            (None, None) => ConfigError::Parse(format!("{origin}: {msg}")),
        }
    })
}

fn missing_key(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("missing field `")?;
    Some(rest.split('`').next()?.to_string())
}

pub fn read_table(path: &Path) -> Result<toml::Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_table(&text, &path.display().to_string())
}

/// Resolve relative input paths against `base` so the effective config is
/// self-contained.
pub fn absolutize_inputs(table: &mut toml::Table, base: &Path) {
    for (section, key) in [("fit", "observed"), ("growth", "series")] {
        if let Some(toml::Value::String(s)) = table.get_mut(section).and_then(|t| t.get_mut(key)) {
            let p = Path::new(s.as_str());
            if p.is_relative() {
                *s = base.join(p).display().to_string();
            }
        }
    }
}

impl RunConfig {
    pub fn unit(&self) -> TimeUnit {
        self.time_unit.unwrap_or(match self.model {
            Some(ModelKind::Cell) | Some(ModelKind::Cable) => TimeUnit::Seconds,
            _ => TimeUnit::Hours,
        })
    }

    pub fn require<'a, T>(&self, value: &'a Option<T>, key: &str) -> Result<&'a T, ConfigError> {
        value.as_ref().ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    pub fn cell_params(&self) -> Result<CellParams, ConfigError> {
        Ok(self.cell.clone().unwrap_or_default())
    }

    pub fn environment(&self) -> Result<EnvironmentProfile, ConfigError> {
        self.require(&self.profile, "profile")?.to_profile(self.unit())
    }

    pub fn cable_params(&self) -> Result<CableParams, ConfigError> {
        let c = self.require(&self.cable, "cable")?;
        if c.cells == 0 {
            return Err(ConfigError::Invalid("cable.cells must be >= 1".into()));
        }
        let base = self.cell_params()?;
        let env = self.environment()?;
        let mut p = CableParams::uniform(c.cells, base, env, c.q_h, c.zeta_a, c.zeta_u);
        p.kappa = c.kappa;
        for o in &c.overrides {
            if o.cell == 0 || o.cell > c.cells {
                return Err(ConfigError::Invalid(format!(
                    "cable override names cell {} outside 1..={}",
                    o.cell, c.cells
                )));
            }
            let cell = &mut p.cells[o.cell - 1];
            cell.rho = o.rho.unwrap_or(cell.rho);
            cell.zeta = o.zeta.unwrap_or(cell.zeta);
            cell.beta = o.beta.unwrap_or(cell.beta);
            cell.m_ch = o.m_ch.unwrap_or(cell.m_ch);
            cell.n_axp = o.n_axp.unwrap_or(cell.n_axp);
            if let Some(prof) = &o.profile {
                p.profiles[o.cell - 1] = prof.to_profile(self.unit())?;
            }
        }
        Ok(p)
    }
}

/// Every statically checkable invariant of the sections present.
pub fn violations(cfg: &RunConfig) -> Vec<String> {
    let mut v = Vec::new();
    let mut note = |prefix: &str, list: Vec<String>| v.extend(list.into_iter().map(|m| format!("{prefix}: {m}")));
    let positive = |x: Option<f64>, key: &str| match x {
        Some(x) if !(x > 0.0 && x.is_finite()) => vec![format!("{key} must be > 0 (got {x})")],
        _ => vec![],
    };
    note("run", positive(cfg.horizon, "horizon"));
    note("run", positive(cfg.sample_period, "sample_period"));
    if cfg.runs == 0 {
        note("run", vec!["runs must be >= 1".into()]);
    }
    if let Some(c) = &cfg.cell {
        note("cell", c.violations());
    }
    if let Some(p) = &cfg.profile {
        if let Err(e) = p.to_profile(cfg.unit()) {
            note("profile", vec![e.to_string()]);
        }
    }
    if let Some(f) = &cfg.fit {
        if !(f.scale > 0.0 && f.scale.is_finite()) {
            note("fit", vec![format!("scale must be > 0 (got {})", f.scale)]);
        }
    }
    if cfg.cable.is_some() {
        match cfg.cable_params() {
            Ok(p) => note("cable", p.violations()),
            Err(e) => note("cable", vec![e.to_string()]),
        }
    }
    if let Some(r) = &cfg.reduced {
        match r.params() {
            Ok(p) => note("reduced", p.violations()),
            Err(e) => note("reduced", vec![e.to_string()]),
        }
        if r.init < 0 || r.init as usize > r.e_max {
            note("reduced", vec![format!("init = {} outside 0..={}", r.init, r.e_max)]);
        }
        match r.input {
            ReducedInputKind::Profile => match (&r.intensity_times, &r.intensity_levels) {
                (Some(t), Some(l)) => {
                    if let Err(e) = Staircase::new(t.clone(), l.clone()) {
                        note("reduced", vec![format!("intensity profile: {e}")]);
                    }
                }
                _ => note(
                    "reduced",
                    vec!["profile input needs intensity_times and intensity_levels".into()],
                ),
            },
            _ => note("reduced", bound_violations(r.lambda_min, r.lambda_max)),
        }
    }
    if let Some(c) = &cfg.capacity {
        note("capacity", bound_violations(Some(c.lambda_min), Some(c.lambda_max)));
        let mut floors: Vec<f64> = c.alpha_min.into_iter().collect();
        floors.extend(c.alpha_min_list.iter().flatten());
        for a in floors {
            match c.params(a) {
                Ok(p) => note("capacity", p.violations()),
                Err(e) => note("capacity", vec![e.to_string()]),
            }
        }
        if c.grid_points < 2 {
            note(
                "capacity",
                vec![format!("grid_points must be >= 2 (got {})", c.grid_points)],
            );
        }
    }
    if let Some(q) = &cfg.quorum {
        note("quorum", q.violations());
    }
    for (k, i) in cfg.interference.iter().enumerate() {
        note(&format!("interference[{k}]"), i.violations());
    }
    if cfg.interference.len() > crate::quorum::MAX_INTERFERERS {
        note(
            "interference",
            vec![format!(
                "at most {} interferers are supported",
                crate::quorum::MAX_INTERFERERS
            )],
        );
    }
    v
}

fn bound_violations(lo: Option<f64>, hi: Option<f64>) -> Vec<String> {
    match (lo, hi) {
        (Some(lo), Some(hi)) if !(lo > 0.0 && hi > lo && hi.is_finite()) => {
            vec![format!(
                "need 0 < lambda_min < lambda_max (got lambda_min = {lo}, lambda_max = {hi})"
            )]
        }
        (Some(_), Some(_)) => vec![],
        (None, _) => vec!["missing lambda_min".into()],
        (_, None) => vec!["missing lambda_max".into()],
    }
}

/// Parse and check a config file without running anything.
pub fn validate_config(path: &Path) -> Result<Vec<String>, ConfigError> {
    let table = read_table(path)?;
    let cfg = from_table(&table, &path.display().to_string())?;
    Ok(violations(&cfg))
}
