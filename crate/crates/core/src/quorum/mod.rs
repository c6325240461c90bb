//! Quorum sensing in a growing colony.
//!
//! State is kept in molecule tokens; one token stands for `quanta` molecules.
//! Concentrations use `1 nM * 1 fL = 0.602214` molecules. Time is in hours.

mod aggregate;
mod growth;
mod per_cell;

pub use aggregate::build_colony_network;
pub use growth::{fit_logistic, logistic, LogisticFit};
pub use per_cell::{duplicate_split, PerCellColony};

use serde::{Deserialize, Serialize};

use crate::engine::{simulate_observed, EngineError, JumpProcess, NoObserver, SimObserver, SimOptions, Trajectory};
use crate::rng::{self, SimRng};

/// Molecules per nM per fL.
pub const MOLECULES_PER_NM_FL: f64 = 0.602214;

const FL_PER_NL: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeMode {
    /// Extracellular volume grows with the colony.
    Open,
    /// Fixed vessel.
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuorumParams {
    pub rho_max: f64,
    #[serde(rename = "N_max")]
    pub n_max: f64,
    /// fL.
    pub phi_cell: f64,
    pub mode: VolumeMode,
    /// Total volume per cell in open mode, fL.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_ex: Option<f64>,
    /// Vessel volume in closed mode, nL.
    #[serde(rename = "V_tot", default, skip_serializing_if = "Option::is_none")]
    pub v_tot: Option<f64>,
    pub beta: f64,
    #[serde(rename = "xi_D")]
    pub xi_d: f64,
    #[serde(rename = "xi_L1", default)]
    pub xi_l1: f64,
    #[serde(rename = "xi_L2", default)]
    pub xi_l2: f64,
    /// nM.
    #[serde(rename = "eta_A_th")]
    pub eta_a_th: f64,
    /// Basal expression per cell: synthase, receptor, virulence.
    pub eps0: [f64; 3],
    /// Expression per complex: synthase, receptor, virulence.
    #[serde(rename = "epsC")]
    pub eps_c: [f64; 3],
    #[serde(rename = "delta_R")]
    pub delta_r: f64,
    #[serde(rename = "delta_C")]
    pub delta_c: f64,
    #[serde(rename = "delta_S")]
    pub delta_s: f64,
    #[serde(rename = "upsilon_C")]
    pub upsilon_c: f64,
    pub gamma: f64,
    #[serde(default = "unit_quanta")]
    pub quanta: f64,
}

fn unit_quanta() -> f64 {
    1.0
}

impl QuorumParams {
    fn base(mode: VolumeMode) -> Self {
        Self {
            rho_max: 1.0,
            n_max: 1000.0,
            phi_cell: 1.0,
            mode,
            phi_ex: None,
            v_tot: None,
            beta: 18.0,
            xi_d: 0.01,
            xi_l1: 0.0,
            xi_l2: 0.0,
            eta_a_th: 21.4,
            eps0: [80.0, 80.0, 80.0],
            eps_c: [3.0, 3.0, 3.0],
            delta_r: 12.0,
            delta_c: 1.4,
            delta_s: 1.0,
            upsilon_c: 60.0,
            gamma: 3.5,
            quanta: 1.0,
        }
    }

    /// Reference closed vessel: 1000 cells at most in 0.1 nL, no leakage.
    pub fn reference_closed() -> Self {
        Self {
            v_tot: Some(0.1),
            ..Self::base(VolumeMode::Closed)
        }
    }

    /// Reference open system: unbounded growth, 10% extracellular volume.
    pub fn reference_open() -> Self {
        Self {
            n_max: f64::INFINITY,
            phi_ex: Some(1.1),
            xi_l1: 5000.0,
            xi_l2: 0.1,
            ..Self::base(VolumeMode::Open)
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let rates = [
            ("rho_max", self.rho_max),
            ("beta", self.beta),
            ("xi_D", self.xi_d),
            ("xi_L1", self.xi_l1),
            ("xi_L2", self.xi_l2),
            ("eta_A_th", self.eta_a_th),
            ("delta_R", self.delta_r),
            ("delta_C", self.delta_c),
            ("delta_S", self.delta_s),
            ("upsilon_C", self.upsilon_c),
            ("gamma", self.gamma),
        ];
        for (name, x) in rates {
            if !(x.is_finite() && x >= 0.0) {
                v.push(format!("{name} must be finite and >= 0 (got {x})"));
            }
        }
        for (k, (&a, &b)) in self.eps0.iter().zip(&self.eps_c).enumerate() {
            if !(a.is_finite() && a >= 0.0 && b.is_finite() && b >= 0.0) {
                v.push(format!("eps0[{k}] and epsC[{k}] must be finite and >= 0"));
            }
        }
        if !(self.n_max >= 1.0) {
            v.push(format!("N_max must be >= 1 (got {})", self.n_max));
        }
        if !(self.phi_cell > 0.0 && self.phi_cell.is_finite()) {
            v.push(format!("phi_cell must be > 0 (got {})", self.phi_cell));
        }
        if !(self.quanta > 0.0 && self.quanta.is_finite()) {
            v.push(format!("quanta must be > 0 (got {})", self.quanta));
        }
        match self.mode {
            VolumeMode::Open => {
                match self.phi_ex {
                    None => v.push("open mode needs phi_ex".into()),
                    Some(x) if !(x >= self.phi_cell && x.is_finite()) => {
                        v.push(format!("phi_ex = {x} must be >= phi_cell = {}", self.phi_cell))
                    }
                    _ => {}
                }
                if self.v_tot.is_some() {
                    v.push("V_tot applies only to closed mode".into());
                }
            }
            VolumeMode::Closed => {
                match self.v_tot {
                    None => v.push("closed mode needs V_tot".into()),
                    Some(x) if !(x * FL_PER_NL >= self.n_max * self.phi_cell && x.is_finite()) => v.push(format!(
                        "V_tot = {x} nL cannot hold N_max * phi_cell = {} fL",
                        self.n_max * self.phi_cell
                    )),
                    _ => {}
                }
                if self.phi_ex.is_some() {
                    v.push("phi_ex applies only to open mode".into());
                }
            }
        }
        v
    }

    /// Total volume seen by autoinducers with `n` cells, fL.
    pub fn total_volume(&self, n: f64) -> f64 {
        match self.mode {
            VolumeMode::Open => n * self.phi_ex.unwrap_or(self.phi_cell),
            VolumeMode::Closed => self.v_tot.unwrap_or(0.0) * FL_PER_NL,
        }
    }

    /// Combined cell volume, fL.
    pub fn cell_volume(&self, n: f64) -> f64 {
        n * self.phi_cell
    }
}

/// Per-cell duplication rate.
pub fn growth_rate(n: f64, p: &QuorumParams) -> f64 {
    if p.n_max.is_infinite() {
        return p.rho_max;
    }
    (p.rho_max * (1.0 - n / p.n_max)).max(0.0)
}

/// Per-molecule loss rate (degradation plus leakage) with `n` cells.
pub fn loss_rate(n: f64, xi_d: f64, xi_l1: f64, xi_l2: f64) -> f64 {
    xi_d + xi_l1 / (1.0 + xi_l2 * (n - 1.0))
}

pub fn delta_a_of(n: f64, p: &QuorumParams) -> f64 {
    loss_rate(n, p.xi_d, p.xi_l1, p.xi_l2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Concentrations {
    pub eta_a: f64,
    pub eta_r: f64,
    pub eta_c: f64,
    pub eta_s: f64,
}

/// Aggregate token counts. `i` holds interferer counts in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ColonyCounts {
    pub n: i64,
    pub a: i64,
    pub r: i64,
    pub c: i64,
    pub s: i64,
    pub i: [i64; MAX_INTERFERERS],
}

pub const MAX_INTERFERERS: usize = 3;

fn nm(tokens: i64, volume_fl: f64, quanta: f64) -> f64 {
    tokens as f64 * quanta / (volume_fl * MOLECULES_PER_NM_FL)
}

/// Concentrations in nM.
pub fn concentrations(x: &ColonyCounts, p: &QuorumParams) -> Concentrations {
    let n = x.n.max(1) as f64;
    let vt = p.total_volume(n);
    let vc = p.cell_volume(n);
    Concentrations {
        eta_a: nm(x.a, vt, p.quanta),
        eta_r: nm(x.r, vc, p.quanta),
        eta_c: nm(x.c, vc, p.quanta),
        eta_s: nm(x.s, vc, p.quanta),
    }
}

/// Complex formation rate in molecules per hour.
pub fn lambda_c_of(a: i64, r: i64, n: i64, p: &QuorumParams) -> f64 {
    let x = ColonyCounts {
        n,
        a,
        r,
        ..Default::default()
    };
    let eta = concentrations(&x, p);
    if eta.eta_a < p.eta_a_th {
        return 0.0;
    }
    p.gamma * eta.eta_a * eta.eta_r * p.cell_volume(n.max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    ReceptorInhibition,
    SynthaseBlocking,
    AutoinducerDegradation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceParams {
    pub mechanism: Mechanism,
    /// Injection rate, molecules per hour.
    #[serde(rename = "mu_I")]
    pub mu_i: f64,
    #[serde(rename = "xi_D", default)]
    pub xi_d: f64,
    #[serde(rename = "xi_L1", default)]
    pub xi_l1: f64,
    #[serde(rename = "xi_L2", default)]
    pub xi_l2: f64,
    #[serde(rename = "gamma_IR", default, skip_serializing_if = "Option::is_none")]
    pub gamma_ir: Option<f64>,
    #[serde(rename = "gamma_IS", default, skip_serializing_if = "Option::is_none")]
    pub gamma_is: Option<f64>,
    #[serde(rename = "delta_IA", default, skip_serializing_if = "Option::is_none")]
    pub delta_ia: Option<f64>,
}

impl InterferenceParams {
    pub fn new(mechanism: Mechanism, mu_i: f64, binding: f64) -> Self {
        let mut p = Self {
            mechanism,
            mu_i,
            xi_d: 0.0,
            xi_l1: 0.0,
            xi_l2: 0.0,
            gamma_ir: None,
            gamma_is: None,
            delta_ia: None,
        };
        *p.binding_slot() = Some(binding);
        p
    }

    fn binding_slot(&mut self) -> &mut Option<f64> {
        match self.mechanism {
            Mechanism::ReceptorInhibition => &mut self.gamma_ir,
            Mechanism::SynthaseBlocking => &mut self.gamma_is,
            Mechanism::AutoinducerDegradation => &mut self.delta_ia,
        }
    }

    pub fn binding(&self) -> f64 {
        match self.mechanism {
            Mechanism::ReceptorInhibition => self.gamma_ir,
            Mechanism::SynthaseBlocking => self.gamma_is,
            Mechanism::AutoinducerDegradation => self.delta_ia,
        }
        .unwrap_or(0.0)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let (key, others) = match self.mechanism {
            Mechanism::ReceptorInhibition => ("gamma_IR", [("gamma_IS", self.gamma_is), ("delta_IA", self.delta_ia)]),
            Mechanism::SynthaseBlocking => ("gamma_IS", [("gamma_IR", self.gamma_ir), ("delta_IA", self.delta_ia)]),
            Mechanism::AutoinducerDegradation => {
                ("delta_IA", [("gamma_IR", self.gamma_ir), ("gamma_IS", self.gamma_is)])
            }
        };
        let own = self.clone().binding_slot().is_some();
        if !own {
            v.push(format!("{:?} interference needs {key}", self.mechanism));
        }
        for (name, val) in others {
            if val.is_some() {
                v.push(format!("{name} does not apply to {:?} interference", self.mechanism));
            }
        }
        for (name, x) in [
            ("mu_I", self.mu_i),
            ("xi_D", self.xi_d),
            ("xi_L1", self.xi_l1),
            ("xi_L2", self.xi_l2),
            (key, self.binding()),
        ] {
            if !(x.is_finite() && x >= 0.0) {
                v.push(format!("{name} must be finite and >= 0 (got {x})"));
            }
        }
        v
    }
}

/// Event families shared by the aggregate and per-cell representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Duplication,
    Synthesis,
    Unbinding,
    Leakage,
    ReceptorCreation,
    ReceptorDegradation,
    ComplexFormation,
    ComplexDegradation,
    SynthaseCreation,
    SynthaseDegradation,
    Virulence,
    Injection(usize),
    InterfererLoss(usize),
    Binding(usize),
}

pub const CORE_FAMILIES: [Family; 11] = [
    Family::Duplication,
    Family::Synthesis,
    Family::Unbinding,
    Family::Leakage,
    Family::ReceptorCreation,
    Family::ReceptorDegradation,
    Family::ComplexFormation,
    Family::ComplexDegradation,
    Family::SynthaseCreation,
    Family::SynthaseDegradation,
    Family::Virulence,
];

/// Colony parameters plus any interference mechanisms.
#[derive(Debug, Clone, PartialEq)]
pub struct ColonyModel {
    pub params: QuorumParams,
    pub interference: Vec<InterferenceParams>,
}

impl ColonyModel {
    pub fn new(params: QuorumParams, interference: Vec<InterferenceParams>) -> Result<Self, EngineError> {
        let model = Self { params, interference };
        if let Some(msg) = model.violations().into_iter().next() {
            return Err(EngineError::InvalidArgument(msg));
        }
        Ok(model)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = self.params.violations();
        if self.interference.len() > MAX_INTERFERERS {
            v.push(format!("at most {MAX_INTERFERERS} interference mechanisms"));
        }
        for (k, i) in self.interference.iter().enumerate() {
            v.extend(
                i.violations()
                    .into_iter()
                    .map(|m| format!("interference {}: {m}", k + 1)),
            );
        }
        v
    }

    pub fn families(&self) -> Vec<Family> {
        let mut f = CORE_FAMILIES.to_vec();
        for k in 0..self.interference.len() {
            f.extend([Family::Injection(k), Family::InterfererLoss(k), Family::Binding(k)]);
        }
        f
    }

    pub fn family_name(&self, f: Family) -> String {
        let suffix = |k: usize| {
            if self.interference.len() > 1 {
                format!("{}", k + 1)
            } else {
                String::new()
            }
        };
        match f {
            Family::Duplication => "duplication".into(),
            Family::Synthesis => "synthesis".into(),
            Family::Unbinding => "unbinding".into(),
            Family::Leakage => "leakage".into(),
            Family::ReceptorCreation => "receptor_creation".into(),
            Family::ReceptorDegradation => "receptor_degradation".into(),
            Family::ComplexFormation => "complex_formation".into(),
            Family::ComplexDegradation => "complex_degradation".into(),
            Family::SynthaseCreation => "synthase_creation".into(),
            Family::SynthaseDegradation => "synthase_degradation".into(),
            Family::Virulence => "virulence".into(),
            Family::Injection(k) => format!("interferer_injection{}", suffix(k)),
            Family::InterfererLoss(k) => format!("interferer_loss{}", suffix(k)),
            Family::Binding(k) => format!("interferer_binding{}", suffix(k)),
        }
    }

    pub fn interferer_names(&self) -> Vec<String> {
        match self.interference.len() {
            1 => vec!["I".into()],
            n => (1..=n).map(|k| format!("I{k}")).collect(),
        }
    }

    /// Total rate of one family in tokens per hour.
    pub fn family_rate(&self, f: Family, x: &ColonyCounts) -> f64 {
        let p = &self.params;
        let q = p.quanta;
        let n = x.n as f64;
        let basal = |k: usize| (n * p.eps0[k]) / q + x.c as f64 * p.eps_c[k];
        match f {
            Family::Duplication => n * growth_rate(n, p),
            Family::Synthesis => p.beta * x.s as f64,
            Family::Unbinding => p.upsilon_c * x.c as f64,
            Family::Leakage => delta_a_of(n, p) * x.a as f64,
            Family::ReceptorCreation => basal(1),
            Family::ReceptorDegradation => p.delta_r * x.r as f64,
            Family::ComplexFormation => {
                if x.a == 0 || x.r == 0 {
                    0.0
                } else {
                    lambda_c_of(x.a, x.r, x.n, p) / q
                }
            }
            Family::ComplexDegradation => p.delta_c * x.c as f64,
            Family::SynthaseCreation => basal(0),
            Family::SynthaseDegradation => p.delta_s * x.s as f64,
            Family::Virulence => basal(2),
            Family::Injection(k) => self.interference[k].mu_i / q,
            Family::InterfererLoss(k) => {
                let ip = &self.interference[k];
                loss_rate(n, ip.xi_d, ip.xi_l1, ip.xi_l2) * x.i[k] as f64
            }
            Family::Binding(k) => {
                let ip = &self.interference[k];
                if x.i[k] == 0 {
                    return 0.0;
                }
                let eta_i = nm(x.i[k], p.total_volume(n), q);
                let eta = concentrations(x, p);
                let molecules = match ip.mechanism {
                    Mechanism::ReceptorInhibition => ip.binding() * eta_i * eta.eta_r * p.cell_volume(n),
                    Mechanism::SynthaseBlocking => ip.binding() * eta_i * eta.eta_s * p.cell_volume(n),
                    Mechanism::AutoinducerDegradation => ip.binding() * eta_i * eta.eta_a * p.total_volume(n),
                };
                molecules / q
            }
        }
    }

    /// Initial colony: one empty cell.
    pub fn single_cell(&self) -> ColonyCounts {
        ColonyCounts {
            n: 1,
            ..Default::default()
        }
    }

    pub fn activated(&self, x: &ColonyCounts) -> bool {
        concentrations(x, &self.params).eta_a >= self.params.eta_a_th
    }
}

/// Column names shared by both representations.
pub fn observable_names(model: &ColonyModel) -> Vec<String> {
    let mut v: Vec<String> = [
        "N",
        "A",
        "R_tot",
        "C_tot",
        "S_tot",
        "V_expr",
        "produced_A",
        "lost_A",
        "degraded_C",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    v.extend(model.interferer_names().into_iter().take(model.interference.len()));
    v
}

/// Read aggregate counts back from an observed row.
pub fn counts_from_row(row: &[i64], n_interferers: usize) -> ColonyCounts {
    let mut i = [0; MAX_INTERFERERS];
    i[..n_interferers].copy_from_slice(&row[9..9 + n_interferers]);
    ColonyCounts {
        n: row[0],
        a: row[1],
        r: row[2],
        c: row[3],
        s: row[4],
        i,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    #[default]
    Aggregate,
    PerCell,
}

struct StopAtActivation<'a> {
    model: &'a ColonyModel,
}

impl<S> SimObserver<S> for StopAtActivation<'_> {
    fn stop_after_sample(&mut self, _t: f64, row: &[i64]) -> bool {
        self.model
            .activated(&counts_from_row(row, self.model.interference.len()))
    }
}

/// Simulate from a single empty cell. With `stop_at_activation` the run ends
/// at the first sample where the autoinducer threshold is reached.
pub fn simulate_colony(
    model: &ColonyModel,
    repr: Representation,
    horizon: f64,
    period: f64,
    seed: u64,
    opts: &SimOptions,
    stop_at_activation: bool,
) -> Result<Trajectory, EngineError> {
    let mut tr = simulate_colony_with(
        model,
        repr,
        horizon,
        period,
        &mut rng::seeded(seed),
        opts,
        stop_at_activation,
    )?;
    tr.meta.seed = Some(seed);
    Ok(tr)
}

/// Like [`simulate_colony`] but drawing from a caller-supplied stream.
pub fn simulate_colony_with(
    model: &ColonyModel,
    repr: Representation,
    horizon: f64,
    period: f64,
    r: &mut SimRng,
    opts: &SimOptions,
    stop_at_activation: bool,
) -> Result<Trajectory, EngineError> {
    fn run<P: JumpProcess>(
        process: &P,
        init: &P::State,
        model: &ColonyModel,
        horizon: f64,
        period: f64,
        rng: &mut SimRng,
        opts: &SimOptions,
        stop: bool,
    ) -> Result<Trajectory, EngineError> {
        if stop {
            simulate_observed(
                process,
                init,
                horizon,
                period,
                rng,
                opts,
                &mut StopAtActivation { model },
            )
        } else {
            simulate_observed(process, init, horizon, period, rng, opts, &mut NoObserver)
        }
    }
    match repr {
        Representation::Aggregate => {
            let net = build_colony_network(model)?;
            let init = net.schema().state(&[("N", 1)])?;
            run(&net, &init, model, horizon, period, r, opts, stop_at_activation)
        }
        Representation::PerCell => {
            let process = PerCellColony::new(model.clone());
            let init = process.single_cell();
            run(&process, &init, model, horizon, period, r, opts, stop_at_activation)
        }
    }
}

/// First sample time whose autoinducer concentration reaches the threshold.
pub fn activation_time(tr: &Trajectory, model: &ColonyModel) -> Option<f64> {
    tr.samples
        .iter()
        .position(|row| model.activated(&counts_from_row(row, model.interference.len())))
        .map(|k| tr.times[k])
}

/// Output table header.
pub fn table_header(model: &ColonyModel) -> Vec<String> {
    let mut h: Vec<String> = [
        "t", "N", "A", "R_tot", "C_tot", "S_tot", "V_expr", "eta_A_nM", "eta_R_nM", "eta_C_nM", "eta_S_nM",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(model.interferer_names().into_iter().take(model.interference.len()));
    h
}

/// Output rows: counts in tokens, concentrations in nM.
pub fn table_rows(tr: &Trajectory, model: &ColonyModel) -> Vec<Vec<f64>> {
    let ni = model.interference.len();
    tr.samples
        .iter()
        .zip(&tr.times)
        .map(|(row, &t)| {
            let x = counts_from_row(row, ni);
            let eta = concentrations(&x, &model.params);
            let mut out = vec![
                t,
                x.n as f64,
                x.a as f64,
                x.r as f64,
                x.c as f64,
                x.s as f64,
                row[5] as f64,
                eta.eta_a,
                eta.eta_r,
                eta.eta_c,
                eta.eta_s,
            ];
            out.extend(x.i[..ni].iter().map(|&v| v as f64));
            out
        })
        .collect()
}
