//! Multicellular electron relay.
//!
//! The full cable tracks carriers, ATP and a high-energy membrane pool per
//! cell. Adjacent membranes are merged, so an anaerobic emission by cell `i`
//! lands directly in the membrane pool of cell `i + 1`; the last cell's
//! anaerobic output is counted as terminal throughput.
//!
//! The reduced cable is a single birth-death queue `E` whose arrivals are
//! thinned by the clogging function `alpha`.

use serde::{Deserialize, Serialize};

use crate::electron::{cell_rates, CellParams, EnvironmentProfile};
use crate::engine::{
    simulate, Capacity, EngineError, PropensityFn, ReactionNetwork, SimOptions, StateSchema, StateVector, Trajectory,
};
use crate::profile::{merge_breakpoints, Staircase};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CableParams {
    /// One entry per cell, donor end first.
    pub cells: Vec<CellParams>,
    pub profiles: Vec<EnvironmentProfile>,
    /// Capacity of each high-energy membrane pool.
    pub q_h: i64,
    /// Anaerobic relay coefficient.
    pub zeta_a: f64,
    /// Membrane-driven synthesis coefficient.
    pub zeta_u: f64,
    /// Extra multiplier on the relay rate.
    pub kappa: f64,
}

impl CableParams {
    pub fn uniform(
        n: usize,
        cell: CellParams,
        profile: EnvironmentProfile,
        q_h: i64,
        zeta_a: f64,
        zeta_u: f64,
    ) -> Self {
        Self {
            cells: vec![cell; n],
            profiles: vec![profile; n],
            q_h,
            zeta_a,
            zeta_u,
            kappa: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.cells.is_empty() {
            v.push("cable needs at least one cell".into());
        }
        if self.profiles.len() != self.cells.len() {
            v.push(format!(
                "{} profiles for {} cells",
                self.profiles.len(),
                self.cells.len()
            ));
        }
        for (i, c) in self.cells.iter().enumerate() {
            v.extend(c.violations().into_iter().map(|m| format!("cell {}: {m}", i + 1)));
        }
        if self.q_h < 1 {
            v.push(format!("q_h must be >= 1 (got {})", self.q_h));
        }
        for (name, x) in [("zeta_a", self.zeta_a), ("zeta_u", self.zeta_u), ("kappa", self.kappa)] {
            if !(x.is_finite() && x >= 0.0) {
                v.push(format!("{name} must be finite and >= 0 (got {x})"));
            }
        }
        v
    }
}

/// Component indices of one cell plus the shared ledgers.
#[derive(Debug, Clone, Copy)]
struct Layout {
    m: usize,
    n: usize,
    qh: usize,
}

pub const INJECTED: &str = "injected";
pub const EXITED: &str = "exited";
pub const THROUGHPUT: &str = "throughput";

/// Relay rate out of cell `i` into the next membrane (or the terminal
/// acceptor when `next_qh` is `None`).
fn relay_rate(p: &CableParams, cell: &CellParams, n: i64, next_qh: Option<i64>) -> f64 {
    let atp_room = 1.0 - n as f64 / cell.n_axp as f64;
    let next_room = next_qh.map_or(1.0, |q| 1.0 - q as f64 / p.q_h as f64);
    (p.zeta_a * p.kappa * atp_room * next_room).max(0.0)
}

fn membrane_rate(p: &CableParams, cell: &CellParams, n: i64, qh: i64) -> f64 {
    (p.zeta_u * (qh as f64 / p.q_h as f64) * (1.0 - n as f64 / cell.n_axp as f64)).max(0.0)
}

/// Reaction network of the full cable.
///
/// Columns are `cell<i>.m, cell<i>.n, cell<i>.qH` for each cell followed by
/// the `injected`, `exited` and `throughput` ledgers.
pub fn build_cable(p: &CableParams) -> Result<ReactionNetwork, EngineError> {
    if let Some(msg) = p.violations().into_iter().next() {
        return Err(EngineError::InvalidArgument(msg));
    }
    let mut schema = StateSchema::new();
    let cells: Vec<Layout> = p
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| Layout {
            m: schema.push(format!("cell{}.m", i + 1), Capacity::Bounded(c.m_ch)),
            n: schema.push(format!("cell{}.n", i + 1), Capacity::Bounded(c.n_axp)),
            qh: schema.push(format!("cell{}.qH", i + 1), Capacity::Bounded(p.q_h)),
        })
        .collect();
    let injected = schema.push(INJECTED, Capacity::Counter);
    let exited = schema.push(EXITED, Capacity::Counter);
    let throughput = schema.push(THROUGHPUT, Capacity::Counter);

    use crate::engine::Effect::Delta;
    let mut b = ReactionNetwork::builder(schema);
    for (i, &at) in cells.iter().enumerate() {
        let next = cells.get(i + 1).map(|c| c.qh);
        let sink = next.unwrap_or(throughput);
        let cell = &p.cells[i];
        let env = &p.profiles[i];
        let name = |s: &str| format!("cell{}.{s}", i + 1);

        let (c, d, a) = (cell.clone(), env.sigma_d.clone(), env.sigma_a.clone());
        b = b.channel(
            name("carrier_arrival"),
            move |s, t| cell_rates(s[at.m], s[at.n], d.value_at(t), a.value_at(t), &c).lambda_ch,
            Delta(vec![(at.m, 1), (injected, 1)]),
        );

        let (c, d, a) = (cell.clone(), env.sigma_d.clone(), env.sigma_a.clone());
        b = b.channel(
            name("atp_synthesis"),
            move |s, t| {
                if s[at.m] == 0 {
                    return 0.0;
                }
                cell_rates(s[at.m], s[at.n], d.value_at(t), a.value_at(t), &c).mu_out
            },
            Delta(vec![(at.m, -1), (at.n, 1), (exited, 1)]),
        );

        let (c, pp) = (cell.clone(), p.clone());
        b = b.channel(
            name("atp_synthesis_relay"),
            move |s, _| {
                if s[at.m] == 0 {
                    return 0.0;
                }
                relay_rate(&pp, &c, s[at.n], next.map(|q| s[q]))
            },
            Delta(vec![(at.m, -1), (at.n, 1), (sink, 1)]),
        );

        // membrane-driven synthesis, routed like conventional synthesis in
        // proportion to the aerobic and relay rates
        let split = {
            let (c, pp, a) = (cell.clone(), p.clone(), env.sigma_a.clone());
            move |s: &[i64], t: f64| -> (f64, f64) {
                let total = membrane_rate(&pp, &c, s[at.n], s[at.qh]);
                if total == 0.0 {
                    return (0.0, 0.0);
                }
                let out = c.zeta * (1.0 - s[at.n] as f64 / c.n_axp as f64) * a.value_at(t);
                let relay = relay_rate(&pp, &c, s[at.n], next.map(|q| s[q]));
                let denom = out.max(0.0) + relay;
                if denom == 0.0 {
                    (0.0, 0.0)
                } else {
                    (total * out.max(0.0) / denom, total * relay / denom)
                }
            }
        };
        let aer = split.clone();
        b = b.channel(
            name("membrane_synthesis"),
            move |s, t| aer(s, t).0,
            Delta(vec![(at.qh, -1), (at.n, 1), (exited, 1)]),
        );
        b = b.channel(
            name("membrane_synthesis_relay"),
            move |s, t| split(s, t).1,
            Delta(vec![(at.qh, -1), (at.n, 1), (sink, 1)]),
        );

        let (c, d, a) = (cell.clone(), env.sigma_d.clone(), env.sigma_a.clone());
        b = b.channel(
            name("atp_consumption"),
            move |s, t| {
                if s[at.n] == 0 {
                    return 0.0;
                }
                cell_rates(s[at.m], s[at.n], d.value_at(t), a.value_at(t), &c).mu_atp
            },
            Delta(vec![(at.n, -1)]),
        );
    }
    let profiles: Vec<&Staircase> = p.profiles.iter().flat_map(|e| [&e.sigma_d, &e.sigma_a]).collect();
    b.breakpoints(merge_breakpoints(profiles))
        .digest(format!("cable:{}", serde_json::to_string(p).unwrap_or_default()))
        .build()
}

/// Electrons currently inside the cable (carriers plus membrane pools).
pub fn in_flight(net: &ReactionNetwork, state: &[i64]) -> i64 {
    net.schema()
        .names()
        .iter()
        .zip(state)
        .filter(|(n, _)| n.ends_with(".m") || n.ends_with(".qH"))
        .map(|(_, &v)| v)
        .sum()
}

pub fn simulate_cable(
    p: &CableParams,
    init: Option<&StateVector>,
    horizon: f64,
    period: f64,
    seed: u64,
    opts: &SimOptions,
) -> Result<Trajectory, EngineError> {
    let net = build_cable(p)?;
    let zero = net.schema().zero();
    let mut r = rng::seeded(seed);
    let mut tr = simulate(&net, init.unwrap_or(&zero), horizon, period, &mut r, opts)?;
    tr.meta.seed = Some(seed);
    Ok(tr)
}

/// Clogging function: share of offered electrons admitted at occupancy `i`.
pub fn alpha_of(i: usize, alpha_min: f64, e_max: usize) -> Result<f64, EngineError> {
    if i > e_max || e_max == 0 {
        return Err(EngineError::InvalidArgument(format!("state {i} outside 0..={e_max}")));
    }
    if i == e_max {
        return Ok(0.0);
    }
    Ok(1.0 - (1.0 - alpha_min) * i as f64 / e_max as f64)
}

/// Exit rate at occupancy `i`.
pub fn mu_of(i: usize, e_max: usize) -> Result<f64, EngineError> {
    if i > e_max || e_max == 0 {
        return Err(EngineError::InvalidArgument(format!("state {i} outside 0..={e_max}")));
    }
    Ok(0.6 + 0.8 * i as f64 / e_max as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedCableParams {
    pub e_max: usize,
    /// Admission share per occupancy, length `e_max + 1`.
    pub alpha: Vec<f64>,
    /// Exit rate per occupancy, length `e_max + 1`.
    pub mu: Vec<f64>,
}

impl ReducedCableParams {
    /// Linear clogging with floor `alpha_min` and the default exit rates.
    pub fn linear(e_max: usize, alpha_min: f64) -> Result<Self, EngineError> {
        if !(0.0..=1.0).contains(&alpha_min) {
            return Err(EngineError::InvalidArgument(format!(
                "alpha_min = {alpha_min} outside [0, 1]"
            )));
        }
        Ok(Self {
            e_max,
            alpha: (0..=e_max)
                .map(|i| alpha_of(i, alpha_min, e_max))
                .collect::<Result<_, _>>()?,
            mu: (0..=e_max).map(|i| mu_of(i, e_max)).collect::<Result<_, _>>()?,
        })
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let n = self.e_max + 1;
        if self.e_max == 0 {
            v.push("e_max must be >= 1".into());
            return v;
        }
        if self.alpha.len() != n || self.mu.len() != n {
            v.push(format!("alpha and mu tables need {n} entries"));
            return v;
        }
        if self.alpha[0] != 1.0 {
            v.push(format!("alpha(0) must be 1 (got {})", self.alpha[0]));
        }
        if self.alpha[self.e_max] != 0.0 {
            v.push(format!("alpha(e_max) must be 0 (got {})", self.alpha[self.e_max]));
        }
        if let Some(i) = (0..self.e_max).find(|&i| !(self.alpha[i] > 0.0 && self.alpha[i] <= 1.0)) {
            v.push(format!("alpha({i}) must lie in (0, 1] (got {})", self.alpha[i]));
        }
        if let Some(i) = (0..self.e_max).find(|&i| self.alpha[i + 1] > self.alpha[i]) {
            v.push(format!("alpha must be non-increasing (alpha({}) > alpha({i}))", i + 1));
        }
        if let Some(i) = (1..n).find(|&i| !(self.mu[i] > 0.0 && self.mu[i].is_finite())) {
            v.push(format!("mu({i}) must be > 0 (got {})", self.mu[i]));
        }
        v
    }
}

/// Offered input intensity of the reduced cable.
#[derive(Debug, Clone, PartialEq)]
pub enum ReducedInput {
    /// State-conditional mean intensity, one entry per occupancy.
    Policy(Vec<f64>),
    /// Intensity as a staircase of time.
    Profile(Staircase),
}

/// Birth-death network over `E` with `entries` and `exits` ledgers.
pub fn build_reduced(p: &ReducedCableParams, input: &ReducedInput) -> Result<ReactionNetwork, EngineError> {
    if let Some(msg) = p.violations().into_iter().next() {
        return Err(EngineError::InvalidArgument(msg));
    }
    let mut schema = StateSchema::new();
    let e = schema.push("E", Capacity::Bounded(p.e_max as i64));
    let entries = schema.push("entries", Capacity::Counter);
    let exits = schema.push("exits", Capacity::Counter);
    let alpha = p.alpha.clone();
    let mu = p.mu.clone();
    let mut breakpoints = Vec::new();
    let birth: PropensityFn = match input {
        ReducedInput::Policy(lb) => {
            if lb.len() != p.e_max + 1 {
                return Err(EngineError::InvalidArgument(format!(
                    "policy has {} entries, expected {}",
                    lb.len(),
                    p.e_max + 1
                )));
            }
            let lb = lb.clone();
            Box::new(move |s, _| alpha[s[e] as usize] * lb[s[e] as usize])
        }
        ReducedInput::Profile(st) => {
            breakpoints = st.breakpoints().collect();
            let st = st.clone();
            Box::new(move |s, t| alpha[s[e] as usize] * st.value_at(t))
        }
    };
    use crate::engine::Effect::Delta;
    ReactionNetwork::builder(schema)
        .channel("entry", birth, Delta(vec![(e, 1), (entries, 1)]))
        .channel(
            "exit",
            move |s, _| if s[e] > 0 { mu[s[e] as usize] } else { 0.0 },
            Delta(vec![(e, -1), (exits, 1)]),
        )
        .breakpoints(breakpoints)
        .digest(format!("reduced:{}", p.e_max))
        .build()
}

pub fn simulate_reduced(
    p: &ReducedCableParams,
    input: &ReducedInput,
    init: i64,
    horizon: f64,
    period: f64,
    seed: u64,
    opts: &SimOptions,
) -> Result<Trajectory, EngineError> {
    let net = build_reduced(p, input)?;
    let s0 = net.schema().state(&[("E", init)])?;
    let mut r = rng::seeded(seed);
    let mut tr = simulate(&net, &s0, horizon, period, &mut r, opts)?;
    tr.meta.seed = Some(seed);
    Ok(tr)
}
