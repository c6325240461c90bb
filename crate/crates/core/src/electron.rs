//! Single-cell electron transfer: carrier and ATP pools driven by donor and
//! acceptor concentrations.

use serde::{Deserialize, Serialize};

use crate::engine::{
    cme_expectations, Capacity, CmeOptions, EngineError, ReactionNetwork, StateSchema, DEFAULT_STATE_CAP,
};
use crate::optim::nelder_mead;
use crate::profile::{merge_breakpoints, Staircase, TimeUnit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellParams {
    /// Donor uptake coefficient.
    pub rho: f64,
    /// Synthesis coefficient.
    pub zeta: f64,
    /// ATP consumption coefficient.
    pub beta: f64,
    /// Carrier pool capacity.
    pub m_ch: i64,
    /// ATP pool capacity.
    pub n_axp: i64,
    /// Electrons per queue unit; carried as metadata only.
    #[serde(default = "one")]
    pub n_e: u64,
}

fn one() -> u64 {
    1
}

impl Default for CellParams {
    /// Non-physical placeholder coefficients (per second).
    fn default() -> Self {
        Self {
            rho: 0.01,
            zeta: 0.01,
            beta: 0.01,
            m_ch: 20,
            n_axp: 20,
            n_e: 1,
        }
    }
}

impl CellParams {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, x) in [("rho", self.rho), ("zeta", self.zeta), ("beta", self.beta)] {
            if !(x.is_finite() && x >= 0.0) {
                v.push(format!("{name} must be finite and >= 0 (got {x})"));
            }
        }
        if self.m_ch < 1 {
            v.push(format!("m_ch must be >= 1 (got {})", self.m_ch));
        }
        if self.n_axp < 1 {
            v.push(format!("n_axp must be >= 1 (got {})", self.n_axp));
        }
        v
    }

    fn check(&self) -> Result<(), EngineError> {
        match self.violations().first() {
            Some(msg) => Err(EngineError::InvalidArgument(msg.clone())),
            None => Ok(()),
        }
    }
}

/// Donor and acceptor concentrations over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentProfile {
    pub unit: TimeUnit,
    pub sigma_d: Staircase,
    pub sigma_a: Staircase,
}

impl EnvironmentProfile {
    pub fn constant(unit: TimeUnit, sigma_d: f64, sigma_a: f64) -> Self {
        Self {
            unit,
            sigma_d: Staircase::constant(sigma_d),
            sigma_a: Staircase::constant(sigma_a),
        }
    }

    /// Donor added at `onset` at level `peak`, then lowered in `steps` equal
    /// decrements reaching zero at `end`. Acceptor held at 1.
    pub fn stepped_donor(unit: TimeUnit, onset: f64, end: f64, peak: f64, steps: usize) -> Self {
        assert!(steps >= 1 && end > onset && onset >= 0.0 && peak >= 0.0);
        let dt = (end - onset) / steps as f64;
        let mut starts: Vec<f64> = (0..=steps).map(|k| onset + k as f64 * dt).collect();
        starts[steps] = end;
        let levels = (0..=steps).map(|k| peak * (1.0 - k as f64 / steps as f64)).collect();
        Self {
            unit,
            sigma_d: Staircase::new(starts, levels).expect("valid staircase"),
            sigma_a: Staircase::constant(1.0),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        merge_breakpoints([&self.sigma_d, &self.sigma_a])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRates {
    pub lambda_ch: f64,
    pub mu_ch: f64,
    pub mu_out: f64,
    pub mu_atp: f64,
}

/// Linear saturating rate laws of the isolated cell.
pub fn cell_rates(m_ch: i64, n_atp: i64, sigma_d: f64, sigma_a: f64, p: &CellParams) -> CellRates {
    let lambda_ch = p.rho * (1.0 - m_ch as f64 / p.m_ch as f64) * sigma_d;
    let mu_ch = p.zeta * (1.0 - n_atp as f64 / p.n_axp as f64) * sigma_a;
    CellRates {
        lambda_ch: lambda_ch.max(0.0),
        mu_ch: mu_ch.max(0.0),
        mu_out: mu_ch.max(0.0),
        mu_atp: p.beta * sigma_d,
    }
}

pub const CARRIER_ARRIVAL: &str = "carrier_arrival";
pub const ATP_SYNTHESIS: &str = "atp_synthesis";
pub const ATP_CONSUMPTION: &str = "atp_consumption";

/// Three-channel chain over `(m, n)`.
pub fn build_isolated_cell(p: &CellParams, env: &EnvironmentProfile) -> Result<ReactionNetwork, EngineError> {
    p.check()?;
    let mut schema = StateSchema::new();
    let m = schema.push("m", Capacity::Bounded(p.m_ch));
    let n = schema.push("n", Capacity::Bounded(p.n_axp));

    let (pa, da, aa) = (p.clone(), env.sigma_d.clone(), env.sigma_a.clone());
    let arrival = move |s: &[i64], t: f64| cell_rates(s[m], s[n], da.value_at(t), aa.value_at(t), &pa).lambda_ch;
    let (ps, ds, as_) = (p.clone(), env.sigma_d.clone(), env.sigma_a.clone());
    let synthesis = move |s: &[i64], t: f64| {
        if s[m] == 0 {
            return 0.0;
        }
        cell_rates(s[m], s[n], ds.value_at(t), as_.value_at(t), &ps).mu_ch
    };
    let (pc, dc, ac) = (p.clone(), env.sigma_d.clone(), env.sigma_a.clone());
    let consumption = move |s: &[i64], t: f64| {
        if s[n] == 0 {
            return 0.0;
        }
        cell_rates(s[m], s[n], dc.value_at(t), ac.value_at(t), &pc).mu_atp
    };

    use crate::engine::Effect::Delta;
    ReactionNetwork::builder(schema)
        .channel(CARRIER_ARRIVAL, arrival, Delta(vec![(m, 1)]))
        .channel(ATP_SYNTHESIS, synthesis, Delta(vec![(m, -1), (n, 1)]))
        .channel(ATP_CONSUMPTION, consumption, Delta(vec![(n, -1)]))
        .breakpoints(env.breakpoints())
        .digest(format!("cell:{:?}", p))
        .build()
}

/// `E[n_ATP](t)` at each requested time, multiplied by `scale`.
pub fn predict_atp(
    p: &CellParams,
    env: &EnvironmentProfile,
    init: (i64, i64),
    times: &[f64],
    scale: f64,
) -> Result<Vec<f64>, EngineError> {
    let net = build_isolated_cell(p, env)?;
    let space = net.state_space(DEFAULT_STATE_CAP)?;
    let horizon = times.last().copied().unwrap_or(0.0);
    let gen = net.piecewise_generator(&space, horizon)?;
    let p0 = space
        .point_mass(&[init.0, init.1])
        .ok_or_else(|| EngineError::InvalidArgument(format!("initial state {init:?} is out of bounds")))?;
    let n_values: Vec<f64> = space.component_values(1).into_iter().map(|v| v * scale).collect();
    let series = cme_expectations(&gen, &p0, &[n_values], times, &CmeOptions::default())?;
    Ok(series.column(0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFit {
    pub params: CellParams,
    pub residual: f64,
    pub initial_residual: f64,
    pub iterations: u64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: u64,
    pub scale: f64,
    pub init_state: (i64, i64),
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            scale: 1.0,
            init_state: (0, 0),
        }
    }
}

/// Least-squares fit of `(rho, zeta, beta)` to an observed ATP series.
///
/// Searches in log-coefficient space, so `guess` must be strictly positive.
/// Capacities are taken from `guess`.
pub fn fit_parameters(
    observed: &[(f64, f64)],
    env: &EnvironmentProfile,
    guess: &CellParams,
    opts: &FitOptions,
) -> Result<CellFit, EngineError> {
    if observed.len() < 3 {
        return Err(EngineError::InvalidArgument(format!(
            "need at least 3 observations, got {}",
            observed.len()
        )));
    }
    if [guess.rho, guess.zeta, guess.beta]
        .iter()
        .any(|&x| !(x > 0.0 && x.is_finite()))
    {
        return Err(EngineError::InvalidArgument("initial guess must be positive".into()));
    }
    let times: Vec<f64> = observed.iter().map(|o| o.0).collect();
    let with = |x: &[f64]| CellParams {
        rho: x[0].exp(),
        zeta: x[1].exp(),
        beta: x[2].exp(),
        ..guess.clone()
    };
    let sse = |x: &[f64]| match predict_atp(&with(x), env, opts.init_state, &times, opts.scale) {
        Ok(pred) => pred.iter().zip(observed).map(|(p, o)| (p - o.1).powi(2)).sum(),
        Err(_) => f64::INFINITY,
    };
    let x0 = [guess.rho.ln(), guess.zeta.ln(), guess.beta.ln()];
    let initial_residual = sse(&x0);
    if !initial_residual.is_finite() {
        return Err(EngineError::InvalidArgument(
            "model cannot be evaluated at the initial guess".into(),
        ));
    }
    let best = nelder_mead(sse, &x0, 0.5, opts.max_iter, 1e-12);
    let params = if best.value < initial_residual {
        with(&best.x)
    } else {
        guess.clone()
    };
    Ok(CellFit {
        params,
        residual: best.value,
        initial_residual,
        iterations: best.iterations,
        converged: best.converged,
    })
}
