//! Achievable information rate of the reduced cable.
//!
//! The input intensity is chosen per occupancy state. The long-run rate of a
//! stationary policy is the stationary mean of the per-state information
//! rate, and the best policy on a finite action grid is found by
//! average-reward policy iteration on the birth-death chain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cable::ReducedCableParams;
use crate::engine::EngineError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("policy iteration did not settle after {sweeps} sweeps (last gain {gain})")]
    NotConverged { sweeps: usize, gain: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalingBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl SignalingBounds {
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self, EngineError> {
        if !(lambda_min > 0.0 && lambda_max > lambda_min && lambda_max.is_finite()) {
            return Err(EngineError::InvalidArgument(format!(
                "need 0 < lambda_min < lambda_max (got {lambda_min}, {lambda_max})"
            )));
        }
        Ok(Self { lambda_min, lambda_max })
    }

    fn contains(&self, x: f64) -> bool {
        let slack = 1e-12 * self.lambda_max;
        x >= self.lambda_min - slack && x <= self.lambda_max + slack
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            lambda_min: self.lambda_min * c,
            lambda_max: self.lambda_max * c,
        }
    }
}

/// Mean input intensity per occupancy state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalingPolicy {
    pub lambda_bar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub policy: SignalingPolicy,
    /// Bits per unit time.
    pub rate: f64,
    pub steady_state: Vec<f64>,
    pub iterations: usize,
    /// Gain after each policy evaluation.
    pub gains: Vec<f64>,
    /// Largest total event rate of the chain under any grid action.
    pub uniformization: f64,
}

/// Information rate at intensity `x` with admission share `alpha`.
pub fn rate_term(x: f64, alpha: f64, b: &SignalingBounds) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let (lo, hi) = (b.lambda_min, b.lambda_max);
    alpha * x * (hi / x).log2() + alpha * ((hi - x) / (hi - lo)) * lo * (lo / hi).log2()
}

/// Instantaneous information rate in bits at occupancy `i`.
pub fn info_rate(x: f64, i: usize, p: &ReducedCableParams, b: &SignalingBounds) -> Result<f64, EngineError> {
    if !b.contains(x) {
        return Err(EngineError::InvalidArgument(format!(
            "intensity {x} outside [{}, {}]",
            b.lambda_min, b.lambda_max
        )));
    }
    let alpha = *p
        .alpha
        .get(i)
        .ok_or_else(|| EngineError::InvalidArgument(format!("state {i} outside 0..={}", p.e_max)))?;
    Ok(rate_term(x, alpha, b))
}

fn check_policy(policy: &SignalingPolicy, p: &ReducedCableParams, b: &SignalingBounds) -> Result<(), EngineError> {
    if let Some(msg) = p.violations().into_iter().next() {
        return Err(EngineError::InvalidArgument(msg));
    }
    if policy.lambda_bar.len() != p.e_max + 1 {
        return Err(EngineError::InvalidArgument(format!(
            "policy has {} entries, expected {}",
            policy.lambda_bar.len(),
            p.e_max + 1
        )));
    }
    if let Some((i, x)) = policy.lambda_bar.iter().enumerate().find(|(_, &x)| !b.contains(x)) {
        return Err(EngineError::InvalidArgument(format!(
            "policy entry {i} = {x} is out of bounds"
        )));
    }
    Ok(())
}

/// Product-form stationary law of the birth-death chain under `policy`.
pub fn steady_state(policy: &SignalingPolicy, p: &ReducedCableParams) -> Result<Vec<f64>, EngineError> {
    let e = p.e_max;
    if policy.lambda_bar.len() != e + 1 || p.alpha.len() != e + 1 || p.mu.len() != e + 1 {
        return Err(EngineError::InvalidArgument("table lengths must be e_max + 1".into()));
    }
    let mut log_pi = vec![0.0; e + 1];
    for k in 0..e {
        let up = p.alpha[k] * policy.lambda_bar[k];
        if !(up > 0.0) || !(p.mu[k + 1] > 0.0) {
            return Err(EngineError::InvalidArgument(format!(
                "chain is reducible: no transition between states {k} and {}",
                k + 1
            )));
        }
        log_pi[k + 1] = log_pi[k] + up.ln() - p.mu[k + 1].ln();
    }
    let top = log_pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut pi: Vec<f64> = log_pi.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= z);
    Ok(pi)
}

pub fn average_rate(policy: &SignalingPolicy, p: &ReducedCableParams, b: &SignalingBounds) -> Result<f64, EngineError> {
    check_policy(policy, p, b)?;
    let pi = steady_state(policy, p)?;
    Ok(weighted_rate(&pi, policy, p, b))
}

fn weighted_rate(pi: &[f64], policy: &SignalingPolicy, p: &ReducedCableParams, b: &SignalingBounds) -> f64 {
    pi.iter()
        .zip(&policy.lambda_bar)
        .zip(&p.alpha)
        .map(|((w, &x), &a)| w * rate_term(x, a, b))
        .sum()
}

/// State-independent intensity maximising the instantaneous rate.
pub fn myopic_intensity(b: &SignalingBounds) -> f64 {
    let (lo, hi) = (b.lambda_min, b.lambda_max);
    hi / std::f64::consts::E * (lo / hi).powf(-lo / (hi - lo))
}

pub fn myopic_policy(b: &SignalingBounds, e_max: usize) -> SignalingPolicy {
    SignalingPolicy {
        lambda_bar: vec![myopic_intensity(b); e_max + 1],
    }
}

/// Sorted candidate intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGrid {
    values: Vec<f64>,
}

impl ActionGrid {
    /// `n >= 2` evenly spaced points spanning the bounds.
    pub fn uniform(b: &SignalingBounds, n: usize) -> Self {
        assert!(n >= 2, "grid needs at least two points");
        let step = (b.lambda_max - b.lambda_min) / (n - 1) as f64;
        let mut values: Vec<f64> = (0..n).map(|k| b.lambda_min + k as f64 * step).collect();
        values[n - 1] = b.lambda_max;
        Self { values }
    }

    /// Uniform grid with the myopic intensity added, so the myopic policy is
    /// always a candidate.
    pub fn with_myopic(b: &SignalingBounds, n: usize) -> Self {
        let mut g = Self::uniform(b, n);
        let mp = myopic_intensity(b);
        if !g.values.contains(&mp) {
            let at = g.values.partition_point(|&v| v < mp);
            g.values.insert(at, mp);
        }
        g
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest spacing between neighbouring points.
    pub fn max_step(&self) -> f64 {
        self.values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Grid point closest to `x` (lower one on ties).
    pub fn nearest(&self, x: f64) -> f64 {
        *self
            .values
            .iter()
            .min_by(|a, b| (*a - x).abs().total_cmp(&(*b - x).abs()))
            .expect("grid is non-empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Stop once a sweep improves the gain by less than this.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-14,
            max_sweeps: 10_000,
        }
    }
}

/// Gain and bias differences `h(i+1) - h(i)` of a fixed policy.
///
/// The bias equations of a birth-death chain reduce to a first-order
/// recursion in the differences. It is run forward from state 0 across the
/// low-probability head and backward from the top across the rest, so that
/// neither direction divides by vanishing stationary mass.
pub fn evaluate_policy(
    policy: &SignalingPolicy,
    p: &ReducedCableParams,
    b: &SignalingBounds,
) -> Result<(f64, Vec<f64>), EngineError> {
    let e = p.e_max;
    let pi = steady_state(policy, p)?;
    let r: Vec<f64> = (0..=e)
        .map(|i| rate_term(policy.lambda_bar[i], p.alpha[i], b))
        .collect();
    let gain: f64 = pi.iter().zip(&r).map(|(a, b)| a * b).sum();
    let c: Vec<f64> = r.iter().map(|x| x - gain).collect();
    let up: Vec<f64> = (0..e).map(|k| p.alpha[k] * policy.lambda_bar[k]).collect();

    let mut split = 0;
    let mut cdf = 0.0;
    while split < e {
        cdf += pi[split];
        if cdf >= 0.5 {
            break;
        }
        split += 1;
    }
    // flux[i] = mu(i+1) * d(i)
    let mut flux = vec![0.0; e];
    if split > 0 {
        flux[0] = -(p.mu[1] / up[0]) * c[0];
        for i in 1..split {
            flux[i] = (p.mu[i + 1] / up[i]) * (flux[i - 1] - c[i]);
        }
    }
    if split < e {
        flux[e - 1] = c[e];
        for i in (split..e - 1).rev() {
            flux[i] = c[i + 1] + (up[i + 1] / p.mu[i + 2]) * flux[i + 1];
        }
    }
    let d = (0..e).map(|i| flux[i] / p.mu[i + 1]).collect();
    Ok((gain, d))
}

/// Average-reward policy iteration over `grid`, starting from the grid point
/// nearest the myopic intensity.
pub fn optimize_policy(
    p: &ReducedCableParams,
    b: &SignalingBounds,
    grid: &ActionGrid,
    opts: &SolveOptions,
) -> Result<CapacityResult, CapacityError> {
    if let Some(msg) = p.violations().into_iter().next() {
        return Err(EngineError::InvalidArgument(msg).into());
    }
    if grid.values.len() < 2 || grid.values.iter().any(|&x| !b.contains(x)) {
        return Err(EngineError::InvalidArgument("action grid must have >= 2 points inside the bounds".into()).into());
    }
    let e = p.e_max;
    let uniformization = (0..=e).map(|i| p.alpha[i] * b.lambda_max + p.mu[i]).fold(0.0, f64::max);
    let start = grid.nearest(myopic_intensity(b));
    let mut policy = SignalingPolicy {
        lambda_bar: vec![start; e + 1],
    };
    policy.lambda_bar[e] = grid.values[0];
    let mut gains = Vec::new();
    for sweep in 1..=opts.max_sweeps {
        let (gain, d) = evaluate_policy(&policy, p, b)?;
        let improved = gains.last().is_none_or(|&g: &f64| gain - g >= opts.tolerance);
        gains.push(gain);
        let next = improve(&policy, &d, p, b, grid);
        if next == policy || !improved {
            let steady_state = steady_state(&policy, p)?;
            let rate = weighted_rate(&steady_state, &policy, p, b);
            return Ok(CapacityResult {
                policy,
                rate,
                steady_state,
                iterations: sweep,
                gains,
                uniformization,
            });
        }
        policy = next;
    }
    Err(CapacityError::NotConverged {
        sweeps: opts.max_sweeps,
        gain: gains.last().copied().unwrap_or(f64::NAN),
    })
}

fn improve(
    policy: &SignalingPolicy,
    d: &[f64],
    p: &ReducedCableParams,
    b: &SignalingBounds,
    grid: &ActionGrid,
) -> SignalingPolicy {
    let e = p.e_max;
    let mut next = policy.clone();
    for i in 0..=e {
        let slope = if i < e { p.alpha[i] * d[i] } else { 0.0 };
        let score = |x: f64| rate_term(x, p.alpha[i], b) + x * slope;
        let current = score(policy.lambda_bar[i]);
        let mut best = grid.values[0];
        let mut best_score = score(best);
        for &x in &grid.values[1..] {
            let s = score(x);
            if s > best_score {
                best = x;
                best_score = s;
            }
        }
        // the incumbent survives rounding-level ties
        let tol = 1e-13 * (1.0 + best_score.abs());
        if best_score > current + tol {
            next.lambda_bar[i] = best;
        }
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha_min: f64,
    pub rate_opt: f64,
    pub rate_mp: f64,
    pub gap_pct: f64,
}

/// Optimal and myopic rates for each clogging floor.
pub fn sweep_alpha_min(
    values: &[f64],
    e_max: usize,
    b: &SignalingBounds,
    grid: &ActionGrid,
    opts: &SolveOptions,
) -> Result<Vec<SweepRow>, CapacityError> {
    values
        .par_iter()
        .map(|&alpha_min| {
            let p = ReducedCableParams::linear(e_max, alpha_min)?;
            let opt = optimize_policy(&p, b, grid, opts)?;
            let mp = average_rate(&myopic_policy(b, e_max), &p, b)?;
            Ok(SweepRow {
                alpha_min,
                rate_opt: opt.rate,
                rate_mp: mp,
                gap_pct: 100.0 * (opt.rate - mp) / mp,
            })
        })
        .collect()
}
