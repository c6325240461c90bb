//! Gillespie direct method.
//!
//! Per event the stream is consumed in a fixed order: one `Exp(1)` variate
//! for the holding time, one uniform for channel selection, then whatever the
//! channel effect draws. When the holding time crosses a profile breakpoint
//! the clock advances to the breakpoint and the holding time is redrawn,
//! which is exact for piecewise-constant propensities.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::{EngineError, JumpProcess, DEFAULT_EVENT_CAP};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsaStep {
    pub dt: f64,
    pub channel: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    EventCapReached,
    /// An observer asked to stop after a sample.
    Stopped,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub digest: String,
    pub events: u64,
}

/// Uniformly sampled path. `samples[k]` is the state held just before
/// `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub samples: Vec<Vec<i64>>,
    pub meta: RunMeta,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn column(&self, name: &str) -> Option<Vec<i64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.samples.iter().map(|row| row[k]).collect())
    }

    pub fn last(&self) -> &[i64] {
        self.samples.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub event_cap: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

/// Hooks into a running simulation.
pub trait SimObserver<S> {
    fn on_event(&mut self, _t: f64, _channel: usize, _state: &S) -> Result<(), EngineError> {
        Ok(())
    }

    /// Return `true` to end the run right after this sample.
    fn stop_after_sample(&mut self, _t: f64, _row: &[i64]) -> bool {
        false
    }
}

pub struct NoObserver;

impl<S> SimObserver<S> for NoObserver {}

fn checked_total<P: JumpProcess + ?Sized>(process: &P, props: &[f64]) -> Result<f64, EngineError> {
    let mut total = 0.0;
    for (k, &a) in props.iter().enumerate() {
        if !(a.is_finite() && a >= 0.0) {
            return Err(EngineError::InvalidPropensity {
                channel: process.channel_name(k).to_string(),
                value: a,
            });
        }
        total += a;
    }
    Ok(total)
}

fn select_channel(props: &[f64], total: f64, rng: &mut SimRng) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, &a) in props.iter().enumerate() {
        if a > 0.0 {
            acc += a;
            last_positive = k;
            if target < acc {
                return k;
            }
        }
    }
    // rounding put `target` past the final partial sum
    last_positive
}

/// One direct-method step without breakpoint handling.
///
/// An absorbing state (all propensities zero) yields `dt = inf`, no channel,
/// and an unchanged state.
pub fn ssa_step<P: JumpProcess>(
    process: &P,
    state: &mut P::State,
    t: f64,
    rng: &mut SimRng,
) -> Result<SsaStep, EngineError> {
    let mut props = vec![0.0; process.channel_count()];
    process.propensities(state, t, &mut props);
    let total = checked_total(process, &props)?;
    if total <= 0.0 {
        return Ok(SsaStep {
            dt: f64::INFINITY,
            channel: None,
        });
    }
    let dt = rng.sample::<f64, _>(Exp1) / total;
    let k = select_channel(&props, total, rng);
    process.apply(k, state, rng)?;
    Ok(SsaStep { dt, channel: Some(k) })
}

/// When a time-average occupancy run ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunLength {
    Horizon(f64),
    Events(u64),
}

/// Fraction of time spent in each class `classify(state) < bins` over one
/// long run of a time-homogeneous process.
pub fn time_average_occupancy<P, F>(
    process: &P,
    init: &P::State,
    length: RunLength,
    rng: &mut SimRng,
    bins: usize,
    classify: F,
) -> Result<Vec<f64>, EngineError>
where
    P: JumpProcess,
    F: Fn(&P::State) -> usize,
{
    if !process.breakpoints().is_empty() {
        return Err(EngineError::InvalidArgument(
            "occupancy averaging needs time-homogeneous rates".into(),
        ));
    }
    let mut state = init.clone();
    let mut occ = vec![0.0; bins];
    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        let bin = classify(&state);
        let step = ssa_step(process, &mut state, t, rng)?;
        let (dt, done) = match length {
            RunLength::Horizon(h) if t + step.dt >= h => (h - t, true),
            RunLength::Horizon(_) => (step.dt, false),
            RunLength::Events(n) => {
                events += 1;
                (step.dt, events >= n || step.channel.is_none())
            }
        };
        if !dt.is_finite() {
            return Err(EngineError::InvalidArgument(
                "process absorbed before the run ended".into(),
            ));
        }
        occ[bin] += dt;
        t += dt;
        if done {
            break;
        }
    }
    occ.iter_mut().for_each(|o| *o /= t);
    Ok(occ)
}

/// Sample instants `k * period` for `k = 0..=floor(horizon / period)`.
pub(crate) fn sample_times(horizon: f64, period: f64) -> Vec<f64> {
    let n = (horizon / period + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * period).collect()
}

pub fn simulate<P: JumpProcess>(
    process: &P,
    init: &P::State,
    horizon: f64,
    period: f64,
    rng: &mut SimRng,
    opts: &SimOptions,
) -> Result<Trajectory, EngineError> {
    simulate_observed(process, init, horizon, period, rng, opts, &mut NoObserver)
}

pub fn simulate_observed<P, O>(
    process: &P,
    init: &P::State,
    horizon: f64,
    period: f64,
    rng: &mut SimRng,
    opts: &SimOptions,
    observer: &mut O,
) -> Result<Trajectory, EngineError>
where
    P: JumpProcess,
    O: SimObserver<P::State> + ?Sized,
{
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(EngineError::InvalidArgument(format!(
            "horizon must be > 0, got {horizon}"
        )));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(EngineError::InvalidArgument(format!(
            "sample period must be > 0, got {period}"
        )));
    }

    let grid = sample_times(horizon, period);
    let barriers: Vec<f64> = process
        .breakpoints()
        .iter()
        .copied()
        .filter(|&b| b > 0.0 && b < horizon)
        .chain(std::iter::once(horizon))
        .collect();

    let mut state = init.clone();
    let mut props = vec![0.0; process.channel_count()];
    let mut row = Vec::new();
    let mut samples = Vec::with_capacity(grid.len());
    let mut next_sample = 0usize;
    let mut next_barrier = 0usize;
    let mut t = 0.0;
    let mut events = 0u64;
    let mut status = RunStatus::Completed;

    // Emits every pending sample with time <= `upto`; returns true on stop.
    let mut emit =
        |upto: f64, state: &P::State, samples: &mut Vec<Vec<i64>>, next_sample: &mut usize, observer: &mut O| -> bool {
            while *next_sample < grid.len() && grid[*next_sample] <= upto {
                process.observe(state, &mut row);
                let stop = observer.stop_after_sample(grid[*next_sample], &row);
                samples.push(row.clone());
                *next_sample += 1;
                if stop {
                    return true;
                }
            }
            false
        };

    'run: loop {
        let barrier = barriers[next_barrier];
        process.propensities(&state, t, &mut props);
        let total = checked_total(process, &props)?;
        let t_next = if total > 0.0 {
            t + rng.sample::<f64, _>(Exp1) / total
        } else {
            f64::INFINITY
        };

        if t_next >= barrier {
            let last = next_barrier + 1 == barriers.len();
            let upto = if last { f64::INFINITY } else { barrier };
            if emit(upto, &state, &mut samples, &mut next_sample, observer) {
                status = RunStatus::Stopped;
                break 'run;
            }
            if last {
                break 'run;
            }
            t = barrier;
            next_barrier += 1;
            continue;
        }

        if emit(t_next, &state, &mut samples, &mut next_sample, observer) {
            status = RunStatus::Stopped;
            break 'run;
        }
        let k = select_channel(&props, total, rng);
        process.apply(k, &mut state, rng)?;
        events += 1;
        t = t_next;
        observer.on_event(t, k, &state)?;
        if events >= opts.event_cap {
            status = RunStatus::EventCapReached;
            break 'run;
        }
    }

    let times = grid[..samples.len()].to_vec();
    Ok(Trajectory {
        names: process.observable_names(),
        times,
        samples,
        meta: RunMeta {
            seed: None,
            stream: None,
            digest: process.digest().to_string(),
            events,
        },
        status,
    })
}
