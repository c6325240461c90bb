//! Exact simulation and master-equation tools for continuous-time Markov
//! jump processes over integer states.

mod cme;
mod ensemble;
mod generator;
mod network;
mod ssa;
mod stationary;

pub use cme::{cme_expectations, CmeOptions, CmeSeries};
pub use ensemble::{ensemble_mean, run_ensemble, EnsembleStats};
pub use generator::{Generator, PiecewiseGenerator, StateSpace};
pub use network::{
    Capacity, Component, Effect, EventChannel, NetworkBuilder, PropensityFn, ReactionNetwork, StateSchema, StateVector,
    TransformFn,
};
pub use ssa::{
    simulate, simulate_observed, ssa_step, time_average_occupancy, NoObserver, RunLength, RunMeta, RunStatus,
    SimObserver, SimOptions, SsaStep, Trajectory,
};
pub use stationary::stationary_distribution;

use thiserror::Error;

use crate::rng::SimRng;

/// Default largest state space handed to dense or master-equation solvers.
pub const DEFAULT_STATE_CAP: usize = 4096;

/// Default per-trajectory event budget.
pub const DEFAULT_EVENT_CAP: u64 = 5_000_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("channel `{channel}` has invalid propensity {value} (must be finite and >= 0)")]
    InvalidPropensity { channel: String, value: f64 },
    #[error("channel `{channel}` drives `{component}` to {value}, outside its bounds")]
    BoundViolation {
        channel: String,
        component: String,
        value: i64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("state space has {states} states, above the cap of {cap}; use an SSA ensemble instead")]
    StateSpaceTooLarge { states: usize, cap: usize },
    #[error("network cannot be enumerated: {0}")]
    NotEnumerable(String),
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("chain is reducible: {} closed classes, first states {:?}", blocks.len(), blocks.iter().map(|b| b[0]).collect::<Vec<_>>())]
    Reducible { blocks: Vec<Vec<usize>> },
    #[error("linear solve failed: {0}")]
    Singular(String),
    #[error("probability mass drifted by {drift:e} at t = {t}")]
    MassDrift { t: f64, drift: f64 },
    #[error("run {run}: {source}")]
    RunFailed {
        run: u64,
        #[source]
        source: Box<EngineError>,
    },
    #[error("run {run} ended early ({status:?}); ensemble statistics need complete trajectories")]
    IncompleteRun { run: u64, status: RunStatus },
}

/// A continuous-time Markov jump process the SSA can drive.
///
/// Channel `k` fires with propensity `propensities(..)[k]`. Propensities must
/// be constant between consecutive `breakpoints()`.
pub trait JumpProcess: Sync {
    type State: Clone + Send;

    fn channel_count(&self) -> usize;
    fn channel_name(&self, k: usize) -> &str;
    fn propensities(&self, state: &Self::State, t: f64, out: &mut [f64]);
    fn apply(&self, k: usize, state: &mut Self::State, rng: &mut SimRng) -> Result<(), EngineError>;

    fn breakpoints(&self) -> &[f64] {
        &[]
    }

    /// Column names of a sampled row.
    fn observable_names(&self) -> Vec<String>;
    fn observe(&self, state: &Self::State, out: &mut Vec<i64>);

    fn digest(&self) -> &str {
        ""
    }
}
