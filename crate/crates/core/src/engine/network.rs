//! Reaction networks over named integer state vectors.

use std::collections::HashSet;
use std::ops::{Deref, DerefMut};

use crate::engine::{EngineError, JumpProcess};
use crate::rng::SimRng;

/// How a state component is bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capacity {
    /// Values in `0..=cap`.
    Bounded(i64),
    /// Any non-negative value.
    Unbounded,
    /// Cumulative event ledger. Never read by propensities; skipped when the
    /// state space is enumerated.
    Counter,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub name: String,
    pub capacity: Capacity,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StateSchema {
    components: Vec<Component>,
}

impl StateSchema {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a component and return its index.
    pub fn push(&mut self, name: impl Into<String>, capacity: Capacity) -> usize {
        self.components.push(Component {
            name: name.into(),
            capacity,
        });
        self.components.len() - 1
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.components.iter().map(|c| c.name.clone()).collect()
    }

    pub fn zero(&self) -> StateVector {
        StateVector(vec![0; self.components.len()])
    }

    /// Build a state from `(name, value)` pairs; unnamed components are zero.
    pub fn state(&self, values: &[(&str, i64)]) -> Result<StateVector, EngineError> {
        let mut s = self.zero();
        for &(name, v) in values {
            let k = self
                .index(name)
                .ok_or_else(|| EngineError::InvalidArgument(format!("unknown component `{name}`")))?;
            s[k] = v;
        }
        self.check(&s).map_err(|(component, value)| {
            EngineError::InvalidArgument(format!("component `{component}` = {value} is out of bounds"))
        })?;
        Ok(s)
    }

    fn in_bounds(&self, k: usize, v: i64) -> bool {
        match self.components[k].capacity {
            Capacity::Bounded(cap) => (0..=cap).contains(&v),
            Capacity::Unbounded | Capacity::Counter => v >= 0,
        }
    }

    /// First out-of-bounds component, as `(name, value)`.
    pub fn check(&self, s: &[i64]) -> Result<(), (String, i64)> {
        if s.len() != self.components.len() {
            return Err(("<length>".into(), s.len() as i64));
        }
        match (0..s.len()).find(|&k| !self.in_bounds(k, s[k])) {
            Some(k) => Err((self.components[k].name.clone(), s[k])),
            None => Ok(()),
        }
    }
}

/// Ordered integer counts; component names live in the owning [`StateSchema`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateVector(pub Vec<i64>);

impl Deref for StateVector {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl DerefMut for StateVector {
    fn deref_mut(&mut self) -> &mut [i64] {
        &mut self.0
    }
}

pub type PropensityFn = Box<dyn Fn(&[i64], f64) -> f64 + Send + Sync>;
pub type TransformFn = Box<dyn Fn(&mut [i64], &mut SimRng) + Send + Sync>;

pub enum Effect {
    /// Add each `(component, delta)` pair.
    Delta(Vec<(usize, i64)>),
    /// Arbitrary, possibly random, rewrite. Random draws come after event
    /// selection on the same stream.
    Transform(TransformFn),
}

impl std::fmt::Debug for Effect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Effect::Delta(d) => f.debug_tuple("Delta").field(d).finish(),
            Effect::Transform(_) => f.write_str("Transform(..)"),
        }
    }
}

pub struct EventChannel {
    pub name: String,
    pub propensity: PropensityFn,
    pub effect: Effect,
}

impl std::fmt::Debug for EventChannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventChannel")
            .field("name", &self.name)
            .field("effect", &self.effect)
            .finish_non_exhaustive()
    }
}

/// A continuous-time Markov jump process given by event channels.
///
/// Propensities may depend on time only through the staircase profiles whose
/// change points are listed in `breakpoints`.
#[derive(Debug)]
pub struct ReactionNetwork {
    schema: StateSchema,
    channels: Vec<EventChannel>,
    breakpoints: Vec<f64>,
    digest: String,
}

pub struct NetworkBuilder {
    schema: StateSchema,
    channels: Vec<EventChannel>,
    breakpoints: Vec<f64>,
    digest: String,
}

impl NetworkBuilder {
    pub fn channel(
        mut self,
        name: impl Into<String>,
        propensity: impl Fn(&[i64], f64) -> f64 + Send + Sync + 'static,
        effect: Effect,
    ) -> Self {
        self.channels.push(EventChannel {
            name: name.into(),
            propensity: Box::new(propensity),
            effect,
        });
        self
    }

    pub fn breakpoints(mut self, mut bps: Vec<f64>) -> Self {
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        self.breakpoints = bps;
        self
    }

    /// Parameter digest recorded in trajectory metadata.
    pub fn digest(mut self, digest: impl Into<String>) -> Self {
        self.digest = digest.into();
        self
    }

    pub fn build(self) -> Result<ReactionNetwork, EngineError> {
        let mut seen = HashSet::new();
        for ch in &self.channels {
            if !seen.insert(ch.name.as_str()) {
                return Err(EngineError::InvalidArgument(format!(
                    "duplicate channel name `{}`",
                    ch.name
                )));
            }
            if let Effect::Delta(d) = &ch.effect {
                if let Some(&(k, _)) = d.iter().find(|(k, _)| *k >= self.schema.len()) {
                    return Err(EngineError::InvalidArgument(format!(
                        "channel `{}` touches component {k}, schema has {}",
                        ch.name,
                        self.schema.len()
                    )));
                }
            }
        }
        Ok(ReactionNetwork {
            schema: self.schema,
            channels: self.channels,
            breakpoints: self.breakpoints,
            digest: self.digest,
        })
    }
}

impl ReactionNetwork {
    pub fn builder(schema: StateSchema) -> NetworkBuilder {
        NetworkBuilder {
            schema,
            channels: Vec::new(),
            breakpoints: Vec::new(),
            digest: String::new(),
        }
    }

    pub fn schema(&self) -> &StateSchema {
        &self.schema
    }

    pub fn channels(&self) -> &[EventChannel] {
        &self.channels
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    /// Propensity of the named channel at `(state, t)`.
    pub fn rate(&self, name: &str, state: &[i64], t: f64) -> Option<f64> {
        self.channel_index(name)
            .map(|k| (self.channels[k].propensity)(state, t))
    }
}

impl JumpProcess for ReactionNetwork {
    type State = StateVector;

    fn channel_count(&self) -> usize {
        self.channels.len()
    }

    fn channel_name(&self, k: usize) -> &str {
        &self.channels[k].name
    }

    fn propensities(&self, state: &StateVector, t: f64, out: &mut [f64]) {
        for (o, ch) in out.iter_mut().zip(&self.channels) {
            *o = (ch.propensity)(state, t);
        }
    }

    fn apply(&self, k: usize, state: &mut StateVector, rng: &mut SimRng) -> Result<(), EngineError> {
        let ch = &self.channels[k];
        match &ch.effect {
            Effect::Delta(deltas) => {
                for &(c, d) in deltas {
                    let v = state[c] + d;
                    if !self.schema.in_bounds(c, v) {
                        return Err(EngineError::BoundViolation {
                            channel: ch.name.clone(),
                            component: self.schema.components[c].name.clone(),
                            value: v,
                        });
                    }
                }
                for &(c, d) in deltas {
                    state[c] += d;
                }
            }
            Effect::Transform(f) => {
                f(state, rng);
                if let Err((component, value)) = self.schema.check(state) {
                    return Err(EngineError::BoundViolation {
                        channel: ch.name.clone(),
                        component,
                        value,
                    });
                }
            }
        }
        Ok(())
    }

    fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    fn observable_names(&self) -> Vec<String> {
        self.schema.names()
    }

    fn observe(&self, state: &StateVector, out: &mut Vec<i64>) {
        out.clear();
        out.extend_from_slice(state);
    }

    fn digest(&self) -> &str {
        &self.digest
    }
}
