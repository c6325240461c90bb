//! Explicit generators over enumerated finite state spaces.

use nalgebra::DMatrix;

use super::network::{Capacity, Effect, ReactionNetwork, StateVector};
use super::EngineError;

const ROW_SUM_TOL: f64 = 1e-12;

/// Sparse CTMC rate matrix: off-diagonal rates per row plus the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    off: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl Generator {
    /// Build from `(from, to, rate)` triples. Repeated pairs add up; zero
    /// rates and self-loops are dropped.
    pub fn from_transitions(
        n: usize,
        transitions: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, EngineError> {
        let mut off: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, r) in transitions {
            if i >= n || j >= n {
                return Err(EngineError::InvalidGenerator(format!(
                    "transition {i} -> {j} outside {n} states"
                )));
            }
            if !(r.is_finite() && r >= 0.0) {
                return Err(EngineError::InvalidGenerator(format!(
                    "rate {r} for {i} -> {j} must be finite and >= 0"
                )));
            }
            if i == j || r == 0.0 {
                continue;
            }
            match off[i].iter_mut().find(|(k, _)| *k == j) {
                Some(entry) => entry.1 += r,
                None => off[i].push((j, r)),
            }
        }
        for row in &mut off {
            row.sort_by_key(|&(j, _)| j);
        }
        let diag = off.iter().map(|row| -row.iter().map(|(_, r)| r).sum::<f64>()).collect();
        Ok(Self { off, diag })
    }

    /// Validate and convert a dense square matrix.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, EngineError> {
        let n = rows.len();
        let mut off = vec![Vec::new(); n];
        let mut diag = vec![0.0; n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(EngineError::InvalidGenerator(format!(
                    "row {i} has length {}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if i == j {
                    diag[i] = v;
                } else if v < 0.0 || !v.is_finite() {
                    return Err(EngineError::InvalidGenerator(format!("entry ({i},{j}) = {v}")));
                } else if v > 0.0 {
                    off[i].push((j, v));
                }
            }
        }
        let g = Self { off, diag };
        g.validate()?;
        Ok(g)
    }

    /// Birth-death chain on `{0..=K}`: `up[i]` is the rate `i -> i+1`,
    /// `down[i]` the rate `i+1 -> i`.
    pub fn birth_death(up: &[f64], down: &[f64]) -> Result<Self, EngineError> {
        if up.len() != down.len() {
            return Err(EngineError::InvalidGenerator("up/down lengths differ".into()));
        }
        let n = up.len() + 1;
        let moves = up
            .iter()
            .enumerate()
            .map(|(i, &r)| (i, i + 1, r))
            .chain(down.iter().enumerate().map(|(i, &r)| (i + 1, i, r)));
        Self::from_transitions(n, moves)
    }

    /// Off-diagonals non-negative, each diagonal minus its row's off-diagonal sum.
    pub fn validate(&self) -> Result<(), EngineError> {
        for (i, row) in self.off.iter().enumerate() {
            let s: f64 = row.iter().map(|&(_, r)| r).sum();
            if row.iter().any(|&(_, r)| r < 0.0) {
                return Err(EngineError::InvalidGenerator(format!("negative rate in row {i}")));
            }
            if (s + self.diag[i]).abs() > ROW_SUM_TOL * s.max(1.0) {
                return Err(EngineError::InvalidGenerator(format!(
                    "row {i} sums to {}",
                    s + self.diag[i]
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        self.off[i].iter().find(|(k, _)| *k == j).map_or(0.0, |&(_, r)| r)
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.off[i]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.diag[i] + self.off[i].iter().map(|&(_, r)| r).sum::<f64>()
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.diag.iter().fold(0.0, |m, &d| m.max(-d))
    }

    /// `out = p^T G`.
    pub fn left_mul(&self, p: &[f64], out: &mut [f64]) {
        for (o, (&pi, &d)) in out.iter_mut().zip(p.iter().zip(&self.diag)) {
            *o = pi * d;
        }
        for (i, row) in self.off.iter().enumerate() {
            let pi = p[i];
            if pi != 0.0 {
                for &(j, r) in row {
                    out[j] += pi * r;
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &(j, r) in &self.off[i] {
                m[(i, j)] = r;
            }
        }
        m
    }
}

/// Generators switched at breakpoints: `gens[k]` holds from `starts[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseGenerator {
    starts: Vec<f64>,
    gens: Vec<Generator>,
}

impl PiecewiseGenerator {
    pub fn constant(gen: Generator) -> Self {
        Self {
            starts: vec![0.0],
            gens: vec![gen],
        }
    }

    pub fn new(starts: Vec<f64>, gens: Vec<Generator>) -> Result<Self, EngineError> {
        if gens.is_empty() || starts.len() != gens.len() || starts[0] != 0.0 {
            return Err(EngineError::InvalidGenerator(
                "piecewise generator needs matching starts beginning at 0".into(),
            ));
        }
        if starts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EngineError::InvalidGenerator("starts must increase".into()));
        }
        let n = gens[0].len();
        if gens.iter().any(|g| g.len() != n) {
            return Err(EngineError::InvalidGenerator("pieces differ in size".into()));
        }
        Ok(Self { starts, gens })
    }

    pub fn len(&self) -> usize {
        self.gens[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, &Generator)> {
        self.starts.iter().copied().zip(&self.gens)
    }

    pub fn at(&self, t: f64) -> &Generator {
        let k = self.starts.partition_point(|&s| s <= t).max(1) - 1;
        &self.gens[k]
    }
}

/// Mixed-radix enumeration of the bounded components of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    /// `(component index, capacity)` of each enumerated component.
    dims: Vec<(usize, i64)>,
    width: usize,
    len: usize,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Full-width state for `index`; counters read as zero.
    pub fn state(&self, mut index: usize) -> StateVector {
        let mut s = vec![0; self.width];
        for &(c, cap) in self.dims.iter().rev() {
            let radix = (cap + 1) as usize;
            s[c] = (index % radix) as i64;
            index /= radix;
        }
        StateVector(s)
    }

    pub fn index_of(&self, s: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for &(c, cap) in &self.dims {
            let v = s[c];
            if !(0..=cap).contains(&v) {
                return None;
            }
            idx = idx * (cap + 1) as usize + v as usize;
        }
        Some(idx)
    }

    /// Value of component `c` in every state, for expectation observables.
    pub fn component_values(&self, c: usize) -> Vec<f64> {
        (0..self.len).map(|i| self.state(i)[c] as f64).collect()
    }

    pub fn point_mass(&self, s: &[i64]) -> Option<Vec<f64>> {
        let i = self.index_of(s)?;
        let mut p = vec![0.0; self.len];
        p[i] = 1.0;
        Some(p)
    }
}

impl ReactionNetwork {
    /// Enumerate every non-counter component; all must be bounded.
    pub fn state_space(&self, cap: usize) -> Result<StateSpace, EngineError> {
        let mut dims = Vec::new();
        let mut len = 1usize;
        for (c, comp) in self.schema().components().iter().enumerate() {
            match comp.capacity {
                Capacity::Bounded(k) => {
                    dims.push((c, k));
                    len = len.saturating_mul((k + 1) as usize);
                }
                Capacity::Counter => {}
                Capacity::Unbounded => {
                    return Err(EngineError::NotEnumerable(format!(
                        "component `{}` is unbounded",
                        comp.name
                    )))
                }
            }
        }
        if len > cap {
            return Err(EngineError::StateSpaceTooLarge { states: len, cap });
        }
        if let Some(ch) = self
            .channels()
            .iter()
            .find(|ch| matches!(ch.effect, Effect::Transform(_)))
        {
            return Err(EngineError::NotEnumerable(format!(
                "channel `{}` has a custom effect",
                ch.name
            )));
        }
        Ok(StateSpace {
            dims,
            width: self.schema().len(),
            len,
        })
    }

    /// Generator of the enumerated chain with propensities frozen at `t`.
    pub fn generator_at(&self, space: &StateSpace, t: f64) -> Result<Generator, EngineError> {
        let mut moves = Vec::new();
        for i in 0..space.len() {
            let s = space.state(i);
            for ch in self.channels() {
                let a = (ch.propensity)(&s, t);
                if !(a.is_finite() && a >= 0.0) {
                    return Err(EngineError::InvalidPropensity {
                        channel: ch.name.clone(),
                        value: a,
                    });
                }
                if a == 0.0 {
                    continue;
                }
                let Effect::Delta(deltas) = &ch.effect else {
                    unreachable!("state_space rejects transform effects")
                };
                let mut next = s.clone();
                for &(c, d) in deltas {
                    next[c] += d;
                }
                let j = space.index_of(&next).ok_or_else(|| EngineError::BoundViolation {
                    channel: ch.name.clone(),
                    component: format!("{:?}", next.0),
                    value: 0,
                })?;
                moves.push((i, j, a));
            }
        }
        Generator::from_transitions(space.len(), moves)
    }

    /// One generator per constant piece of the network's profiles up to `horizon`.
    pub fn piecewise_generator(&self, space: &StateSpace, horizon: f64) -> Result<PiecewiseGenerator, EngineError> {
        use super::JumpProcess;
        let mut starts = vec![0.0];
        starts.extend(self.breakpoints().iter().copied().filter(|&b| b > 0.0 && b < horizon));
        let gens = starts
            .iter()
            .map(|&t| self.generator_at(space, t))
            .collect::<Result<Vec<_>, _>>()?;
        PiecewiseGenerator::new(starts, gens)
    }
}
