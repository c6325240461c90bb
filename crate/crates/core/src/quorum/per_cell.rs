use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::{observable_names, ColonyCounts, ColonyModel, Family, Mechanism, MAX_INTERFERERS};
use crate::engine::{EngineError, JumpProcess};
use crate::rng::SimRng;

/// Split a dividing cell's `(R, C, S)` content: every molecule goes to either
/// daughter with probability 1/2.
pub fn duplicate_split(cell: (i64, i64, i64), rng: &mut SimRng) -> ((i64, i64, i64), (i64, i64, i64)) {
    let half = |k: i64, rng: &mut SimRng| -> i64 {
        if k == 0 {
            0
        } else {
            Binomial::new(k as u64, 0.5).expect("valid binomial").sample(rng) as i64
        }
    };
    let r = half(cell.0, rng);
    let c = half(cell.1, rng);
    let s = half(cell.2, rng);
    ((r, c, s), (cell.0 - r, cell.1 - c, cell.2 - s))
}

/// Colony state with per-cell receptor, complex and synthase counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CellVectors {
    pub a: i64,
    pub r: Vec<i64>,
    pub c: Vec<i64>,
    pub s: Vec<i64>,
    totals: [i64; 3],
    pub v_expr: i64,
    pub produced_a: i64,
    pub lost_a: i64,
    pub degraded_c: i64,
    pub i: [i64; MAX_INTERFERERS],
}

impl CellVectors {
    pub fn n(&self) -> i64 {
        self.r.len() as i64
    }

    fn counts(&self) -> ColonyCounts {
        ColonyCounts {
            n: self.n(),
            a: self.a,
            r: self.totals[0],
            c: self.totals[1],
            s: self.totals[2],
            i: self.i,
        }
    }

    /// Recompute totals from the vectors.
    pub fn check_totals(&self) -> bool {
        self.totals
            == [
                self.r.iter().sum::<i64>(),
                self.c.iter().sum::<i64>(),
                self.s.iter().sum::<i64>(),
            ]
    }
}

/// Per-cell colony chain. Each event family has the same total rate as in
/// the aggregate chain; the acting cell is drawn in proportion to its share.
pub struct PerCellColony {
    model: ColonyModel,
    families: Vec<Family>,
    names: Vec<String>,
}

impl PerCellColony {
    pub fn new(model: ColonyModel) -> Self {
        let families = model.families();
        let names = families.iter().map(|&f| model.family_name(f)).collect();
        Self { model, families, names }
    }

    pub fn single_cell(&self) -> CellVectors {
        CellVectors {
            a: 0,
            r: vec![0],
            c: vec![0],
            s: vec![0],
            totals: [0; 3],
            v_expr: 0,
            produced_a: 0,
            lost_a: 0,
            degraded_c: 0,
            i: [0; MAX_INTERFERERS],
        }
    }
}

/// Index drawn with probability `weight(j) / sum`.
fn pick(n: usize, weight: impl Fn(usize) -> f64, rng: &mut SimRng) -> usize {
    let total: f64 = (0..n).map(&weight).sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for j in 0..n {
        let w = weight(j);
        if w > 0.0 {
            acc += w;
            last = j;
            if target < acc {
                return j;
            }
        }
    }
    last
}

fn take(v: &mut [i64], j: usize, family: &str, what: &str) -> Result<(), EngineError> {
    if v[j] == 0 {
        return Err(EngineError::BoundViolation {
            channel: family.into(),
            component: format!("{what}[{j}]"),
            value: -1,
        });
    }
    v[j] -= 1;
    Ok(())
}

impl JumpProcess for PerCellColony {
    type State = CellVectors;

    fn channel_count(&self) -> usize {
        self.families.len()
    }

    fn channel_name(&self, k: usize) -> &str {
        &self.names[k]
    }

    fn propensities(&self, state: &CellVectors, _t: f64, out: &mut [f64]) {
        let x = state.counts();
        for (o, &f) in out.iter_mut().zip(&self.families) {
            *o = self.model.family_rate(f, &x);
        }
    }

    fn apply(&self, k: usize, st: &mut CellVectors, rng: &mut SimRng) -> Result<(), EngineError> {
        let p = &self.model.params;
        let name = &self.names[k];
        let n = st.r.len();
        match self.families[k] {
            Family::Duplication => {
                let j = rng.random_range(0..n);
                let (keep, give) = duplicate_split((st.r[j], st.c[j], st.s[j]), rng);
                (st.r[j], st.c[j], st.s[j]) = keep;
                st.r.push(give.0);
                st.c.push(give.1);
                st.s.push(give.2);
            }
            Family::Synthesis => {
                st.a += 1;
                st.produced_a += 1;
            }
            Family::Unbinding => {
                let j = pick(n, |j| st.c[j] as f64, rng);
                take(&mut st.c, j, name, "C")?;
                st.r[j] += 1;
                st.a += 1;
                st.totals[0] += 1;
                st.totals[1] -= 1;
            }
            Family::Leakage => {
                st.a -= 1;
                st.lost_a += 1;
            }
            Family::ReceptorCreation => {
                let j = pick(n, |j| p.eps0[1] / p.quanta + st.c[j] as f64 * p.eps_c[1], rng);
                st.r[j] += 1;
                st.totals[0] += 1;
            }
            Family::ReceptorDegradation => {
                let j = pick(n, |j| st.r[j] as f64, rng);
                take(&mut st.r, j, name, "R")?;
                st.totals[0] -= 1;
            }
            Family::ComplexFormation => {
                let j = pick(n, |j| st.r[j] as f64, rng);
                take(&mut st.r, j, name, "R")?;
                st.c[j] += 1;
                st.a -= 1;
                st.totals[0] -= 1;
                st.totals[1] += 1;
            }
            Family::ComplexDegradation => {
                let j = pick(n, |j| st.c[j] as f64, rng);
                take(&mut st.c, j, name, "C")?;
                st.totals[1] -= 1;
                st.degraded_c += 1;
            }
            Family::SynthaseCreation => {
                let j = pick(n, |j| p.eps0[0] / p.quanta + st.c[j] as f64 * p.eps_c[0], rng);
                st.s[j] += 1;
                st.totals[2] += 1;
            }
            Family::SynthaseDegradation => {
                let j = pick(n, |j| st.s[j] as f64, rng);
                take(&mut st.s, j, name, "S")?;
                st.totals[2] -= 1;
            }
            Family::Virulence => st.v_expr += 1,
            Family::Injection(i) => st.i[i] += 1,
            Family::InterfererLoss(i) => st.i[i] -= 1,
            Family::Binding(i) => {
                st.i[i] -= 1;
                match self.model.interference[i].mechanism {
                    Mechanism::ReceptorInhibition => {
                        let j = pick(n, |j| st.r[j] as f64, rng);
                        take(&mut st.r, j, name, "R")?;
                        st.totals[0] -= 1;
                    }
                    Mechanism::SynthaseBlocking => {
                        let j = pick(n, |j| st.s[j] as f64, rng);
                        take(&mut st.s, j, name, "S")?;
                        st.totals[2] -= 1;
                    }
                    Mechanism::AutoinducerDegradation => {
                        st.a -= 1;
                        st.lost_a += 1;
                    }
                }
            }
        }
        if st.a < 0 || st.i.iter().any(|&v| v < 0) {
            return Err(EngineError::BoundViolation {
                channel: name.clone(),
                component: "A or I".into(),
                value: -1,
            });
        }
        Ok(())
    }

    fn observable_names(&self) -> Vec<String> {
        observable_names(&self.model)
    }

    fn observe(&self, st: &CellVectors, out: &mut Vec<i64>) {
        out.clear();
        out.extend_from_slice(&[
            st.n(),
            st.a,
            st.totals[0],
            st.totals[1],
            st.totals[2],
            st.v_expr,
            st.produced_a,
            st.lost_a,
            st.degraded_c,
        ]);
        out.extend_from_slice(&st.i[..self.model.interference.len()]);
    }
}
