use super::{observable_names, ColonyCounts, ColonyModel, Family, Mechanism, MAX_INTERFERERS};
use crate::engine::{Capacity, EngineError, ReactionNetwork, StateSchema};

/// Aggregate chain over `(N, A, R_tot, C_tot, S_tot)` with event ledgers.
///
/// Duplication needs no split here: the totals do not change when a cell's
/// content is divided between its daughters.
pub fn build_colony_network(model: &ColonyModel) -> Result<ReactionNetwork, EngineError> {
    if let Some(msg) = model.violations().into_iter().next() {
        return Err(EngineError::InvalidArgument(msg));
    }
    let mut schema = StateSchema::new();
    let names = observable_names(model);
    let idx: Vec<usize> = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let cap = if (5..9).contains(&k) {
                Capacity::Counter
            } else {
                Capacity::Unbounded
            };
            schema.push(name.clone(), cap)
        })
        .collect();
    let (n, a, r, c, s, v, produced, lost, degraded) =
        (idx[0], idx[1], idx[2], idx[3], idx[4], idx[5], idx[6], idx[7], idx[8]);
    let inter = |k: usize| idx[9 + k];

    let mut b = ReactionNetwork::builder(schema);
    for f in model.families() {
        let delta = match f {
            Family::Duplication => vec![(n, 1)],
            Family::Synthesis => vec![(a, 1), (produced, 1)],
            Family::Unbinding => vec![(a, 1), (r, 1), (c, -1)],
            Family::Leakage => vec![(a, -1), (lost, 1)],
            Family::ReceptorCreation => vec![(r, 1)],
            Family::ReceptorDegradation => vec![(r, -1)],
            Family::ComplexFormation => vec![(a, -1), (r, -1), (c, 1)],
            Family::ComplexDegradation => vec![(c, -1), (degraded, 1)],
            Family::SynthaseCreation => vec![(s, 1)],
            Family::SynthaseDegradation => vec![(s, -1)],
            Family::Virulence => vec![(v, 1)],
            Family::Injection(k) => vec![(inter(k), 1)],
            Family::InterfererLoss(k) => vec![(inter(k), -1)],
            Family::Binding(k) => match model.interference[k].mechanism {
                Mechanism::ReceptorInhibition => vec![(inter(k), -1), (r, -1)],
                Mechanism::SynthaseBlocking => vec![(inter(k), -1), (s, -1)],
                Mechanism::AutoinducerDegradation => vec![(inter(k), -1), (a, -1), (lost, 1)],
            },
        };
        let m = model.clone();
        let ni = model.interference.len();
        b = b.channel(
            model.family_name(f),
            move |st, _| {
                let mut i = [0; MAX_INTERFERERS];
                i[..ni].copy_from_slice(&st[9..9 + ni]);
                let x = ColonyCounts {
                    n: st[n],
                    a: st[a],
                    r: st[r],
                    c: st[c],
                    s: st[s],
                    i,
                };
                m.family_rate(f, &x)
            },
            crate::engine::Effect::Delta(delta),
        );
    }
    b.digest(format!("colony:{:?}", model)).build()
}
