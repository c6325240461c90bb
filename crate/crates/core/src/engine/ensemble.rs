use rayon::prelude::*;

use super::{simulate, EngineError, JumpProcess, RunStatus, SimOptions, Trajectory};
use crate::rng;

/// Per-sample-instant mean and (unbiased) variance of every observable.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// `mean[k][c]`: component `c` at `times[k]`.
    pub mean: Vec<Vec<f64>>,
    pub variance: Vec<Vec<f64>>,
    pub runs: usize,
}

impl EnsembleStats {
    pub fn standard_error(&self, k: usize, c: usize) -> f64 {
        (self.variance[k][c] / self.runs as f64).sqrt()
    }

    pub fn column_mean(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.names.iter().position(|n| n == name)?;
        Some(self.mean.iter().map(|row| row[c]).collect())
    }
}

/// Run `n_runs` independent trajectories; run `r` uses stream `(base_seed, r)`.
///
/// Runs execute on the current rayon pool; the result is ordered by run index.
pub fn run_ensemble<P: JumpProcess>(
    process: &P,
    init: &P::State,
    horizon: f64,
    period: f64,
    n_runs: usize,
    base_seed: u64,
    opts: &SimOptions,
) -> Result<Vec<Trajectory>, EngineError>
where
    P::State: Sync,
{
    if n_runs == 0 {
        return Err(EngineError::InvalidArgument("n_runs must be >= 1".into()));
    }
    (0..n_runs as u64)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng::stream(base_seed, r);
            let mut tr =
                simulate(process, init, horizon, period, &mut stream, opts).map_err(|e| EngineError::RunFailed {
                    run: r,
                    source: Box::new(e),
                })?;
            tr.meta.seed = Some(base_seed);
            tr.meta.stream = Some(r);
            Ok(tr)
        })
        .collect()
}

pub fn ensemble_mean<P: JumpProcess>(
    process: &P,
    init: &P::State,
    horizon: f64,
    period: f64,
    n_runs: usize,
    base_seed: u64,
    opts: &SimOptions,
) -> Result<EnsembleStats, EngineError>
where
    P::State: Sync,
{
    let runs = run_ensemble(process, init, horizon, period, n_runs, base_seed, opts)?;
    aggregate(&runs)
}

/// Welford accumulation in run-index order.
pub(crate) fn aggregate(runs: &[Trajectory]) -> Result<EnsembleStats, EngineError> {
    let first = &runs[0];
    for (r, tr) in runs.iter().enumerate() {
        if tr.status != RunStatus::Completed {
            return Err(EngineError::IncompleteRun {
                run: r as u64,
                status: tr.status,
            });
        }
    }
    let n_t = first.times.len();
    let n_c = first.names.len();
    let mut mean = vec![vec![0.0; n_c]; n_t];
    let mut m2 = vec![vec![0.0; n_c]; n_t];
    for (r, tr) in runs.iter().enumerate() {
        let count = (r + 1) as f64;
        for (k, row) in tr.samples.iter().enumerate() {
            for (c, &x) in row.iter().enumerate() {
                let x = x as f64;
                let delta = x - mean[k][c];
                mean[k][c] += delta / count;
                m2[k][c] += delta * (x - mean[k][c]);
            }
        }
    }
    let denom = (runs.len().max(2) - 1) as f64;
    let variance = m2
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|v| if runs.len() == 1 { 0.0 } else { v / denom })
                .collect()
        })
        .collect();
    Ok(EnsembleStats {
        names: first.names.clone(),
        times: first.times.clone(),
        mean,
        variance,
        runs: runs.len(),
    })
}
